#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "bci/estimators.hpp"

namespace bci {

namespace {

constexpr double kC = 1.0;
constexpr double kTol = 1e-3;
constexpr std::size_t kCacheBytes = std::size_t{1} << 30;

// RBF kernel rows computed on demand with LRU eviction; the full matrix is
// never materialized, which keeps large statistics-mode datasets trainable.
class KernelCache {
 public:
  KernelCache(const Eigen::MatrixXf& x, double gamma)
      : x_(x), sq_(x.rowwise().squaredNorm()), gamma_(gamma) {
    const std::size_t row_bytes = sizeof(float) * x.rows();
    max_rows_ = std::max<std::size_t>(2, kCacheBytes / std::max<std::size_t>(
                                             row_bytes, 1));
  }

  const Eigen::VectorXf& row(Eigen::Index k) {
    auto it = rows_.find(k);
    if (it != rows_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.first);
      return it->second.second;
    }
    if (rows_.size() >= max_rows_) {
      rows_.erase(lru_.back());
      lru_.pop_back();
    }
    lru_.push_front(k);
    Eigen::VectorXf r = (-gamma_ *
                         (sq_.array() + sq_(k) -
                          2.0f * (x_ * x_.row(k).transpose()).array()))
                            .exp();
    auto pos =
        rows_.emplace(k, std::make_pair(lru_.begin(), std::move(r))).first;
    return pos->second.second;
  }

 private:
  const Eigen::MatrixXf& x_;
  Eigen::VectorXf sq_;
  float gamma_;
  std::size_t max_rows_{0};
  std::list<Eigen::Index> lru_;
  std::unordered_map<Eigen::Index,
                     std::pair<std::list<Eigen::Index>::iterator,
                               Eigen::VectorXf>>
      rows_;
};

}  // namespace

void SvmRbf::fit(const PipelineData& x_in, const std::vector<int>& y) {
  if (!x_in.is_flat)
    throw std::invalid_argument("svm: expects flat feature vectors");
  const Eigen::MatrixXd& x = x_in.flat;

  std::set<int> cls(y.begin(), y.end());
  if (cls.size() != 2)
    throw std::invalid_argument("svm: binary model needs exactly two classes");
  label_neg = *cls.begin();
  label_pos = *cls.rbegin();

  const auto n = x.rows();
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i)
    yv(i) = y[static_cast<std::size_t>(i)] == label_pos ? 1.0 : -1.0;

  // "scale" gamma: 1 / (p * Var over all entries of the training matrix).
  const double mean_all = x.mean();
  const double var_all = (x.array() - mean_all).square().mean();
  gamma = 1.0 / (static_cast<double>(x.cols()) * std::max(var_all, 1e-12));

  const Eigen::MatrixXf xf = x.cast<float>();
  KernelCache cache(xf, gamma);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q a - e

  const long max_iter = std::max<long>(10000000L, 100L * n);
  long it = 0;
  double m_up = 0.0, m_low = 0.0;
  for (; it < max_iter; ++it) {
    // Maximal violating pair working-set selection.
    Eigen::Index i_up = -1, i_low = -1;
    m_up = -std::numeric_limits<double>::infinity();
    m_low = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double v = -yv(k) * grad(k);
      const bool in_up = (yv(k) > 0 && alpha(k) < kC) ||
                         (yv(k) < 0 && alpha(k) > 0);
      const bool in_low = (yv(k) < 0 && alpha(k) < kC) ||
                          (yv(k) > 0 && alpha(k) > 0);
      if (in_up && v > m_up) {
        m_up = v;
        i_up = k;
      }
      if (in_low && v < m_low) {
        m_low = v;
        i_low = k;
      }
    }
    if (i_up < 0 || i_low < 0 || m_up - m_low <= kTol) break;

    const Eigen::Index i = i_up, j = i_low;
    const Eigen::VectorXf& row_i = cache.row(i);
    const float k_ij = row_i(j);
    // RBF diagonal is identically 1.
    double quad = 2.0 - 2.0 * yv(i) * yv(j) * static_cast<double>(k_ij);
    if (quad <= 0.0) quad = 1e-12;
    double delta = (m_up - m_low) / quad;

    // Box constraints for alpha_i += y_i * delta, alpha_j -= y_j * delta.
    double hi = std::numeric_limits<double>::infinity();
    if (yv(i) > 0)
      hi = std::min(hi, kC - alpha(i));
    else
      hi = std::min(hi, alpha(i));
    if (yv(j) > 0)
      hi = std::min(hi, alpha(j));
    else
      hi = std::min(hi, kC - alpha(j));
    delta = std::clamp(delta, 0.0, hi);
    if (delta <= 0.0) break;

    const double dai = yv(i) * delta;
    alpha(i) += dai;
    grad += (yv.array() * row_i.cast<double>().array()).matrix() *
            (yv(i) * dai);
    const Eigen::VectorXf& row_j = cache.row(j);
    const double daj = -yv(j) * delta;
    alpha(j) += daj;
    grad += (yv.array() * row_j.cast<double>().array()).matrix() *
            (yv(j) * daj);
  }

  rho = -(m_up + m_low) / 2.0;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index k = 0; k < n; ++k)
    if (alpha(k) > 1e-12) sv.push_back(k);
  support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
    dual_coef(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * yv(sv[s]);
  }
}

std::vector<double> SvmRbf::decision_scores(const PipelineData& x_in) const {
  if (!x_in.is_flat)
    throw std::invalid_argument("svm: expects flat feature vectors");
  const Eigen::MatrixXd& x = x_in.flat;
  if (x.cols() != support_vectors.cols())
    throw std::invalid_argument("svm: dimension mismatch");

  const Eigen::VectorXd sv_sq = support_vectors.rowwise().squaredNorm();
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  constexpr Eigen::Index kBlock = 512;
  for (Eigen::Index start = 0; start < x.rows(); start += kBlock) {
    const Eigen::Index m = std::min(kBlock, x.rows() - start);
    const Eigen::MatrixXd block = x.middleRows(start, m);
    Eigen::MatrixXd d2 = -2.0 * block * support_vectors.transpose();
    d2.rowwise() += sv_sq.transpose();
    d2.colwise() += block.rowwise().squaredNorm();
    const Eigen::VectorXd f =
        (-gamma * d2.array()).exp().matrix() * dual_coef;
    for (Eigen::Index i = 0; i < m; ++i)
      out[static_cast<std::size_t>(start + i)] = f(i) - rho;
  }
  return out;
}

std::vector<int> SvmRbf::predict(const PipelineData& x_in) const {
  std::vector<int> out;
  for (double s : decision_scores(x_in))
    out.push_back(s >= 0.0 ? label_pos : label_neg);
  return out;
}

}  // namespace bci
