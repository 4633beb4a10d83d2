#include "bci/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "bci/spd.hpp"

namespace bci {

namespace {

const Eigen::MatrixXd& flat_input(const PipelineData& x,
                                  const std::string& who) {
  if (!x.is_flat)
    throw std::invalid_argument(who + ": expects flat feature vectors");
  return x.flat;
}

std::vector<int> sorted_classes(const std::vector<int>& y) {
  std::set<int> s(y.begin(), y.end());
  return std::vector<int>(s.begin(), s.end());
}

void require_two_classes(const std::vector<int>& classes,
                         const std::string& who) {
  if (classes.size() < 2)
    throw std::invalid_argument(who + ": fit needs at least two classes");
}

// Ledoit-Wolf shrinkage of the covariance of centered rows of x.
Eigen::MatrixXd ledoit_wolf(const Eigen::MatrixXd& centered) {
  const double n = static_cast<double>(centered.rows());
  const auto p = centered.cols();
  Eigen::MatrixXd emp = centered.transpose() * centered / n;
  emp = ((emp + emp.transpose()) / 2.0).eval();

  const double mu = emp.trace() / static_cast<double>(p);
  double delta = (emp - mu * Eigen::MatrixXd::Identity(p, p)).squaredNorm() /
                 static_cast<double>(p);
  const Eigen::MatrixXd x2 = centered.array().square().matrix();
  const Eigen::MatrixXd second = x2.transpose() * x2 / n;
  double beta = (second - emp.array().square().matrix()).sum() /
                (n * static_cast<double>(p));
  beta = std::min(beta, delta);
  const double shrinkage = delta > 0.0 ? beta / delta : 0.0;
  return (1.0 - shrinkage) * emp +
         shrinkage * mu * Eigen::MatrixXd::Identity(p, p);
}

}  // namespace

// ---------------------------------------------------------------- logistic

void LogisticRegression::fit(const PipelineData& x_in,
                             const std::vector<int>& y) {
  const Eigen::MatrixXd& x = flat_input(x_in, "logistic_regression");
  const auto classes = sorted_classes(y);
  require_two_classes(classes, "logistic_regression");
  if (classes.size() != 2)
    throw std::invalid_argument(
        "logistic_regression: binary model got more than two classes");
  label_neg = classes[0];
  label_pos = classes[1];

  const auto n = x.rows();
  const auto p = x.cols();
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i)
    t(i) = y[static_cast<std::size_t>(i)] == label_pos ? 1.0 : 0.0;

  weights = Eigen::VectorXd::Zero(p);
  bias = 0.0;
  const double lambda = 1.0;  // L2 strength, C = 1
  const bool use_newton = p <= 600;

  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd z =
        (x * weights).array() + bias;
    const Eigen::VectorXd prob =
        (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd r = prob - t;
    Eigen::VectorXd grad_w = x.transpose() * r + lambda * weights;
    const double grad_b = r.sum();
    const double gnorm =
        std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
    if (gnorm <= 1e-4) break;

    if (use_newton) {
      const Eigen::VectorXd w_diag =
          (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10).matrix();
      // Augmented Hessian including the bias column.
      Eigen::MatrixXd h(p + 1, p + 1);
      const Eigen::MatrixXd xw =
          x.array().colwise() * w_diag.array();
      h.topLeftCorner(p, p) = x.transpose() * xw;
      h.topLeftCorner(p, p) +=
          lambda * Eigen::MatrixXd::Identity(p, p);
      h.topRightCorner(p, 1) = xw.colwise().sum().transpose();
      h.bottomLeftCorner(1, p) = xw.colwise().sum();
      h(p, p) = w_diag.sum();
      Eigen::VectorXd g(p + 1);
      g.head(p) = grad_w;
      g(p) = grad_b;
      const Eigen::VectorXd delta = h.ldlt().solve(g);
      weights -= delta.head(p);
      bias -= delta(p);
    } else {
      // Wide input: Newton step solved matrix-free by conjugate gradient on
      // Hessian-vector products.
      const Eigen::VectorXd w_diag =
          (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10).matrix();
      auto hess_vec = [&](const Eigen::VectorXd& v) {
        const Eigen::VectorXd xv =
            (x * v.head(p)).array() + v(p);
        const Eigen::VectorXd wxv = w_diag.cwiseProduct(xv);
        Eigen::VectorXd out(p + 1);
        out.head(p) = x.transpose() * wxv + lambda * v.head(p);
        out(p) = wxv.sum();
        return out;
      };
      Eigen::VectorXd g(p + 1);
      g.head(p) = grad_w;
      g(p) = grad_b;
      Eigen::VectorXd d = Eigen::VectorXd::Zero(p + 1);
      Eigen::VectorXd res = g;
      Eigen::VectorXd dir = res;
      double rs = res.squaredNorm();
      for (int cg = 0; cg < 50 && rs > 1e-12 * g.squaredNorm(); ++cg) {
        const Eigen::VectorXd hd = hess_vec(dir);
        const double alpha = rs / dir.dot(hd);
        d += alpha * dir;
        res -= alpha * hd;
        const double rs_new = res.squaredNorm();
        dir = res + (rs_new / rs) * dir;
        rs = rs_new;
      }
      weights -= d.head(p);
      bias -= d(p);
    }
  }
}

std::vector<double> LogisticRegression::decision_scores(
    const PipelineData& x_in) const {
  const Eigen::MatrixXd& x = flat_input(x_in, "logistic_regression");
  if (x.cols() != weights.size())
    throw std::invalid_argument("logistic_regression: dimension mismatch");
  const Eigen::VectorXd z = (x * weights).array() + bias;
  std::vector<double> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-z(i)));
  return out;
}

std::vector<int> LogisticRegression::predict(const PipelineData& x_in) const {
  std::vector<int> out;
  for (double s : decision_scores(x_in))
    out.push_back(s >= 0.5 ? label_pos : label_neg);
  return out;
}

// --------------------------------------------------------------------- LDA

void Lda::fit(const PipelineData& x_in, const std::vector<int>& y) {
  const Eigen::MatrixXd& x = flat_input(x_in, "lda");
  classes = sorted_classes(y);
  require_two_classes(classes, "lda");
  const auto n = x.rows();
  const auto p = x.cols();
  const auto k = static_cast<Eigen::Index>(classes.size());

  means.setZero(k, p);
  log_priors.resize(k);
  Eigen::MatrixXd centered(n, p);
  std::map<int, Eigen::Index> class_idx;
  for (Eigen::Index c = 0; c < k; ++c)
    class_idx[classes[static_cast<std::size_t>(c)]] = c;

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Eigen::Index c = class_idx[y[i]];
    means.row(c) += x.row(static_cast<Eigen::Index>(i));
    counts(c) += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    means.row(c) /= counts(c);
    log_priors(c) = std::log(counts(c) / static_cast<double>(n));
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    centered.row(static_cast<Eigen::Index>(i)) =
        x.row(static_cast<Eigen::Index>(i)) - means.row(class_idx[y[i]]);

  const Eigen::MatrixXd cov = ledoit_wolf(centered);
  // Inverse through the eigendecomposition; the shrunk matrix is PD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd inv = es.eigenvalues().cwiseMax(1e-300).cwiseInverse();
  cov_inv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd Lda::discriminants(const PipelineData& x_in) const {
  const Eigen::MatrixXd& x = flat_input(x_in, "lda");
  if (x.cols() != means.cols())
    throw std::invalid_argument("lda: dimension mismatch");
  const Eigen::MatrixXd proj = cov_inv * means.transpose();  // p x K
  Eigen::MatrixXd d = x * proj;                              // n x K
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    const double offset =
        -0.5 * means.row(c).dot(proj.col(c)) + log_priors(c);
    d.col(c).array() += offset;
  }
  return d;
}

std::vector<int> Lda::predict(const PipelineData& x_in) const {
  const Eigen::MatrixXd d = discriminants(x_in);
  std::vector<int> out(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index best = 0;
    d.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<double> Lda::decision_scores(const PipelineData& x_in) const {
  const Eigen::MatrixXd d = discriminants(x_in);
  const Eigen::Index pos = d.cols() - 1;
  std::vector<double> out(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    out[static_cast<std::size_t>(i)] = d(i, pos) - d(i, 0);
  return out;
}

// --------------------------------------------------------------------- QDA

void Qda::fit(const PipelineData& x_in, const std::vector<int>& y) {
  const Eigen::MatrixXd& x = flat_input(x_in, "qda");
  classes = sorted_classes(y);
  require_two_classes(classes, "qda");
  const auto p = x.cols();

  class_means.clear();
  cov_chol.clear();
  log_dets.clear();
  log_priors.resize(static_cast<Eigen::Index>(classes.size()));

  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == classes[ci]) idx.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd xc(static_cast<Eigen::Index>(idx.size()), p);
    for (std::size_t i = 0; i < idx.size(); ++i) xc.row(i) = x.row(idx[i]);
    const Eigen::RowVectorXd mean = xc.colwise().mean();
    xc.rowwise() -= mean;
    Eigen::MatrixXd cov =
        xc.transpose() * xc / static_cast<double>(idx.size());
    const double eps = 1e-6 * cov.trace() / static_cast<double>(p);
    cov += eps * Eigen::MatrixXd::Identity(p, p);

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("qda: covariance not positive definite");
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      log_det += 2.0 * std::log(llt.matrixL()(i, i));

    class_means.push_back(mean.transpose());
    cov_chol.push_back(llt.matrixL());
    log_dets.push_back(log_det);
    log_priors(static_cast<Eigen::Index>(ci)) =
        std::log(static_cast<double>(idx.size()) /
                 static_cast<double>(y.size()));
  }
}

Eigen::MatrixXd Qda::discriminants(const PipelineData& x_in) const {
  const Eigen::MatrixXd& x = flat_input(x_in, "qda");
  if (x.cols() != class_means[0].size())
    throw std::invalid_argument("qda: dimension mismatch");
  Eigen::MatrixXd d(x.rows(), static_cast<Eigen::Index>(classes.size()));
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const Eigen::MatrixXd diff =
        x.rowwise() - class_means[ci].transpose();
    // Solve L z = diff^T; Mahalanobis distance is ||z||^2 per column.
    const Eigen::MatrixXd z = cov_chol[ci]
                                  .triangularView<Eigen::Lower>()
                                  .solve(diff.transpose());
    d.col(static_cast<Eigen::Index>(ci)) =
        (-0.5 * z.array().square().colwise().sum()).transpose().matrix();
    d.col(static_cast<Eigen::Index>(ci)).array() +=
        -0.5 * log_dets[ci] + log_priors(static_cast<Eigen::Index>(ci));
  }
  return d;
}

std::vector<int> Qda::predict(const PipelineData& x_in) const {
  const Eigen::MatrixXd d = discriminants(x_in);
  std::vector<int> out(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index best = 0;
    d.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<double> Qda::decision_scores(const PipelineData& x_in) const {
  const Eigen::MatrixXd d = discriminants(x_in);
  std::vector<double> out(static_cast<std::size_t>(d.rows()));
  const Eigen::Index pos = d.cols() - 1;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    out[static_cast<std::size_t>(i)] = d(i, pos) - d(i, 0);
  return out;
}

// --------------------------------------------------------------------- kNN

void Knn::fit(const PipelineData& x_in, const std::vector<int>& y) {
  const Eigen::MatrixXd& x = flat_input(x_in, "knn");
  require_two_classes(sorted_classes(y), "knn");
  train_x_ = x;
  train_sq_ = x.rowwise().squaredNorm();
  train_y_ = y;
  if (static_cast<std::size_t>(k_) > y.size())
    std::cerr << "knn: k=" << k_ << " clamped to training size " << y.size()
              << "\n";
}

int Knn::effective_k() const {
  return std::min<int>(k_, static_cast<int>(train_y_.size()));
}

std::vector<std::vector<std::pair<int, double>>> Knn::vote_fractions(
    const PipelineData& x_in) const {
  const Eigen::MatrixXd& x = flat_input(x_in, "knn");
  if (x.cols() != train_x_.cols())
    throw std::invalid_argument("knn: dimension mismatch");
  const int k = effective_k();
  const auto n_train = train_x_.rows();
  std::vector<std::vector<std::pair<int, double>>> out(
      static_cast<std::size_t>(x.rows()));

  constexpr Eigen::Index kBlock = 256;
  std::vector<std::pair<double, Eigen::Index>> dists(
      static_cast<std::size_t>(n_train));
  for (Eigen::Index start = 0; start < x.rows(); start += kBlock) {
    const Eigen::Index m = std::min(kBlock, x.rows() - start);
    const Eigen::MatrixXd block = x.middleRows(start, m);
    // Squared distances via the Gram expansion.
    Eigen::MatrixXd d2 =
        (-2.0 * block * train_x_.transpose()).rowwise() +
        train_sq_.transpose();
    d2.colwise() += block.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n_train; ++j)
        dists[static_cast<std::size_t>(j)] = {d2(i, j), j};
      std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
      std::map<int, int> votes;
      for (int j = 0; j < k; ++j)
        ++votes[train_y_[static_cast<std::size_t>(dists[j].second)]];
      auto& entry = out[static_cast<std::size_t>(start + i)];
      for (const auto& [label, count] : votes)
        entry.emplace_back(label, static_cast<double>(count) / k);
    }
  }
  return out;
}

std::vector<int> Knn::predict(const PipelineData& x_in) const {
  std::vector<int> out;
  for (const auto& votes : vote_fractions(x_in)) {
    int best_label = votes[0].first;
    double best_frac = votes[0].second;
    for (const auto& [label, frac] : votes) {
      // Ties resolve to the smallest label; votes are label-sorted.
      if (frac > best_frac) {
        best_frac = frac;
        best_label = label;
      }
    }
    out.push_back(best_label);
  }
  return out;
}

std::vector<double> Knn::decision_scores(const PipelineData& x_in) const {
  int pos = *std::max_element(train_y_.begin(), train_y_.end());
  std::vector<double> out;
  for (const auto& votes : vote_fractions(x_in)) {
    double frac = 0.0;
    for (const auto& [label, f] : votes)
      if (label == pos) frac = f;
    out.push_back(frac);
  }
  return out;
}

// --------------------------------------------------------------------- MDM

void Mdm::fit(const PipelineData& x, const std::vector<int>& y) {
  if (x.is_flat)
    throw std::invalid_argument("mdm: expects SPD matrices, not flat vectors");
  classes = sorted_classes(y);
  require_two_classes(classes, "mdm");
  class_means.clear();
  for (int cls : classes) {
    std::vector<Eigen::MatrixXd> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(x.mats[i]);
    class_means.push_back(riemannian_mean(members));
  }
}

std::vector<int> Mdm::predict(const PipelineData& x) const {
  if (x.is_flat) throw std::invalid_argument("mdm: expects SPD matrices");
  std::vector<int> out;
  for (const auto& m : x.mats) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < class_means.size(); ++c) {
      const double d = riemannian_distance(class_means[c], m);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out.push_back(classes[best]);
  }
  return out;
}

std::vector<double> Mdm::decision_scores(const PipelineData& x) const {
  if (x.is_flat) throw std::invalid_argument("mdm: expects SPD matrices");
  // Negative distance to the positive-class mean.
  std::vector<double> out;
  for (const auto& m : x.mats)
    out.push_back(-riemannian_distance(class_means.back(), m));
  return out;
}

// --------------------------------------------------------------- one-vs-rest

OneVsRest::OneVsRest(const OneVsRest& other) : base_(other.base_->clone()) {
  classes = other.classes;
  for (const auto& m : other.models) models.push_back(m->clone());
}

void OneVsRest::fit(const PipelineData& x, const std::vector<int>& y) {
  classes = sorted_classes(y);
  require_two_classes(classes, "one_vs_rest");
  models.clear();
  for (int cls : classes) {
    std::vector<int> rest(y.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      rest[i] = y[i] == cls ? 1 : 0;
      (rest[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
      throw std::runtime_error("one_vs_rest: degenerate rest fold for class " +
                               std::to_string(cls));
    auto model = base_->clone();
    model->fit(x, rest);
    models.push_back(std::move(model));
  }
}

std::vector<int> OneVsRest::predict(const PipelineData& x) const {
  std::vector<std::vector<double>> scores;
  for (const auto& m : models) scores.push_back(m->decision_scores(x));
  std::vector<int> out(scores[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < models.size(); ++c)
      if (scores[c][i] > scores[best][i]) best = c;  // ties keep smallest id
    out[i] = classes[best];
  }
  return out;
}

std::vector<double> OneVsRest::decision_scores(const PipelineData& x) const {
  return models.back()->decision_scores(x);
}

// ------------------------------------------------------------------ factory

std::unique_ptr<Estimator> make_estimator(const std::string& name) {
  if (name == "LR") return std::make_unique<LogisticRegression>();
  if (name == "LDA") return std::make_unique<Lda>();
  if (name == "MDM") return std::make_unique<Mdm>();
  if (name == "RF") return std::make_unique<RandomForest>();
  if (name == "QDA") return std::make_unique<Qda>();
  if (name == "SVM") return std::make_unique<SvmRbf>();
  if (name == "KNN") return std::make_unique<Knn>();
  throw std::invalid_argument("make_estimator: unknown estimator " + name);
}

}  // namespace bci
