#include "bci/ica.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bci/rng.hpp"

namespace bci {

namespace {

// W <- (W W^T)^{-1/2} W, symmetric decorrelation.
Eigen::MatrixXd sym_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt =
      es.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() *
         es.eigenvectors().transpose() * w;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  if (denom <= 0.0) return 0.0;
  return ac.dot(bc) / denom;
}

}  // namespace

IcaModel fastica_fit(const Eigen::MatrixXd& signal, int n_components,
                     std::uint64_t seed, double tol, int max_iter) {
  const auto c = signal.rows();
  const auto n = signal.cols();
  if (n < 10 * c)
    throw std::invalid_argument("fastica_fit: need at least 10 samples per channel");
  if (n_components < 1 || n_components > c)
    throw std::invalid_argument("fastica_fit: invalid n_components");

  IcaModel model;
  model.n_components = n_components;
  model.component_means = signal.rowwise().mean();

  Eigen::MatrixXd x = signal.colwise() - model.component_means;
  const Eigen::MatrixXd cov = x * x.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // Descending eigenvalues; keep the top n_components.
  const Eigen::VectorXd evals = es.eigenvalues().reverse();
  const Eigen::MatrixXd evecs = es.eigenvectors().rowwise().reverse();
  if (evals(n_components - 1) < 1e-12 * std::max(1e-300, evals(0)))
    throw std::runtime_error(
        "fastica_fit: rank-deficient covariance; remove a redundant channel "
        "or reduce n_components");

  model.whitening.resize(n_components, c);
  for (int i = 0; i < n_components; ++i)
    model.whitening.row(i) = evecs.col(i).transpose() / std::sqrt(evals(i));

  const Eigen::MatrixXd z = model.whitening * x;  // k x n, identity covariance

  auto rng = make_rng(mix_seed(seed, 0x49434173ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd w(n_components, n_components);
  for (int i = 0; i < n_components; ++i)
    for (int j = 0; j < n_components; ++j) w(i, j) = gauss(rng);
  w = sym_decorrelate(w);

  model.converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd y = w * z;                      // k x n
    const Eigen::MatrixXd g = y.array().tanh().matrix();  // tanh contrast
    const Eigen::VectorXd g_prime_mean =
        (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_new =
        g * z.transpose() / static_cast<double>(n) -
        g_prime_mean.asDiagonal() * w;
    w_new = sym_decorrelate(w_new);
    const double delta =
        ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0)
            .abs()
            .maxCoeff();
    w = w_new;
    model.iterations = it + 1;
    if (delta < tol) {
      model.converged = true;
      break;
    }
  }

  model.unmixing = w * model.whitening;  // k x c
  // Pseudo-inverse via the whitening structure: mixing = E D^{1/2} W^T.
  Eigen::MatrixXd dewhiten(c, n_components);
  for (int i = 0; i < n_components; ++i)
    dewhiten.col(i) = evecs.col(i) * std::sqrt(evals(i));
  model.mixing = dewhiten * w.transpose();
  return model;
}

std::vector<int> detect_artifact_components(const IcaModel& model,
                                            const Eigen::MatrixXd& signal,
                                            double threshold) {
  const Eigen::MatrixXd x = signal.colwise() - model.component_means;
  const Eigen::MatrixXd sources = model.unmixing * x;
  const Eigen::VectorXd frontal =
      (signal.row(kFp1) + signal.row(kFp2)).transpose() / 2.0;

  std::vector<std::pair<double, int>> hits;
  for (int i = 0; i < model.n_components; ++i) {
    const double r = std::abs(pearson(sources.row(i).transpose(), frontal));
    if (r > threshold) hits.emplace_back(r, i);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  std::vector<int> out;
  for (const auto& [r, i] : hits) out.push_back(i);
  return out;
}

Eigen::MatrixXd remove_components(const IcaModel& model,
                                  const Eigen::MatrixXd& signal,
                                  const std::vector<int>& indices) {
  for (int i : indices)
    if (i < 0 || i >= model.n_components)
      throw std::out_of_range("remove_components: component index out of range");

  const Eigen::MatrixXd x = signal.colwise() - model.component_means;
  Eigen::MatrixXd sources = model.unmixing * x;
  for (int i : indices) sources.row(i).setZero();
  Eigen::MatrixXd out = model.mixing * sources;
  out.colwise() += model.component_means;
  return out;
}

}  // namespace bci
