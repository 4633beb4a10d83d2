#include "bci/spd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bci {

namespace {

using Solver = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>;

Eigen::MatrixXd apply_spectral(const Eigen::MatrixXd& m,
                               double (*fn)(double), bool require_positive) {
  Solver es(m);
  Eigen::VectorXd evals = es.eigenvalues();
  if (require_positive && evals.minCoeff() <= 0.0)
    throw std::runtime_error("spd: matrix is not positive definite (min "
                             "eigenvalue " + std::to_string(evals.minCoeff()) +
                             ")");
  for (Eigen::Index i = 0; i < evals.size(); ++i) evals(i) = fn(evals(i));
  return es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void check_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spd: not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("spd: not symmetric");
  Solver es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("spd: not positive definite");
}

Eigen::MatrixXd spd_log(const Eigen::MatrixXd& m) {
  return apply_spectral(m, [](double x) { return std::log(x); }, true);
}

Eigen::MatrixXd spd_exp(const Eigen::MatrixXd& m) {
  return apply_spectral(m, [](double x) { return std::exp(x); }, false);
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m) {
  return apply_spectral(m, [](double x) { return std::sqrt(x); }, true);
}

Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& m) {
  return apply_spectral(
      m, [](double x) { return 1.0 / std::sqrt(x); }, true);
}

double riemannian_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd ais = spd_inv_sqrt(a);
  return spd_log(ais * b * ais).norm();
}

Eigen::MatrixXd riemannian_mean(const std::vector<Eigen::MatrixXd>& mats,
                                double tol, int max_iter) {
  if (mats.empty()) throw std::invalid_argument("riemannian_mean: empty list");
  Eigen::MatrixXd g = mats[0];
  for (std::size_t i = 1; i < mats.size(); ++i) g += mats[i];
  g /= static_cast<double>(mats.size());

  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd g_sqrt = spd_sqrt(g);
    const Eigen::MatrixXd g_inv_sqrt = spd_inv_sqrt(g);
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(g.rows(), g.cols());
    for (const auto& m : mats) avg += spd_log(g_inv_sqrt * m * g_inv_sqrt);
    avg /= static_cast<double>(mats.size());
    // Numerical symmetrization; the product above drifts slightly.
    avg = ((avg + avg.transpose()) / 2.0).eval();
    residual = avg.norm();
    g = g_sqrt * spd_exp(avg) * g_sqrt;
    g = ((g + g.transpose()) / 2.0).eval();
    if (residual < tol) return g;
  }
  throw std::runtime_error("riemannian_mean: no convergence after " +
                           std::to_string(max_iter) +
                           " iterations, residual " + std::to_string(residual));
}

Eigen::VectorXd tangent_vector(const Eigen::MatrixXd& ref_inv_sqrt,
                               const Eigen::MatrixXd& s) {
  Eigen::MatrixXd w = ref_inv_sqrt * s * ref_inv_sqrt;
  w = ((w + w.transpose()) / 2.0).eval();
  const Eigen::MatrixXd l = spd_log(w);
  const Eigen::Index n = l.rows();
  Eigen::VectorXd v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  const double root2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      v(k++) = i == j ? l(i, j) : root2 * l(i, j);
  return v;
}

Eigen::MatrixXd tangent_unvector(const Eigen::MatrixXd& ref_sqrt,
                                 const Eigen::VectorXd& v) {
  const Eigen::Index n = ref_sqrt.rows();
  if (v.size() != n * (n + 1) / 2)
    throw std::invalid_argument("tangent_unvector: wrong vector length");
  Eigen::MatrixXd l(n, n);
  Eigen::Index k = 0;
  const double root2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double x = i == j ? v(k) : v(k) / root2;
      l(i, j) = x;
      l(j, i) = x;
      ++k;
    }
  return ref_sqrt * spd_exp(l) * ref_sqrt;
}

}  // namespace bci
