#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bci {

// Throws unless m is symmetric (1e-9) with all eigenvalues > 0.
void check_spd(const Eigen::MatrixXd& m);

// Eigendecomposition-based matrix functions on SPD inputs.
Eigen::MatrixXd spd_log(const Eigen::MatrixXd& m);
Eigen::MatrixXd spd_exp(const Eigen::MatrixXd& m);  // input symmetric
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m);
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& m);

// Affine-invariant metric: ||log(A^{-1/2} B A^{-1/2})||_F.
double riemannian_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Karcher mean by fixed-point iteration on the tangent average, initialized
// at the arithmetic mean. Throws on non-convergence, reporting the residual.
Eigen::MatrixXd riemannian_mean(const std::vector<Eigen::MatrixXd>& mats,
                                double tol = 1e-8, int max_iter = 50);

// Upper-triangular vectorization of log(G^{-1/2} S G^{-1/2}) with
// off-diagonal entries scaled by sqrt(2); dim = n(n+1)/2.
Eigen::VectorXd tangent_vector(const Eigen::MatrixXd& ref_inv_sqrt,
                               const Eigen::MatrixXd& s);

// Inverse of tangent_vector for a given reference.
Eigen::MatrixXd tangent_unvector(const Eigen::MatrixXd& ref_sqrt,
                                 const Eigen::VectorXd& v);

}  // namespace bci
