#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bci/session.hpp"

namespace bci {

struct IcaModel {
  Eigen::MatrixXd whitening;        // k x channels
  Eigen::MatrixXd unmixing;         // k x channels (rotation * whitening)
  Eigen::MatrixXd mixing;           // channels x k (pseudo-inverse)
  Eigen::VectorXd component_means;  // per-channel mean removed before fit
  int n_components{0};
  bool converged{false};
  int iterations{0};
};

// Symmetric (parallel) FastICA with tanh contrast on centered, PCA-whitened
// data. Deterministic given the seed.
IcaModel fastica_fit(const Eigen::MatrixXd& signal, int n_components,
                     std::uint64_t seed, double tol = 1e-4,
                     int max_iter = 200);

// Components whose source correlates with the mean of Fp1/Fp2 above the
// threshold, ordered by absolute correlation descending.
std::vector<int> detect_artifact_components(const IcaModel& model,
                                            const Eigen::MatrixXd& signal,
                                            double threshold = 0.7);

// Zeroes the flagged sources and reconstructs the signal.
Eigen::MatrixXd remove_components(const IcaModel& model,
                                  const Eigen::MatrixXd& signal,
                                  const std::vector<int>& indices);

}  // namespace bci
