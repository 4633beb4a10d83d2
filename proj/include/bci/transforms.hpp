#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bci {

// Data flowing through a pipeline: either a list of per-trial matrices
// (epochs, spatially filtered epochs, covariance matrices) or a flat
// sample-by-feature matrix.
struct PipelineData {
  std::vector<Eigen::MatrixXd> mats;
  Eigen::MatrixXd flat;
  bool is_flat{false};

  std::size_t size() const {
    return is_flat ? static_cast<std::size_t>(flat.rows()) : mats.size();
  }

  static PipelineData from_mats(std::vector<Eigen::MatrixXd> m);
  static PipelineData from_flat(Eigen::MatrixXd x);
};

// Row-major flattening of each trial matrix; identity on flat input.
struct Vectorizer {
  void fit(const PipelineData&, const std::vector<int>&) {}
  PipelineData transform(const PipelineData& in) const;
};

// Per-feature (x - mu) / sigma with train statistics; zero-variance
// features map to zero.
struct StandardScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;
  bool fitted{false};

  void fit(const PipelineData& in, const std::vector<int>&);
  PipelineData transform(const PipelineData& in) const;
};

// Spatial filters maximizing the evoked-response-to-signal ratio: top
// generalized eigenvectors of (prototype covariance, signal covariance).
// Built from the target class only.
struct Xdawn {
  int nfilter{2};
  Eigen::MatrixXd filters;  // nfilter x channels
  bool fitted{false};

  void fit(const PipelineData& epochs, const std::vector<int>& labels);
  PipelineData transform(const PipelineData& in) const;
};

// Super-trial covariance [prototype; trial] with OAS shrinkage; output is
// a 2c x 2c SPD matrix per trial.
struct ErpCovariance {
  Eigen::MatrixXd prototype;  // channels x samples, mean target epoch
  bool fitted{false};

  void fit(const PipelineData& epochs, const std::vector<int>& labels);
  PipelineData transform(const PipelineData& in) const;
};

// Projection to the tangent space at the Riemannian mean of the training
// covariance matrices.
struct TangentSpace {
  Eigen::MatrixXd ref_inv_sqrt;
  Eigen::MatrixXd ref_sqrt;
  bool fitted{false};

  void fit(const PipelineData& spds, const std::vector<int>&);
  PipelineData transform(const PipelineData& in) const;
};

// OAS-shrunk covariance of the rows of x (variables = rows, observations =
// columns); rows are centered first when `center` is set.
Eigen::MatrixXd oas_covariance(const Eigen::MatrixXd& x, bool center = true);

}  // namespace bci
