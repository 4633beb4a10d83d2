#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bci/transforms.hpp"

namespace bci {

// Common fit/predict surface. Estimators consuming flat vectors reject
// matrix-list input and vice versa (MDM wants SPD matrices).
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual void fit(const PipelineData& x, const std::vector<int>& y) = 0;
  virtual std::vector<int> predict(const PipelineData& x) const = 0;
  // Decision score for the largest label (binary models only); used by the
  // one-vs-rest reduction. Probability, margin or negative distance.
  virtual std::vector<double> decision_scores(const PipelineData& x) const = 0;
  virtual std::unique_ptr<Estimator> clone() const = 0;
  virtual std::string name() const = 0;
  // True when the model is binary-only and needs one-vs-rest for K > 2.
  virtual bool binary_only() const { return false; }
};

// Binary logistic regression, L2 penalty equivalent to C = 1. Newton/IRLS
// for narrow inputs, gradient descent with backtracking otherwise; stops at
// gradient norm <= 1e-4 or 100 outer iterations.
class LogisticRegression : public Estimator {
 public:
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<LogisticRegression>(*this);
  }
  std::string name() const override { return "LR"; }
  bool binary_only() const override { return true; }

  Eigen::VectorXd weights;
  double bias{0.0};
  int label_neg{0}, label_pos{1};
};

// LDA with Ledoit-Wolf-shrunk pooled within-class covariance; discriminants
// through the eigendecomposition of the shrunk covariance.
class Lda : public Estimator {
 public:
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<Lda>(*this);
  }
  std::string name() const override { return "LDA"; }

  std::vector<int> classes;
  Eigen::MatrixXd means;       // K x p
  Eigen::MatrixXd cov_inv;     // p x p
  Eigen::VectorXd log_priors;  // K

 private:
  Eigen::MatrixXd discriminants(const PipelineData& x) const;
};

// QDA with per-class ridge epsilon = 1e-6 * trace / p.
class Qda : public Estimator {
 public:
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<Qda>(*this);
  }
  std::string name() const override { return "QDA"; }

  std::vector<int> classes;
  std::vector<Eigen::VectorXd> class_means;
  std::vector<Eigen::MatrixXd> cov_chol;  // lower Cholesky factors
  std::vector<double> log_dets;
  Eigen::VectorXd log_priors;

 private:
  Eigen::MatrixXd discriminants(const PipelineData& x) const;
};

// k-nearest neighbours, k = 50 clamped to the training size, Euclidean,
// majority vote with ties broken by the smallest label.
class Knn : public Estimator {
 public:
  explicit Knn(int k = 50) : k_(k) {}
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<Knn>(*this);
  }
  std::string name() const override { return "KNN"; }

  int effective_k() const;

  int k_{50};
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd train_sq_;
  std::vector<int> train_y_;

 private:
  std::vector<std::vector<std::pair<int, double>>> vote_fractions(
      const PipelineData& x) const;
};

// Minimum distance to the per-class Riemannian mean covariance.
class Mdm : public Estimator {
 public:
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<Mdm>(*this);
  }
  std::string name() const override { return "MDM"; }

  std::vector<int> classes;
  std::vector<Eigen::MatrixXd> class_means;
};

// Random forest: 100 trees, Gini impurity, sqrt(p) feature subsampling,
// bootstrap, no depth limit; all randomness derived from the seed.
class RandomForest : public Estimator {
 public:
  explicit RandomForest(int n_trees = 100, std::uint64_t seed = 42)
      : n_trees_(n_trees), seed_(seed) {}
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<RandomForest>(*this);
  }
  std::string name() const override { return "RF"; }

  struct Node {
    int feature{-1};  // -1 for leaves
    float threshold{0.0f};
    std::int32_t left{-1}, right{-1};
    std::int32_t leaf_class{-1};
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  std::vector<int> classes;
  std::vector<Tree> trees;

  // Per-sample class vote fractions across trees.
  Eigen::MatrixXd vote_matrix(const PipelineData& x) const;

 private:
  int n_trees_{100};
  std::uint64_t seed_{42};
  Eigen::MatrixXf train_;  // retained only during fit
};

// RBF-kernel SVM trained with SMO (maximal violating pair), C = 1,
// gamma = 1 / (p * Var(train)), tolerance 1e-3.
class SvmRbf : public Estimator {
 public:
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<SvmRbf>(*this);
  }
  std::string name() const override { return "SVM"; }
  bool binary_only() const override { return true; }

  Eigen::MatrixXd support_vectors;
  Eigen::VectorXd dual_coef;  // alpha_i * y_i
  double rho{0.0};
  double gamma{0.0};
  int label_neg{0}, label_pos{1};
};

// One-vs-rest reduction: one binary model per class, argmax of decision
// scores, ties broken by the smallest class id.
class OneVsRest : public Estimator {
 public:
  explicit OneVsRest(std::unique_ptr<Estimator> base) : base_(std::move(base)) {}
  OneVsRest(const OneVsRest& other);
  void fit(const PipelineData& x, const std::vector<int>& y) override;
  std::vector<int> predict(const PipelineData& x) const override;
  std::vector<double> decision_scores(const PipelineData& x) const override;
  std::unique_ptr<Estimator> clone() const override {
    return std::make_unique<OneVsRest>(*this);
  }
  std::string name() const override { return "OvR(" + base_->name() + ")"; }

  std::vector<int> classes;
  std::vector<std::unique_ptr<Estimator>> models;

 private:
  std::unique_ptr<Estimator> base_;
};

// Factory by table name: LR, LDA, MDM, RF, QDA, SVM, KNN.
std::unique_ptr<Estimator> make_estimator(const std::string& name);

}  // namespace bci
