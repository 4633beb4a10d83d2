#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bci {

enum class MetricAveraging {
  binary_positive,  // precision/recall/f1 of the largest label
  macro,            // unweighted mean of per-class scores
};

struct Metrics {
  double accuracy{0.0};
  double precision{0.0};
  double recall{0.0};
  double f1{0.0};
  std::vector<int> classes;        // sorted label set
  Eigen::MatrixXi confusion;       // rows = true, cols = predicted
  std::vector<double> per_class_f1;
};

// Confusion matrix over the sorted union of labels seen in either vector.
// f1 = 0 when precision + recall = 0.
Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<int>& y_pred,
                        MetricAveraging averaging);

}  // namespace bci
