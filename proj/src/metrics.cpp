#include "bci/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace bci {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from(double precision, double recall) {
  const double denom = precision + recall;
  return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

}  // namespace

Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<int>& y_pred,
                        MetricAveraging averaging) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  if (y_true.empty())
    throw std::invalid_argument("compute_metrics: empty input");

  std::set<int> label_set(y_true.begin(), y_true.end());
  label_set.insert(y_pred.begin(), y_pred.end());

  Metrics m;
  m.classes.assign(label_set.begin(), label_set.end());
  const int k = static_cast<int>(m.classes.size());
  auto index_of = [&](int label) {
    return static_cast<int>(std::lower_bound(m.classes.begin(),
                                             m.classes.end(), label) -
                            m.classes.begin());
  };

  m.confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < y_true.size(); ++i)
    m.confusion(index_of(y_true[i]), index_of(y_pred[i])) += 1;

  m.accuracy = static_cast<double>(m.confusion.trace()) /
               static_cast<double>(y_true.size());

  std::vector<double> precs(k), recs(k);
  m.per_class_f1.resize(k);
  for (int c = 0; c < k; ++c) {
    const double tp = m.confusion(c, c);
    precs[c] = safe_div(tp, m.confusion.col(c).sum());
    recs[c] = safe_div(tp, m.confusion.row(c).sum());
    m.per_class_f1[c] = f1_from(precs[c], recs[c]);
  }

  if (averaging == MetricAveraging::binary_positive) {
    const int pos = k - 1;  // largest label is the positive class
    m.precision = precs[pos];
    m.recall = recs[pos];
    m.f1 = m.per_class_f1[pos];
  } else {
    m.precision = 0.0;
    m.recall = 0.0;
    m.f1 = 0.0;
    for (int c = 0; c < k; ++c) {
      m.precision += precs[c];
      m.recall += recs[c];
      m.f1 += m.per_class_f1[c];
    }
    m.precision /= k;
    m.recall /= k;
    m.f1 /= k;
  }
  return m;
}

}  // namespace bci
