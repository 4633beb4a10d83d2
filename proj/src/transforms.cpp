#include "bci/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bci/spd.hpp"

namespace bci {

PipelineData PipelineData::from_mats(std::vector<Eigen::MatrixXd> m) {
  PipelineData d;
  d.mats = std::move(m);
  d.is_flat = false;
  return d;
}

PipelineData PipelineData::from_flat(Eigen::MatrixXd x) {
  PipelineData d;
  d.flat = std::move(x);
  d.is_flat = true;
  return d;
}

PipelineData Vectorizer::transform(const PipelineData& in) const {
  if (in.is_flat) return in;
  if (in.mats.empty())
    throw std::invalid_argument("vectorizer: empty input");
  const Eigen::Index rows = in.mats[0].rows();
  const Eigen::Index cols = in.mats[0].cols();
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(in.mats.size()), rows * cols);
  for (std::size_t i = 0; i < in.mats.size(); ++i) {
    const auto& m = in.mats[i];
    if (m.rows() != rows || m.cols() != cols)
      throw std::invalid_argument("vectorizer: inconsistent trial shapes");
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        flat(static_cast<Eigen::Index>(i), k++) = m(r, c);
  }
  return PipelineData::from_flat(std::move(flat));
}

void StandardScaler::fit(const PipelineData& in, const std::vector<int>&) {
  if (!in.is_flat)
    throw std::invalid_argument("standard_scaler: fit expects flat input");
  const auto n = static_cast<double>(in.flat.rows());
  if (n < 1.0) throw std::invalid_argument("standard_scaler: empty fit data");
  mean = in.flat.colwise().mean();
  const Eigen::RowVectorXd var =
      (in.flat.rowwise() - mean).array().square().colwise().sum() / n;
  inv_std.resize(var.size());
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    const double s = std::sqrt(var(i));
    inv_std(i) = s > 0.0 ? 1.0 / s : 0.0;
  }
  fitted = true;
}

PipelineData StandardScaler::transform(const PipelineData& in) const {
  if (!fitted) throw std::logic_error("standard_scaler: transform before fit");
  if (!in.is_flat)
    throw std::invalid_argument("standard_scaler: expects flat input");
  if (in.flat.cols() != mean.size())
    throw std::invalid_argument("standard_scaler: feature count mismatch");
  Eigen::MatrixXd out = in.flat.rowwise() - mean;
  out = out.array().rowwise() * inv_std.array();
  return PipelineData::from_flat(std::move(out));
}

namespace {

Eigen::MatrixXd target_prototype(const PipelineData& epochs,
                                 const std::vector<int>& labels,
                                 int target_label) {
  if (epochs.is_flat)
    throw std::invalid_argument(
        "transform requires trial matrices, not flat vectors");
  if (epochs.mats.size() != labels.size())
    throw std::invalid_argument("label count mismatch");
  Eigen::MatrixXd proto;
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != target_label) continue;
    if (count == 0)
      proto = epochs.mats[i];
    else
      proto += epochs.mats[i];
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("fit requires the target class present");
  return proto / static_cast<double>(count);
}

}  // namespace

void Xdawn::fit(const PipelineData& epochs, const std::vector<int>& labels) {
  bool has_both = false;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) has_both = true;
  if (!has_both)
    throw std::invalid_argument("xdawn: fit needs both classes present");

  const int target = *std::max_element(labels.begin(), labels.end());
  const Eigen::MatrixXd proto = target_prototype(epochs, labels, target);
  const Eigen::Index c = proto.rows();

  // Prototype covariance.
  const Eigen::MatrixXd pc =
      proto.colwise() - Eigen::VectorXd(proto.rowwise().mean());
  const Eigen::MatrixXd cov_p = pc * pc.transpose() /
                                static_cast<double>(proto.cols());

  // Whole-signal covariance over all concatenated trials.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c);
  double total = 0.0;
  for (const auto& m : epochs.mats) {
    sum += m.rowwise().sum();
    total += static_cast<double>(m.cols());
  }
  const Eigen::VectorXd grand_mean = sum / total;
  Eigen::MatrixXd cov_s = Eigen::MatrixXd::Zero(c, c);
  for (const auto& m : epochs.mats) {
    const Eigen::MatrixXd mc = m.colwise() - grand_mean;
    cov_s += mc * mc.transpose();
  }
  cov_s /= total;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> probe(cov_s,
                                                       Eigen::EigenvaluesOnly);
  if (probe.eigenvalues().minCoeff() <=
      1e-12 * std::max(1e-300, probe.eigenvalues().maxCoeff())) {
    // Singular signal covariance; ridge keeps the eigenproblem well posed.
    cov_s += 1e-8 * cov_s.trace() / static_cast<double>(c) *
             Eigen::MatrixXd::Identity(c, c);
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_p, cov_s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("xdawn: generalized eigensolver failed");

  filters.resize(nfilter, c);
  for (int k = 0; k < nfilter; ++k) {
    Eigen::VectorXd v = es.eigenvectors().col(c - 1 - k);
    filters.row(k) = v.normalized().transpose();
  }
  fitted = true;
}

PipelineData Xdawn::transform(const PipelineData& in) const {
  if (!fitted) throw std::logic_error("xdawn: transform before fit");
  if (in.is_flat)
    throw std::invalid_argument("xdawn: requires trial matrices");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(in.mats.size());
  for (const auto& m : in.mats) {
    if (m.rows() != filters.cols())
      throw std::invalid_argument("xdawn: channel count mismatch");
    out.push_back(filters * m);
  }
  return PipelineData::from_mats(std::move(out));
}

Eigen::MatrixXd oas_covariance(const Eigen::MatrixXd& x, bool center) {
  const Eigen::Index p = x.rows();
  const double n = static_cast<double>(x.cols());
  Eigen::MatrixXd xc = x;
  if (center) xc = x.colwise() - Eigen::VectorXd(x.rowwise().mean());
  Eigen::MatrixXd emp = xc * xc.transpose() / n;
  emp = ((emp + emp.transpose()) / 2.0).eval();

  const double mu = emp.trace() / static_cast<double>(p);
  const double alpha = emp.array().square().mean();
  const double num = alpha + mu * mu;
  const double den = (n + 1.0) * (alpha - mu * mu / static_cast<double>(p));
  const double shrinkage = den <= 0.0 ? 1.0 : std::min(num / den, 1.0);

  Eigen::MatrixXd out =
      (1.0 - shrinkage) * emp +
      shrinkage * mu * Eigen::MatrixXd::Identity(p, p);
  return out;
}

void ErpCovariance::fit(const PipelineData& epochs,
                        const std::vector<int>& labels) {
  const int target = *std::max_element(labels.begin(), labels.end());
  prototype = target_prototype(epochs, labels, target);
  fitted = true;
}

PipelineData ErpCovariance::transform(const PipelineData& in) const {
  if (!fitted) throw std::logic_error("erp_covariance: transform before fit");
  if (in.is_flat)
    throw std::invalid_argument("erp_covariance: requires trial matrices");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(in.mats.size());
  for (const auto& m : in.mats) {
    if (m.rows() != prototype.rows() || m.cols() != prototype.cols())
      throw std::invalid_argument("erp_covariance: trial shape mismatch");
    Eigen::MatrixXd super(prototype.rows() * 2, prototype.cols());
    super.topRows(prototype.rows()) = prototype;
    super.bottomRows(prototype.rows()) = m;
    out.push_back(oas_covariance(super));
  }
  return PipelineData::from_mats(std::move(out));
}

void TangentSpace::fit(const PipelineData& spds, const std::vector<int>&) {
  if (spds.is_flat || spds.mats.empty())
    throw std::invalid_argument("tangent_space: fit needs SPD matrices");
  const Eigen::MatrixXd g = riemannian_mean(spds.mats);
  ref_inv_sqrt = spd_inv_sqrt(g);
  ref_sqrt = spd_sqrt(g);
  fitted = true;
}

PipelineData TangentSpace::transform(const PipelineData& in) const {
  if (!fitted) throw std::logic_error("tangent_space: transform before fit");
  if (in.is_flat)
    throw std::invalid_argument("tangent_space: requires SPD matrices");
  const Eigen::Index n = ref_sqrt.rows();
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(in.mats.size()),
                       n * (n + 1) / 2);
  for (std::size_t i = 0; i < in.mats.size(); ++i)
    flat.row(static_cast<Eigen::Index>(i)) =
        tangent_vector(ref_inv_sqrt, in.mats[i]).transpose();
  return PipelineData::from_flat(std::move(flat));
}

}  // namespace bci
