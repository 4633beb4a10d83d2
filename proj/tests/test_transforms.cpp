#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "bci/epochs.hpp"
#include "bci/spd.hpp"
#include "bci/transforms.hpp"

using namespace bci;

namespace {

std::vector<Eigen::MatrixXd> random_epochs(int n, std::mt19937_64& rng,
                                           int channels = 8,
                                           int samples = kEpochLen) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd m(channels, samples);
    for (int r = 0; r < channels; ++r)
      for (int c = 0; c < samples; ++c) m(r, c) = gauss(rng);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("vectorizer flattens trials row-major") {
  std::mt19937_64 rng(1);
  auto mats = random_epochs(3, rng);
  mats[2](1, 5) = 1234.5;

  const PipelineData out =
      Vectorizer{}.transform(PipelineData::from_mats(mats));
  REQUIRE(out.is_flat);
  CHECK(out.flat.rows() == 3);
  CHECK(out.flat.cols() == 8 * kEpochLen);
  // Channel-major: element (ch, t) lands at ch * 232 + t.
  CHECK(out.flat(2, 1 * kEpochLen + 5) == 1234.5);
  CHECK(out.flat(0, 0) == mats[0](0, 0));
  CHECK(out.flat(1, 8 * kEpochLen - 1) == mats[1](7, kEpochLen - 1));

  // Identity on flat input.
  const PipelineData same = Vectorizer{}.transform(out);
  CHECK(same.flat == out.flat);
}

TEST_CASE("standard scaler normalizes with train statistics only") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd train(200, 4), test(50, 4);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 4; ++j) train(i, j) = 3.0 * gauss(rng) + j;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) test(i, j) = 3.0 * gauss(rng) + j;
  train.col(3).setConstant(9.0);  // zero variance
  test.col(3).setConstant(9.0);

  StandardScaler ss;
  ss.fit(PipelineData::from_flat(train), {});
  const PipelineData t = ss.transform(PipelineData::from_flat(train));
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(t.flat.col(j).mean()) < 1e-10);
    CHECK(t.flat.col(j).squaredNorm() / 200.0 == doctest::Approx(1.0));
  }
  CHECK(t.flat.col(3).cwiseAbs().maxCoeff() == 0.0);

  // Test rows are shifted by the train mean, not their own.
  const PipelineData u = ss.transform(PipelineData::from_flat(test));
  const double expect =
      (test(0, 0) - ss.mean(0)) * ss.inv_std(0);
  CHECK(u.flat(0, 0) == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS(StandardScaler{}.transform(PipelineData::from_flat(test)));
}

TEST_CASE("xdawn finds the channel carrying the evoked response") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Evoked bump on channel 5 of target trials only, noise everywhere.
  Eigen::VectorXd bump(kEpochLen);
  for (int t = 0; t < kEpochLen; ++t)
    bump(t) = 8.0 * std::exp(-0.5 * std::pow((t - 100.0) / 12.0, 2.0));

  std::vector<Eigen::MatrixXd> mats;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    Eigen::MatrixXd m(8, kEpochLen);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < kEpochLen; ++c) m(r, c) = gauss(rng);
    const bool target = i % 3 == 0;
    if (target) m.row(5) += bump.transpose();
    labels.push_back(target ? 1 : 0);
    mats.push_back(m);
  }

  Xdawn xd;
  xd.fit(PipelineData::from_mats(mats), labels);
  REQUIRE(xd.fitted);
  CHECK(xd.filters.rows() == 2);
  CHECK(xd.filters.cols() == 8);

  // The leading filter concentrates its energy on channel 5.
  const Eigen::VectorXd w = xd.filters.row(0).cwiseAbs2();
  CHECK(w(5) / w.sum() >= 0.9);

  const PipelineData filtered =
      xd.transform(PipelineData::from_mats(mats));
  CHECK(filtered.mats[0].rows() == 2);
  CHECK(filtered.mats[0].cols() == kEpochLen);

  // Single-class input cannot be fit.
  CHECK_THROWS_WITH(
      Xdawn{}.fit(PipelineData::from_mats(mats), std::vector<int>(60, 1)),
      doctest::Contains("both classes"));
}

TEST_CASE("oas covariance matches the closed-form shrinkage") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int p = 16, n = kEpochLen;
  Eigen::MatrixXd x(p, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = gauss(rng) + 0.2 * i;

  // Independent computation through traces of the empirical covariance.
  const Eigen::MatrixXd xc =
      x.colwise() - Eigen::VectorXd(x.rowwise().mean());
  const Eigen::MatrixXd s = xc * xc.transpose() / static_cast<double>(n);
  const double mu = s.trace() / p;
  const double tr_s2 = (s * s).trace();
  const double num = tr_s2 / (p * p) + mu * mu;
  const double den = (n + 1.0) * (tr_s2 / (p * p) - mu * mu / p);
  const double rho = std::min(num / den, 1.0);
  const Eigen::MatrixXd expect =
      (1.0 - rho) * s + rho * mu * Eigen::MatrixXd::Identity(p, p);

  const Eigen::MatrixXd got = oas_covariance(x);
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_NOTHROW(check_spd(got));

  // Shrinkage keeps the trace of the empirical covariance.
  CHECK(got.trace() == doctest::Approx(s.trace()).epsilon(1e-10));
}

TEST_CASE("erp covariance emits SPD super-trial matrices") {
  std::mt19937_64 rng(5);
  auto mats = random_epochs(100, rng);
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 4 == 0 ? 1 : 0);

  ErpCovariance erpc;
  erpc.fit(PipelineData::from_mats(mats), labels);
  CHECK(erpc.prototype.rows() == 8);
  CHECK(erpc.prototype.cols() == kEpochLen);

  // Prototype is the mean target epoch.
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(8, kEpochLen);
  int count = 0;
  for (int i = 0; i < 100; ++i)
    if (labels[i] == 1) {
      mean += mats[i];
      ++count;
    }
  mean /= count;
  CHECK((erpc.prototype - mean).cwiseAbs().maxCoeff() < 1e-12);

  const PipelineData covs = erpc.transform(PipelineData::from_mats(mats));
  REQUIRE(covs.mats.size() == 100);
  for (int i = 0; i < 10; ++i) {
    CHECK(covs.mats[i].rows() == 16);
    CHECK_NOTHROW(check_spd(covs.mats[i]));
  }
}

TEST_CASE("tangent space maps the reference mean to the origin") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXd> spds;
  for (int i = 0; i < 30; ++i) {
    Eigen::MatrixXd a(16, 40);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 40; ++c) a(r, c) = gauss(rng);
    spds.push_back(a * a.transpose() / 40.0 +
                   Eigen::MatrixXd::Identity(16, 16));
  }

  TangentSpace ts;
  ts.fit(PipelineData::from_mats(spds), {});
  const PipelineData flat = ts.transform(PipelineData::from_mats(spds));
  REQUIRE(flat.is_flat);
  CHECK(flat.flat.cols() == 16 * 17 / 2);  // 136

  // The Riemannian mean itself projects to zero.
  const Eigen::MatrixXd g = ts.ref_sqrt * ts.ref_sqrt;
  const PipelineData zero = ts.transform(PipelineData::from_mats({g}));
  CHECK(zero.flat.cwiseAbs().maxCoeff() < 1e-7);

  // Norm of a tangent vector equals the distance to the reference.
  CHECK(flat.flat.row(0).norm() ==
        doctest::Approx(riemannian_distance(g, spds[0])).epsilon(1e-8));

  CHECK_THROWS(TangentSpace{}.transform(PipelineData::from_mats(spds)));
}
