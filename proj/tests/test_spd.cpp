#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "bci/spd.hpp"

using namespace bci;

namespace {

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double jitter = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("spd checks reject asymmetric and indefinite matrices") {
  std::mt19937_64 rng(1);
  CHECK_NOTHROW(check_spd(random_spd(4, rng)));

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS(check_spd(asym));

  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(3, 3);
  indef(2, 2) = -1.0;
  CHECK_THROWS(check_spd(indef));
}

TEST_CASE("matrix functions invert each other") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd a = random_spd(5, rng);
    CHECK((spd_exp(spd_log(a)) - a).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::MatrixXd s = spd_sqrt(a);
    CHECK((s * s - a).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::MatrixXd is = spd_inv_sqrt(a);
    CHECK((s * is - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
          1e-9);
  }
}

TEST_CASE("riemannian distance has a closed form on commuting matrices") {
  // d(I, diag(e^2, 1)) = ||log(diag(e^2, 1))||_F = 2.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(2, 2);
  b(0, 0) = std::exp(2.0);
  CHECK(riemannian_distance(a, b) == doctest::Approx(2.0).epsilon(1e-9));

  // Metric axioms on random pairs.
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = random_spd(4, rng);
  const Eigen::MatrixXd y = random_spd(4, rng);
  CHECK(riemannian_distance(x, x) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(riemannian_distance(x, y) ==
        doctest::Approx(riemannian_distance(y, x)).epsilon(1e-8));
  CHECK(riemannian_distance(x, y) > 0.0);
}

TEST_CASE("distance is invariant under congruence") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::MatrixXd a = random_spd(4, rng);
  const Eigen::MatrixXd b = random_spd(4, rng);
  const double d = riemannian_distance(a, b);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd g(4, 4);
    do {
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = gauss(rng);
    } while (std::abs(g.determinant()) < 1e-3);
    const double dg =
        riemannian_distance(g * a * g.transpose(), g * b * g.transpose());
    CHECK(dg == doctest::Approx(d).epsilon(1e-8));
  }
}

TEST_CASE("karcher mean fixed points and closed forms") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = random_spd(4, rng);
  // mean{A, A} = A.
  CHECK((riemannian_mean({a, a}) - a).cwiseAbs().maxCoeff() < 1e-10);

  // mean{I, 4I} = 2I (geodesic midpoint of commuting matrices).
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd mid = riemannian_mean({eye, 4.0 * eye});
  CHECK((mid - 2.0 * eye).cwiseAbs().maxCoeff() < 1e-8);

  // The mean is equidistant from two congruent points on a geodesic.
  const Eigen::MatrixXd b = random_spd(4, rng);
  const Eigen::MatrixXd m = riemannian_mean({a, b});
  CHECK(riemannian_distance(a, m) ==
        doctest::Approx(riemannian_distance(b, m)).epsilon(1e-6));

  // Gradient condition: sum of logs at the mean vanishes.
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < 6; ++i) mats.push_back(random_spd(4, rng));
  const Eigen::MatrixXd g = riemannian_mean(mats);
  const Eigen::MatrixXd gi = spd_inv_sqrt(g);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& s : mats) acc += spd_log(gi * s * gi);
  CHECK(acc.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("tangent vectors round-trip and preserve the metric") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd g = random_spd(4, rng);
  const Eigen::MatrixXd gi = spd_inv_sqrt(g);
  const Eigen::MatrixXd gs = spd_sqrt(g);

  const Eigen::MatrixXd s = random_spd(4, rng);
  const Eigen::VectorXd v = tangent_vector(gi, s);
  CHECK(v.size() == 4 * 5 / 2);

  const Eigen::MatrixXd back = tangent_unvector(gs, v);
  CHECK((back - s).cwiseAbs().maxCoeff() < 1e-8);

  // At the reference the norm equals the affine-invariant distance.
  CHECK(v.norm() == doctest::Approx(riemannian_distance(g, s)).epsilon(1e-8));

  // The reference itself maps to the origin.
  CHECK(tangent_vector(gi, g).cwiseAbs().maxCoeff() < 1e-9);
}
