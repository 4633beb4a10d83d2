#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "bci/dsp.hpp"

using namespace bci;

namespace {

// Independent transfer-function evaluation used as the oracle: multiply the
// section polynomials out at z = e^{j w} directly.
std::complex<double> oracle_response(const BiquadCascade& f, double freq_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / f.sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : f.sections)
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

double oracle_db(const BiquadCascade& f, double freq_hz) {
  return 20.0 * std::log10(std::abs(oracle_response(f, freq_hz)));
}

std::vector<double> sine(double freq_hz, double fs, std::size_t n,
                         double amplitude = 1.0) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz *
                                  static_cast<double>(i) / fs);
  return out;
}

double rms(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

}  // namespace

TEST_CASE("bandpass design matches the analytic oracle") {
  const BiquadCascade f = design_butterworth_bandpass(6, 1.0, 17.0, 256.0);
  CHECK(f.sections.size() == 6);
  CHECK(f.stable());

  for (double freq : {0.5, 1.0, 4.0, 10.0, 17.0, 30.0, 50.0, 100.0})
    CHECK(gain_db(f, freq) == doctest::Approx(oracle_db(f, freq)).epsilon(1e-9));

  CHECK(oracle_db(f, 50.0) <= -60.0);
  CHECK(oracle_db(f, std::sqrt(1.0 * 17.0)) >= -1.0);
  // Prewarped -3 dB edges.
  CHECK(oracle_db(f, 1.0) == doctest::Approx(-3.0).epsilon(0.17));
  CHECK(oracle_db(f, 17.0) == doctest::Approx(-3.0).epsilon(0.17));
}

TEST_CASE("bandpass rejects invalid band edges") {
  CHECK_THROWS(design_butterworth_bandpass(6, 17.0, 1.0, 256.0));
  CHECK_THROWS(design_butterworth_bandpass(6, 0.0, 17.0, 256.0));
  CHECK_THROWS(design_butterworth_bandpass(6, 1.0, 200.0, 256.0));
  CHECK_THROWS(design_butterworth_bandpass(0, 1.0, 17.0, 256.0));
}

TEST_CASE("notch design matches the analytic oracle") {
  const BiquadCascade f = design_notch(50.0, 30.0, 256.0);
  CHECK(f.sections.size() == 1);
  CHECK(f.stable());
  CHECK(oracle_db(f, 50.0) <= -40.0);
  CHECK(oracle_db(f, 10.0) >= -0.5);
  CHECK(std::abs(oracle_response(f, 0.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(oracle_response(f, 128.0)) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS(design_notch(200.0, 30.0, 256.0));
}

TEST_CASE("frequency_response agrees with the oracle for random cascades") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(-0.9, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    BiquadCascade f;
    f.sample_rate = 256.0;
    for (int s = 0; s < 3; ++s) {
      BiquadSection sec;
      sec.b0 = coeff(rng);
      sec.b1 = coeff(rng);
      sec.b2 = coeff(rng);
      sec.a2 = coeff(rng) * 0.9;
      sec.a1 = coeff(rng) * (1.0 + sec.a2) * 0.99;  // stability triangle
      f.sections.push_back(sec);
    }
    REQUIRE(f.stable());
    const std::vector<double> freqs = {0.0, 3.0, 17.5, 60.0, 128.0};
    const auto got = frequency_response(f, freqs);
    for (std::size_t i = 0; i < freqs.size(); ++i)
      CHECK(std::abs(got[i] - oracle_response(f, freqs[i])) < 1e-9);
  }
}

TEST_CASE("notch kills a steady-state 50 Hz sine") {
  const BiquadCascade f = design_notch(50.0, 30.0, 256.0);
  const auto x = sine(50.0, 256.0, 256 * 20);
  const auto y = apply_zero_phase(f, x);
  // Middle section, away from edge transients.
  const double in = rms(x, 2048, x.size() - 2048);
  const double out = rms(y, 2048, y.size() - 2048);
  CHECK(out / in <= 0.01);
}

TEST_CASE("zero-phase application has no lag and |H|^2 magnitude") {
  const BiquadCascade f = design_butterworth_bandpass(6, 1.0, 17.0, 256.0);
  const auto x = sine(10.0, 256.0, 256 * 16);
  const auto y = apply_zero_phase(f, x);

  // Cross-correlation oracle: the peak must sit at zero lag.
  double best = -1.0;
  int best_lag = -99;
  for (int lag = -8; lag <= 8; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 512; i + 512 < x.size(); ++i)
      acc += x[i] * y[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);

  const double expected_gain =
      std::pow(std::abs(oracle_response(f, 10.0)), 2.0);
  const double measured = rms(y, 1024, y.size() - 1024) /
                          rms(x, 1024, x.size() - 1024);
  CHECK(measured == doctest::Approx(expected_gain).epsilon(0.01));
}

TEST_CASE("zero-phase preserves pulse symmetry and zero input") {
  const BiquadCascade f = design_butterworth_bandpass(4, 1.0, 17.0, 256.0);
  std::vector<double> pulse(1025, 0.0);
  for (int i = -20; i <= 20; ++i)
    pulse[static_cast<std::size_t>(512 + i)] =
        std::exp(-0.5 * (i / 6.0) * (i / 6.0));
  const auto y = apply_zero_phase(f, pulse);
  for (int i = 1; i < 256; ++i)
    CHECK(y[static_cast<std::size_t>(512 - i)] ==
          doctest::Approx(y[static_cast<std::size_t>(512 + i)])
              .epsilon(5e-4).scale(1.0));

  const auto zeros = apply_zero_phase(f, std::vector<double>(500, 0.0));
  for (double v : zeros) CHECK(v == 0.0);
}

TEST_CASE("zero-phase filtering is linear") {
  const BiquadCascade f = design_butterworth_bandpass(3, 2.0, 20.0, 256.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> a(700), b(700);
  for (auto& v : a) v = noise(rng);
  for (auto& v : b) v = noise(rng);

  std::vector<double> combo(700);
  for (std::size_t i = 0; i < 700; ++i) combo[i] = 2.5 * a[i] - 0.75 * b[i];
  const auto fa = apply_zero_phase(f, a);
  const auto fb = apply_zero_phase(f, b);
  const auto fc = apply_zero_phase(f, combo);
  for (std::size_t i = 0; i < 700; ++i)
    CHECK(fc[i] ==
          doctest::Approx(2.5 * fa[i] - 0.75 * fb[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("too-short signals are rejected") {
  const BiquadCascade f = design_butterworth_bandpass(6, 1.0, 17.0, 256.0);
  CHECK_THROWS(apply_zero_phase(f, std::vector<double>(10, 1.0)));
}
