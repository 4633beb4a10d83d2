#include "bci/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bci {

namespace {

constexpr double kPi = std::numbers::pi;

std::complex<double> section_response(const BiquadSection& s,
                                      std::complex<double> z1) {
  // z1 = z^{-1}
  const std::complex<double> z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

}  // namespace

bool BiquadCascade::stable() const {
  for (const auto& s : sections) {
    // |a2| < 1 and |a1| < 1 + a2 is the stability triangle for
    // z^2 + a1 z + a2.
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2)) return false;
  }
  return true;
}

BiquadCascade design_butterworth_bandpass(int prototype_order, double low_hz,
                                          double high_hz, double fs) {
  if (prototype_order < 1)
    throw std::invalid_argument("butterworth: prototype order must be >= 1");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs / 2.0))
    throw std::invalid_argument("butterworth: need 0 < low < high < fs/2");

  using cd = std::complex<double>;
  const double k = 2.0 * fs;
  // Prewarped analog edge frequencies.
  const double w1 = k * std::tan(kPi * low_hz / fs);
  const double w2 = k * std::tan(kPi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  BiquadCascade cascade;
  cascade.sample_rate = fs;
  cascade.description = "butterworth bandpass order " +
                        std::to_string(prototype_order) + " " +
                        std::to_string(low_hz) + "-" + std::to_string(high_hz) +
                        " Hz";

  // Analog low-pass prototype poles on the unit circle, left half-plane.
  std::vector<cd> bp_poles;
  for (int i = 1; i <= prototype_order; ++i) {
    const double theta = kPi * (2.0 * i + prototype_order - 1.0) /
                         (2.0 * prototype_order);
    const cd p(std::cos(theta), std::sin(theta));
    // Low-pass -> band-pass: s solves s^2 - p*bw*s + w0^2 = 0.
    const cd pb = p * bw;
    const cd disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
    bp_poles.push_back((pb + disc) / 2.0);
    bp_poles.push_back((pb - disc) / 2.0);
  }

  // Keep one pole per conjugate pair (positive imaginary part); real poles
  // would only appear for degenerate bands and are paired greedily.
  std::vector<cd> upper;
  for (const auto& p : bp_poles)
    if (p.imag() > 0.0) upper.push_back(p);
  if (static_cast<int>(upper.size()) != prototype_order)
    throw std::runtime_error("butterworth: unexpected pole pairing");

  // Digital center frequency used for gain normalization.
  const double fc = fs / kPi * std::atan(w0 / k);

  for (const auto& p : upper) {
    // Bilinear transform of the conjugate pole pair; zeros at z = +-1.
    const cd zp = (k + p) / (k - p);
    BiquadSection s;
    s.a1 = -2.0 * zp.real();
    s.a2 = std::norm(zp);
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    const cd z1 = std::exp(cd(0.0, -2.0 * kPi * fc / fs));
    const double g = std::abs(section_response(s, z1));
    s.b0 /= g;
    s.b2 /= g;
    cascade.sections.push_back(s);
  }
  return cascade;
}

BiquadCascade design_notch(double f0, double q, double fs) {
  if (!(0.0 < f0 && f0 < fs / 2.0))
    throw std::invalid_argument("notch: need 0 < f0 < fs/2");
  if (!(q > 0.0)) throw std::invalid_argument("notch: need q > 0");

  const double w0 = 2.0 * kPi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;

  BiquadSection s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * c / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;

  BiquadCascade cascade;
  cascade.sample_rate = fs;
  cascade.description = "notch " + std::to_string(f0) + " Hz Q " +
                        std::to_string(q);
  cascade.sections.push_back(s);
  return cascade;
}

std::vector<std::complex<double>> frequency_response(
    const BiquadCascade& filter, const std::vector<double>& freqs_hz) {
  std::vector<std::complex<double>> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    const std::complex<double> z1 =
        std::exp(std::complex<double>(0.0, -2.0 * kPi * f / filter.sample_rate));
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : filter.sections) h *= section_response(s, z1);
    out.push_back(h);
  }
  return out;
}

double gain_db(const BiquadCascade& filter, double freq_hz) {
  const auto h = frequency_response(filter, {freq_hz});
  return 20.0 * std::log10(std::abs(h[0]));
}

std::vector<double> apply_forward(const BiquadCascade& filter,
                                  const std::vector<double>& signal) {
  std::vector<double> y(signal);
  for (const auto& s : filter.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * out + z2;
      z2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> apply_zero_phase(const BiquadCascade& filter,
                                     const std::vector<double>& signal) {
  const std::size_t order = 2 * filter.sections.size() + 1;
  const std::size_t pad = 3 * order;
  if (signal.size() <= 3 * filter.sections.size() || signal.size() <= pad)
    throw std::invalid_argument("apply_zero_phase: signal too short");

  const std::size_t n = signal.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  // Odd reflection about the end samples removes edge discontinuities.
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * signal.front() - signal[pad - i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * signal.back() - signal[n - 2 - i]);

  std::vector<double> y = apply_forward(filter, ext);
  std::reverse(y.begin(), y.end());
  y = apply_forward(filter, y);
  std::reverse(y.begin(), y.end());

  return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                             y.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

void apply_zero_phase_rows(const BiquadCascade& filter, Eigen::MatrixXd& x) {
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      row[static_cast<std::size_t>(i)] = x(c, i);
    const auto filtered = apply_zero_phase(filter, row);
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      x(c, i) = filtered[static_cast<std::size_t>(i)];
  }
}

}  // namespace bci
