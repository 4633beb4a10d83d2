#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace bci {

struct BiquadSection {
  double b0{1.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};  // denominator normalized, a0 == 1
};

// Cascade of second-order sections; immutable after design.
struct BiquadCascade {
  std::vector<BiquadSection> sections;
  double sample_rate{0.0};
  std::string description;

  // True when every section has its poles strictly inside the unit circle.
  bool stable() const;
};

// Band-pass Butterworth through the bilinear transform with prewarped edges.
// prototype_order is the low-pass prototype order; the band-pass has twice
// as many poles (prototype_order sections).
BiquadCascade design_butterworth_bandpass(int prototype_order, double low_hz,
                                          double high_hz, double fs);

// Single-section IIR notch with unity gain at DC and Nyquist, null at f0.
BiquadCascade design_notch(double f0, double q, double fs);

// Complex transfer function evaluated at e^{j 2 pi f / fs}.
std::vector<std::complex<double>> frequency_response(
    const BiquadCascade& filter, const std::vector<double>& freqs_hz);

// |H(f)| in dB for a single frequency.
double gain_db(const BiquadCascade& filter, double freq_hz);

// Forward-backward application (zero phase, |H|^2 magnitude). Edges handled
// by odd-reflective padding of three times the cascade's effective length.
std::vector<double> apply_zero_phase(const BiquadCascade& filter,
                                     const std::vector<double>& signal);

// In-place zero-phase filtering of every row of a channels x samples matrix.
void apply_zero_phase_rows(const BiquadCascade& filter, Eigen::MatrixXd& x);

// Single forward pass with zero initial state (transposed direct form II).
std::vector<double> apply_forward(const BiquadCascade& filter,
                                  const std::vector<double>& signal);

}  // namespace bci
