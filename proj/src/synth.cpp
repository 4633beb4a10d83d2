#include "bci/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "bci/rng.hpp"

namespace bci {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Paul Kellet's economy pink-noise filter; close to -10 dB/decade over the
// band of interest. Output is rescaled to the requested RMS afterwards.
std::vector<double> pink_noise(std::size_t n, double rms, std::mt19937_64& rng) {
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = white(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    out[i] = b0 + b1 + b2 + w * 0.1848;
  }
  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double scale = rms / std::sqrt(ss / static_cast<double>(n));
  for (double& v : out) v *= scale;
  return out;
}

// Fixed spatial patterns for background components.
constexpr std::array<double, kNumChannels> kAlphaWeights = {
    0.3, 0.3, 0.5, 0.5, 0.8, 0.8, 1.0, 1.0};
constexpr std::array<double, kNumChannels> kBlinkWeights = {
    1.0, 0.95, 0.25, 0.25, 0.05, 0.05, 0.03, 0.03};

}  // namespace

SubjectProfile make_subject_profile(int subject_id, std::uint64_t master_seed) {
  if (subject_id < 0)
    throw std::invalid_argument("make_subject_profile: subject_id must be >= 0");
  auto rng = make_rng(mix_seed(master_seed, 0x50524f46ULL,
                               static_cast<std::uint64_t>(subject_id)));
  SubjectProfile p;
  p.subject_id = subject_id;
  p.p300_latency_s = uniform(rng, 0.28, 0.42);
  p.p300_amplitude_uv = uniform(rng, 5.0, 15.0);
  p.p300_width_s = uniform(rng, 0.05, 0.12);
  // Parieto-occipital channels carry most of the response.
  p.topography[kFp1] = uniform(rng, 0.05, 0.30);
  p.topography[kFp2] = uniform(rng, 0.05, 0.30);
  p.topography[kC3] = uniform(rng, 0.20, 0.60);
  p.topography[kC4] = uniform(rng, 0.20, 0.60);
  p.topography[kP7] = uniform(rng, 0.60, 1.00);
  p.topography[kP8] = uniform(rng, 0.60, 1.00);
  p.topography[kO1] = uniform(rng, 0.60, 1.00);
  p.topography[kO2] = uniform(rng, 0.60, 1.00);
  p.alpha_amplitude_uv = uniform(rng, 2.0, 10.0);
  p.blink_rate_per_min = uniform(rng, 2.0, 8.0);
  p.rng_seed = rng();
  return p;
}

OddballSchedule make_schedule(std::uint64_t seed) {
  constexpr int kTotal = 200;
  constexpr int kTargets = 40;
  constexpr double kFamiliarization = 5.0;

  auto rng = make_rng(mix_seed(seed, 0x53434845ULL));
  std::vector<int> positions(kTotal);
  std::iota(positions.begin(), positions.end(), 0);
  std::shuffle(positions.begin(), positions.end(), rng);

  std::vector<bool> is_target(kTotal, false);
  for (int i = 0; i < kTargets; ++i) is_target[positions[i]] = true;

  OddballSchedule s;
  s.image_duration_s = 1.0;
  s.total_duration_s = 213.0;
  s.n_target = kTargets;
  s.n_nontarget = kTotal - kTargets;
  s.stimulus_onsets.reserve(kTotal);
  for (int i = 0; i < kTotal; ++i) {
    s.stimulus_onsets.push_back(
        {kFamiliarization + i * s.image_duration_s,
         is_target[i] ? StimulusKind::target : StimulusKind::non_target});
  }
  return s;
}

SessionRecording generate_session(const SubjectProfile& profile,
                                  const OddballSchedule& schedule,
                                  int session_id, const SynthConfig& cfg) {
  const double fs = kSampleRateHz;
  const auto n = static_cast<std::size_t>(
      std::ceil(schedule.total_duration_s * fs));

  SessionRecording rec;
  rec.subject_id = profile.subject_id;
  rec.session_id = session_id;
  rec.sample_rate = fs;
  rec.timestamps_ms.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    rec.timestamps_ms[i] = static_cast<double>(i) / fs * 1000.0;
  rec.samples.setZero(static_cast<Eigen::Index>(kNumChannels),
                      static_cast<Eigen::Index>(n));

  auto rng = make_rng(mix_seed(profile.rng_seed, 0x53455353ULL,
                               static_cast<std::uint64_t>(session_id)));

  // Background: pink noise + alpha sinusoid with per-channel phase.
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const auto pink = pink_noise(n, cfg.pink_noise_rms_uv, rng);
    const double alpha_phase = uniform(rng, 0.0, 2.0 * kPi);
    const double alpha_amp = profile.alpha_amplitude_uv * kAlphaWeights[ch];
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) =
          pink[i] + alpha_amp * std::sin(2.0 * kPi * 10.0 * t + alpha_phase);
    }
  }

  // 50 Hz line interference, common phase across channels.
  {
    const double line_phase = uniform(rng, 0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double v = cfg.line_amplitude_uv *
                       std::sin(2.0 * kPi * cfg.line_freq_hz * t + line_phase);
      for (std::size_t ch = 0; ch < kNumChannels; ++ch)
        rec.samples(static_cast<Eigen::Index>(ch),
                    static_cast<Eigen::Index>(i)) += v;
    }
  }

  // Blink transients: Poisson arrivals, half-sine, fixed frontal pattern.
  if (profile.blink_rate_per_min > 0.0) {
    std::exponential_distribution<double> gap(profile.blink_rate_per_min / 60.0);
    double t0 = gap(rng);
    while (t0 + cfg.blink_duration_s < schedule.total_duration_s) {
      const auto start = static_cast<std::size_t>(std::round(t0 * fs));
      const auto len = static_cast<std::size_t>(
          std::round(cfg.blink_duration_s * fs));
      for (std::size_t i = 0; i < len && start + i < n; ++i) {
        const double w = std::sin(kPi * static_cast<double>(i) /
                                  static_cast<double>(len));
        const double v = cfg.blink_amplitude_uv * w;
        for (std::size_t ch = 0; ch < kNumChannels; ++ch)
          rec.samples(static_cast<Eigen::Index>(ch),
                      static_cast<Eigen::Index>(start + i)) +=
              v * kBlinkWeights[ch];
      }
      t0 += cfg.blink_duration_s + gap(rng);
    }
  }

  // Stimulus markers and the evoked response on target trials.
  for (const auto& onset : schedule.stimulus_onsets) {
    const auto idx = static_cast<std::size_t>(std::round(onset.time_s * fs));
    if (idx >= n) continue;
    rec.markers.push_back({idx, onset.kind});
    if (onset.kind != StimulusKind::target) continue;

    const double center = onset.time_s + profile.p300_latency_s;
    const double sigma = profile.p300_width_s;
    const auto lo = static_cast<std::size_t>(
        std::max(0.0, std::floor((center - 4.0 * sigma) * fs)));
    const auto hi = std::min(
        n, static_cast<std::size_t>(std::ceil((center + 4.0 * sigma) * fs)));
    for (std::size_t i = lo; i < hi; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double g = profile.p300_amplitude_uv *
                       std::exp(-0.5 * (t - center) * (t - center) /
                                (sigma * sigma));
      for (std::size_t ch = 0; ch < kNumChannels; ++ch)
        rec.samples(static_cast<Eigen::Index>(ch),
                    static_cast<Eigen::Index>(i)) += g * profile.topography[ch];
    }
  }
  return rec;
}

}  // namespace bci
