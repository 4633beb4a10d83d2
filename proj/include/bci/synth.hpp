#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bci/session.hpp"

namespace bci {

// Per-subject generative parameters. Deterministic in (subject_id, master_seed).
struct SubjectProfile {
  int subject_id{0};
  double p300_latency_s{0.3};    // [0.28, 0.42]
  double p300_amplitude_uv{10};  // [5, 15]
  double p300_width_s{0.08};     // [0.05, 0.12]
  std::array<double, kNumChannels> topography{};  // [0,1]; P7/P8/O1/O2 highest
  double alpha_amplitude_uv{5};
  double blink_rate_per_min{4};
  std::uint64_t rng_seed{0};
};

struct StimulusOnset {
  double time_s{0.0};
  StimulusKind kind{StimulusKind::non_target};
};

struct OddballSchedule {
  std::vector<StimulusOnset> stimulus_onsets;
  int n_target{0};
  int n_nontarget{0};
  double image_duration_s{1.0};
  double total_duration_s{213.0};
};

// Difficulty knobs; defaults give a solvable but non-trivial synthetic task.
struct SynthConfig {
  double pink_noise_rms_uv{10.0};
  double line_amplitude_uv{5.0};
  double line_freq_hz{50.0};
  double blink_amplitude_uv{80.0};
  double blink_duration_s{0.3};
  double familiarization_s{5.0};
};

SubjectProfile make_subject_profile(int subject_id, std::uint64_t master_seed);

// 200 one-second presentations after a 5 s familiarization interval; 40
// target positions drawn uniformly at random.
OddballSchedule make_schedule(std::uint64_t seed);

SessionRecording generate_session(const SubjectProfile& profile,
                                  const OddballSchedule& schedule,
                                  int session_id,
                                  const SynthConfig& cfg = SynthConfig{});

}  // namespace bci
