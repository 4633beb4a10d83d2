#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bci/channels.hpp"

namespace bci {

struct StimulusEvent {
  std::size_t sample_index{0};
  StimulusKind kind{StimulusKind::non_target};
};

// One 213 s recording: 8 x N sample matrix in microvolts, per-sample
// timestamps in milliseconds relative to session start, onset markers.
struct SessionRecording {
  int subject_id{0};
  int session_id{0};
  double sample_rate{kSampleRateHz};
  std::vector<double> timestamps_ms;
  Eigen::MatrixXd samples;  // kNumChannels x N
  std::vector<StimulusEvent> markers;
  bool truncated{false};  // stream closed before the requested duration

  std::size_t n_samples() const { return timestamps_ms.size(); }

  std::size_t count_markers(StimulusKind k) const {
    std::size_t n = 0;
    for (const auto& m : markers)
      if (m.kind == k) ++n;
    return n;
  }
};

}  // namespace bci
