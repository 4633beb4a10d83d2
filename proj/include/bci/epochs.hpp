#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "bci/session.hpp"

namespace bci {

// Stimulus-locked window, samples -26..+205 relative to the onset
// (-0.1 s .. +0.8 s at 256 Hz), 232 samples inclusive.
inline constexpr int kEpochPre = 26;
inline constexpr int kEpochPost = 205;
inline constexpr int kEpochLen = kEpochPre + kEpochPost + 1;  // 232

struct Epoch {
  int subject_id{0};
  int session_id{0};
  int epoch_id{0};
  StimulusKind label{StimulusKind::non_target};
  Eigen::MatrixXd data;  // kNumChannels x kEpochLen
  std::size_t onset_sample{0};
};

// One epoch per marker whose full window fits in the recording; windows
// running off either end are dropped (count reported via n_dropped).
std::vector<Epoch> extract_epochs(const SessionRecording& rec,
                                  std::size_t* n_dropped = nullptr);

// Subtracts the per-channel mean of the 26 pre-stimulus samples.
Epoch baseline_correct(const Epoch& epoch);

void write_epochs_csv(const std::vector<Epoch>& epochs,
                      const std::filesystem::path& path);
std::vector<Epoch> read_epochs_csv(const std::filesystem::path& path);

}  // namespace bci
