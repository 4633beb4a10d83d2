#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace bci {

// Montage is fixed: 8 channels, 10-20 positions, parieto-occipital coverage.
inline constexpr std::size_t kNumChannels = 8;
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {
    "Fp1", "Fp2", "C3", "C4", "P7", "P8", "O1", "O2"};

inline constexpr std::size_t kFp1 = 0;
inline constexpr std::size_t kFp2 = 1;
inline constexpr std::size_t kC3 = 2;
inline constexpr std::size_t kC4 = 3;
inline constexpr std::size_t kP7 = 4;
inline constexpr std::size_t kP8 = 5;
inline constexpr std::size_t kO1 = 6;
inline constexpr std::size_t kO2 = 7;

inline constexpr double kSampleRateHz = 256.0;

enum class StimulusKind { non_target = 0, target = 1 };

// CSV stimulus column encoding: 0 = none, 1 = non-target onset, 2 = target onset.
inline int stimulus_code(StimulusKind k) {
  return k == StimulusKind::target ? 2 : 1;
}

inline std::string channel_name(std::size_t idx) { return kChannelNames[idx]; }

}  // namespace bci
