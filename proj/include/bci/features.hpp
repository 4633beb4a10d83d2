#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "bci/channels.hpp"
#include "bci/epochs.hpp"

namespace bci {

inline constexpr std::size_t kStatsPerChannel = 6;
inline constexpr std::size_t kNumFeatures = kStatsPerChannel * kNumChannels;

// Per-channel statistics order within a feature vector.
inline constexpr std::array<const char*, kStatsPerChannel> kStatNames = {
    "mean", "var", "std", "max", "sum", "median"};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};  // channel-major
  int label{0};
  int subject_id{0};
  std::size_t window_start{0};
};

// Label-homogeneous block of concatenated epoch samples: rows x 8 channels,
// row count a multiple of the epoch length.
struct FeatureBlock {
  int label{0};
  int subject_id{0};
  Eigen::MatrixXd rows;  // B x kNumChannels
};

FeatureBlock make_block(const std::vector<Epoch>& epochs);

// Sliding-window statistics; windows start at 0, stride, 2*stride, ...
// count = floor((B - W)/stride) + 1. Population variance.
std::vector<FeatureVector> sliding_stats(const FeatureBlock& block,
                                         std::size_t window,
                                         std::size_t stride = 1);

void write_features_csv(const std::vector<FeatureVector>& vectors,
                        const std::filesystem::path& path);
std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path);

std::string features_csv_header();

}  // namespace bci
