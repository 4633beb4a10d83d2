#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bci/epochs.hpp"
#include "bci/features.hpp"

namespace bci {

enum class DatasetMode { epochs, statistics };

struct DatasetManifest {
  DatasetMode mode{DatasetMode::epochs};
  std::string scope;  // "binary:<subject>" or "multiclass"
  int replicate{0};
  std::uint64_t seed{0};
  std::size_t window{0};  // statistics mode only
  std::map<int, std::size_t> counts;  // label -> sample count
  std::vector<std::string> sources;
};

// Labeled sample matrix; epoch mode keeps the epoch tensor alongside the
// flattened view so 3-D transforms (XDawn/ERPC) can consume it.
struct Dataset {
  DatasetMode mode{DatasetMode::epochs};
  std::vector<Eigen::MatrixXd> epochs;  // epoch mode: n of 8 x 232
  Eigen::MatrixXd x;                    // n x d (d = 1856 or 48)
  std::vector<int> y;
  DatasetManifest manifest;

  std::size_t size() const { return y.size(); }
};

// Target epochs per subject (non-target epochs already discarded).
using EpochsBySubject = std::map<int, std::vector<Epoch>>;

std::uint64_t replicate_seed(std::uint64_t master_seed, int subject_id,
                             int replicate);

// Balanced one-vs-imposters dataset: all target epochs of the legit subject
// against floor(n/9) per imposter plus the remainder drawn one each from the
// first imposters in id order. Labels: legit = 1, imposter = 0.
Dataset build_binary(int legit_subject, const EpochsBySubject& by_subject,
                     int replicate, std::uint64_t seed);

// Class-equal dataset: every subject contributes min-count target epochs.
Dataset build_multiclass(const EpochsBySubject& by_subject, int replicate,
                         std::uint64_t seed);

// Replaces epochs by sliding-window statistics, one label-homogeneous block
// per (label, subject) group of the selected epochs.
Dataset to_statistics(const Dataset& ds, std::size_t window,
                      std::size_t stride = 1);

struct SplitDataset {
  Dataset train;
  Dataset test;
};

// Stratified split; per-class test count = round(test_fraction * count).
SplitDataset train_test_split(const Dataset& ds, double test_fraction,
                              std::uint64_t seed);

void write_manifest_json(const DatasetManifest& m,
                         const std::filesystem::path& path);
DatasetManifest read_manifest_json(const std::filesystem::path& path);

}  // namespace bci
