#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bci/eval.hpp"

namespace bci {

// Invalid or unreadable configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure inside a pipeline stage; maps to exit code 1.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage(stage) {}
  std::string stage;
};

// Flat JSON run configuration; defaults reproduce the full protocol
// (10 subjects x 20 sessions, 256 Hz, 40/160 stimuli per session).
struct RunConfig {
  std::uint64_t master_seed{42};
  int subjects{10};
  int sessions_per_subject{20};
  double notch_hz{50.0};
  double notch_q{30.0};
  double band_low_hz{1.0};
  double band_high_hz{17.0};
  int band_order{6};
  bool ica{true};
  double ica_threshold{0.7};
  std::vector<std::size_t> windows{58, 116, 174, 232};
  int replicates{5};
  std::vector<Experiment> experiments{Experiment::binary,
                                      Experiment::multiclass};
  std::filesystem::path output_root{"out"};
};

RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const RunConfig& cfg, const std::filesystem::path& path);

// Runs synth -> preprocess -> epochs -> datasets -> evaluate, writing the
// artifact tree under cfg.output_root. Stages whose input content hash is
// unchanged and whose outputs still exist are skipped ("cached").
// Throws StageError / ConfigError; returns 0 on success.
int run_all(const RunConfig& cfg, int jobs = 1, std::ostream& log = std::cout);

}  // namespace bci
