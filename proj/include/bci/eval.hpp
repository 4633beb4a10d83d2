#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bci/datasets.hpp"
#include "bci/metrics.hpp"
#include "bci/pipeline.hpp"

namespace bci {

enum class Experiment { binary, multiclass };
enum class Configuration { base, base_ica, statistics };

std::string to_string(Experiment e);
std::string to_string(Configuration c);

// Per-classifier aggregate over all datasets of a run: precision/recall/f1
// are arithmetic means of the per-dataset scores, the confusion matrix is
// summed, and accuracy is the trace ratio of that summed matrix.
struct ClassifierResult {
  int id{0};
  std::string label;
  std::vector<std::string> transforms;
  std::string estimator;
  double accuracy{0.0};
  double precision{0.0};
  double recall{0.0};
  double f1{0.0};
  std::vector<double> per_dataset_f1;
  std::vector<int> classes;
  Eigen::MatrixXi confusion;
  double fit_seconds{0.0};      // summed over datasets
  double predict_seconds{0.0};  // summed over datasets
  std::size_t train_n{0};       // summed over datasets
  std::size_t test_n{0};
};

struct EvaluationReport {
  Experiment experiment{Experiment::binary};
  Configuration configuration{Configuration::base};
  std::size_t window{0};  // statistics mode only, 0 otherwise
  std::uint64_t seed{0};
  std::size_t n_datasets{0};
  std::vector<ClassifierResult> classifiers;
};

// Fits and scores every (dataset, classifier) pair on an 80/20 stratified
// split and aggregates per classifier. Statistics-mode runs reject epoch-only
// configs up front.
EvaluationReport run_experiment(Experiment experiment,
                                Configuration configuration,
                                const std::vector<Dataset>& datasets,
                                const std::vector<PipelineConfig>& registry,
                                std::uint64_t seed, int jobs = 1);

// Deterministic serialization (timings excluded; they go to timings.json).
std::string report_to_json(const EvaluationReport& report);

// Writes report.json, timings.json, confusion_<id>.csv per classifier and
// the two SVG bar charts.
void emit_report(const EvaluationReport& report,
                 const std::filesystem::path& out_dir);

// Bar chart grouped by window size; used across the statistics reports.
void emit_window_chart(const std::vector<EvaluationReport>& reports,
                       const std::filesystem::path& path);

}  // namespace bci
