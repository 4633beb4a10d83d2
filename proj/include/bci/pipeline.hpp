#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bci/estimators.hpp"
#include "bci/transforms.hpp"

namespace bci {

// One row of the classifier configuration table: an ordered transform subset
// and a final estimator.
struct PipelineConfig {
  int id{0};  // Cl 1 .. Cl 21
  std::vector<std::string> transforms;  // subset of Vect, SS, XDawn, ERPC, TS
  std::string estimator;                // LR, LDA, MDM, RF, QDA, SVM, KNN

  bool has_transform(const std::string& name) const;
  // Statistics-mode datasets are flat; XDawn/ERPC need the epoch tensor.
  bool statistics_compatible() const;
  std::string label() const;  // "Cl 6"
};

// The full 21-config registry in table order.
const std::vector<PipelineConfig>& classifier_registry();

// The six configs usable on flat statistics vectors: Cl 1, 2, 6, 7, 8, 9.
std::vector<PipelineConfig> statistics_registry();

void write_registry_json(const std::filesystem::path& path);

// Fitted transform chain + estimator; immutable after fit.
class FittedPipeline {
 public:
  const PipelineConfig& config() const { return config_; }
  bool epoch_mode() const { return epoch_mode_; }

  std::vector<int> predict(const PipelineData& x) const;
  std::vector<double> decision_scores(const PipelineData& x) const;

  void save(const std::filesystem::path& path) const;
  static FittedPipeline load(const std::filesystem::path& path);

  friend FittedPipeline pipeline_fit(const PipelineConfig& config,
                                     const PipelineData& train,
                                     const std::vector<int>& y,
                                     std::uint64_t seed);

 private:
  PipelineData apply_transforms(const PipelineData& x) const;

  PipelineConfig config_;
  bool epoch_mode_{true};
  std::uint64_t seed_{0};
  std::optional<Xdawn> xdawn_;
  std::optional<ErpCovariance> erpc_;
  std::optional<TangentSpace> tangent_;
  std::optional<Vectorizer> vect_;
  std::optional<StandardScaler> scaler_;
  std::unique_ptr<Estimator> estimator_;
};

// Fits transforms on the training set only (in canonical execution order
// XDawn -> ERPC -> TS -> Vect -> SS), then the estimator. Binary-only
// estimators are wrapped one-vs-rest when more than two classes appear.
FittedPipeline pipeline_fit(const PipelineConfig& config,
                            const PipelineData& train,
                            const std::vector<int>& y, std::uint64_t seed = 42);

}  // namespace bci
