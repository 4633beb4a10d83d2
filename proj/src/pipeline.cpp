#include "bci/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace bci {

bool PipelineConfig::has_transform(const std::string& name) const {
  return std::find(transforms.begin(), transforms.end(), name) !=
         transforms.end();
}

bool PipelineConfig::statistics_compatible() const {
  return !has_transform("XDawn") && !has_transform("ERPC");
}

std::string PipelineConfig::label() const {
  return "Cl " + std::to_string(id);
}

const std::vector<PipelineConfig>& classifier_registry() {
  static const std::vector<PipelineConfig> registry = {
      {1, {"Vect", "SS"}, "LR"},      {2, {"Vect"}, "LDA"},
      {3, {"Vect", "XDawn"}, "LDA"},  {4, {"ERPC", "TS"}, "LR"},
      {5, {"ERPC"}, "MDM"},           {6, {"Vect"}, "RF"},
      {7, {"Vect"}, "QDA"},           {8, {"Vect"}, "SVM"},
      {9, {"Vect"}, "KNN"},           {10, {"Vect", "XDawn"}, "RF"},
      {11, {"ERPC", "TS"}, "RF"},     {12, {"Vect", "ERPC"}, "RF"},
      {13, {"Vect", "XDawn"}, "QDA"}, {14, {"ERPC", "TS"}, "QDA"},
      {15, {"Vect", "ERPC"}, "QDA"},  {16, {"Vect", "XDawn"}, "SVM"},
      {17, {"ERPC", "TS"}, "SVM"},    {18, {"Vect", "ERPC"}, "SVM"},
      {19, {"Vect", "XDawn"}, "KNN"}, {20, {"ERPC", "TS"}, "KNN"},
      {21, {"Vect", "ERPC"}, "KNN"},
  };
  return registry;
}

std::vector<PipelineConfig> statistics_registry() {
  std::vector<PipelineConfig> out;
  for (const auto& c : classifier_registry())
    if (c.statistics_compatible()) out.push_back(c);
  return out;
}

void write_registry_json(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : classifier_registry()) {
    nlohmann::json e;
    e["id"] = c.id;
    e["label"] = c.label();
    e["transforms"] = c.transforms;
    e["estimator"] = c.estimator;
    j.push_back(e);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_registry_json: cannot open " +
                             path.string());
  out << j.dump(2) << "\n";
}

// ------------------------------------------------------------------ fitting

FittedPipeline pipeline_fit(const PipelineConfig& config,
                            const PipelineData& train,
                            const std::vector<int>& y, std::uint64_t seed) {
  if (train.size() != y.size())
    throw std::invalid_argument("pipeline_fit: label count mismatch");
  if (train.is_flat && !config.statistics_compatible())
    throw std::invalid_argument(
        "pipeline_fit: " + config.label() +
        " needs the epoch tensor; XDawn/ERPCovariance cannot fit flat "
        "statistics vectors");

  FittedPipeline fp;
  fp.config_ = config;
  fp.epoch_mode_ = !train.is_flat;
  fp.seed_ = seed;

  PipelineData cur = train;
  if (config.has_transform("XDawn")) {
    fp.xdawn_.emplace();
    fp.xdawn_->fit(cur, y);
    cur = fp.xdawn_->transform(cur);
  }
  if (config.has_transform("ERPC")) {
    fp.erpc_.emplace();
    fp.erpc_->fit(cur, y);
    cur = fp.erpc_->transform(cur);
  }
  if (config.has_transform("TS")) {
    fp.tangent_.emplace();
    fp.tangent_->fit(cur, y);
    cur = fp.tangent_->transform(cur);
  }
  if (config.has_transform("Vect")) {
    fp.vect_.emplace();
    fp.vect_->fit(cur, y);
    cur = fp.vect_->transform(cur);
  }
  if (config.has_transform("SS")) {
    fp.scaler_.emplace();
    fp.scaler_->fit(cur, y);
    cur = fp.scaler_->transform(cur);
  }

  auto estimator = make_estimator(config.estimator);
  if (config.estimator == "RF")
    estimator = std::make_unique<RandomForest>(100, seed);
  const std::set<int> classes(y.begin(), y.end());
  if (classes.size() > 2 && estimator->binary_only())
    estimator = std::make_unique<OneVsRest>(std::move(estimator));
  estimator->fit(cur, y);
  fp.estimator_ = std::move(estimator);
  return fp;
}

PipelineData FittedPipeline::apply_transforms(const PipelineData& x) const {
  PipelineData cur = x;
  if (xdawn_) cur = xdawn_->transform(cur);
  if (erpc_) cur = erpc_->transform(cur);
  if (tangent_) cur = tangent_->transform(cur);
  if (vect_) cur = vect_->transform(cur);
  if (scaler_) cur = scaler_->transform(cur);
  return cur;
}

std::vector<int> FittedPipeline::predict(const PipelineData& x) const {
  if (!estimator_) throw std::logic_error("pipeline: predict before fit");
  return estimator_->predict(apply_transforms(x));
}

std::vector<double> FittedPipeline::decision_scores(
    const PipelineData& x) const {
  if (!estimator_) throw std::logic_error("pipeline: predict before fit");
  return estimator_->decision_scores(apply_transforms(x));
}

// ------------------------------------------------------------ serialization

namespace {

constexpr char kMagic[8] = {'B', 'C', 'I', 'P', 'I', 'P', 'E', '1'};

struct Writer {
  std::ofstream out;
  explicit Writer(const std::filesystem::path& path)
      : out(path, std::ios::binary) {
    if (!out)
      throw std::runtime_error("pipeline save: cannot open " + path.string());
  }
  void raw(const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p),
              static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { raw(&v, sizeof(v)); }
  void u64(std::uint64_t v) { raw(&v, sizeof(v)); }
  void f64(double v) { raw(&v, sizeof(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  void vec(const Eigen::VectorXd& v) { mat(v); }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    raw(v.data(), sizeof(int) * v.size());
  }
};

struct Reader {
  std::ifstream in;
  explicit Reader(const std::filesystem::path& path)
      : in(path, std::ios::binary) {
    if (!in)
      throw std::runtime_error("pipeline load: cannot open " + path.string());
  }
  void raw(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("pipeline load: truncated container");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof(v));
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof(v));
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof(v));
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  Eigen::MatrixXd mat() {
    const auto r = static_cast<Eigen::Index>(u64());
    const auto c = static_cast<Eigen::Index>(u64());
    Eigen::MatrixXd m(r, c);
    raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }
  Eigen::VectorXd vec() {
    const Eigen::MatrixXd m = mat();
    return Eigen::VectorXd(m);
  }
  std::vector<int> ints() {
    std::vector<int> v(u64());
    raw(v.data(), sizeof(int) * v.size());
    return v;
  }
};

void save_estimator(Writer& w, const Estimator& est);

std::unique_ptr<Estimator> load_estimator(Reader& r) {
  const std::string kind = r.str();
  if (kind == "LR") {
    auto e = std::make_unique<LogisticRegression>();
    e->weights = r.vec();
    e->bias = r.f64();
    e->label_neg = static_cast<int>(r.u32());
    e->label_pos = static_cast<int>(r.u32());
    return e;
  }
  if (kind == "LDA") {
    auto e = std::make_unique<Lda>();
    e->classes = r.ints();
    e->means = r.mat();
    e->cov_inv = r.mat();
    e->log_priors = r.vec();
    return e;
  }
  if (kind == "QDA") {
    auto e = std::make_unique<Qda>();
    e->classes = r.ints();
    const std::size_t k = r.u64();
    for (std::size_t i = 0; i < k; ++i) e->class_means.push_back(r.vec());
    for (std::size_t i = 0; i < k; ++i) e->cov_chol.push_back(r.mat());
    for (std::size_t i = 0; i < k; ++i) e->log_dets.push_back(r.f64());
    e->log_priors = r.vec();
    return e;
  }
  if (kind == "KNN") {
    auto e = std::make_unique<Knn>();
    e->k_ = static_cast<int>(r.u32());
    e->train_x_ = r.mat();
    e->train_sq_ = e->train_x_.rowwise().squaredNorm();
    e->train_y_ = r.ints();
    return e;
  }
  if (kind == "MDM") {
    auto e = std::make_unique<Mdm>();
    e->classes = r.ints();
    const std::size_t k = r.u64();
    for (std::size_t i = 0; i < k; ++i) e->class_means.push_back(r.mat());
    return e;
  }
  if (kind == "SVM") {
    auto e = std::make_unique<SvmRbf>();
    e->support_vectors = r.mat();
    e->dual_coef = r.vec();
    e->rho = r.f64();
    e->gamma = r.f64();
    e->label_neg = static_cast<int>(r.u32());
    e->label_pos = static_cast<int>(r.u32());
    return e;
  }
  if (kind == "RF") {
    auto e = std::make_unique<RandomForest>();
    e->classes = r.ints();
    const std::size_t t = r.u64();
    e->trees.resize(t);
    for (auto& tree : e->trees) {
      tree.nodes.resize(r.u64());
      r.raw(tree.nodes.data(),
            sizeof(RandomForest::Node) * tree.nodes.size());
    }
    return e;
  }
  if (kind == "OvR") {
    const std::string base = r.str();
    auto e = std::make_unique<OneVsRest>(make_estimator(base));
    e->classes = r.ints();
    const std::size_t k = r.u64();
    for (std::size_t i = 0; i < k; ++i) e->models.push_back(load_estimator(r));
    return e;
  }
  throw std::runtime_error("pipeline load: unknown estimator kind " + kind);
}

void save_estimator(Writer& w, const Estimator& est) {
  if (const auto* e = dynamic_cast<const LogisticRegression*>(&est)) {
    w.str("LR");
    w.vec(e->weights);
    w.f64(e->bias);
    w.u32(static_cast<std::uint32_t>(e->label_neg));
    w.u32(static_cast<std::uint32_t>(e->label_pos));
  } else if (const auto* e = dynamic_cast<const Lda*>(&est)) {
    w.str("LDA");
    w.ints(e->classes);
    w.mat(e->means);
    w.mat(e->cov_inv);
    w.vec(e->log_priors);
  } else if (const auto* e = dynamic_cast<const Qda*>(&est)) {
    w.str("QDA");
    w.ints(e->classes);
    w.u64(e->class_means.size());
    for (const auto& m : e->class_means) w.vec(m);
    for (const auto& m : e->cov_chol) w.mat(m);
    for (double d : e->log_dets) w.f64(d);
    w.vec(e->log_priors);
  } else if (const auto* e = dynamic_cast<const Knn*>(&est)) {
    w.str("KNN");
    w.u32(static_cast<std::uint32_t>(e->k_));
    w.mat(e->train_x_);
    w.ints(e->train_y_);
  } else if (const auto* e = dynamic_cast<const Mdm*>(&est)) {
    w.str("MDM");
    w.ints(e->classes);
    w.u64(e->class_means.size());
    for (const auto& m : e->class_means) w.mat(m);
  } else if (const auto* e = dynamic_cast<const SvmRbf*>(&est)) {
    w.str("SVM");
    w.mat(e->support_vectors);
    w.vec(e->dual_coef);
    w.f64(e->rho);
    w.f64(e->gamma);
    w.u32(static_cast<std::uint32_t>(e->label_neg));
    w.u32(static_cast<std::uint32_t>(e->label_pos));
  } else if (const auto* e = dynamic_cast<const RandomForest*>(&est)) {
    w.str("RF");
    w.ints(e->classes);
    w.u64(e->trees.size());
    for (const auto& tree : e->trees) {
      w.u64(tree.nodes.size());
      w.raw(tree.nodes.data(),
            sizeof(RandomForest::Node) * tree.nodes.size());
    }
  } else if (const auto* e = dynamic_cast<const OneVsRest*>(&est)) {
    w.str("OvR");
    w.str(e->models.empty() ? std::string("LR") : e->models[0]->name());
    w.ints(e->classes);
    w.u64(e->models.size());
    for (const auto& m : e->models) save_estimator(w, *m);
  } else {
    throw std::runtime_error("pipeline save: unknown estimator type");
  }
}

}  // namespace

void FittedPipeline::save(const std::filesystem::path& path) const {
  if (!estimator_) throw std::logic_error("pipeline save: not fitted");
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.u32(1);  // container version
  w.u32(static_cast<std::uint32_t>(config_.id));
  w.str(config_.estimator);
  w.u32(static_cast<std::uint32_t>(config_.transforms.size()));
  for (const auto& t : config_.transforms) w.str(t);
  w.u32(epoch_mode_ ? 1 : 0);
  w.u64(seed_);

  w.u32(xdawn_ ? 1 : 0);
  if (xdawn_) w.mat(xdawn_->filters);
  w.u32(erpc_ ? 1 : 0);
  if (erpc_) w.mat(erpc_->prototype);
  w.u32(tangent_ ? 1 : 0);
  if (tangent_) {
    w.mat(tangent_->ref_inv_sqrt);
    w.mat(tangent_->ref_sqrt);
  }
  w.u32(vect_ ? 1 : 0);
  w.u32(scaler_ ? 1 : 0);
  if (scaler_) {
    w.mat(scaler_->mean);
    w.mat(scaler_->inv_std);
  }
  save_estimator(w, *estimator_);
}

FittedPipeline FittedPipeline::load(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("pipeline load: bad magic in " + path.string());
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw std::runtime_error("pipeline load: unsupported container version " +
                             std::to_string(version));

  FittedPipeline fp;
  fp.config_.id = static_cast<int>(r.u32());
  fp.config_.estimator = r.str();
  const std::uint32_t nt = r.u32();
  for (std::uint32_t i = 0; i < nt; ++i)
    fp.config_.transforms.push_back(r.str());
  fp.epoch_mode_ = r.u32() != 0;
  fp.seed_ = r.u64();

  if (r.u32()) {
    fp.xdawn_.emplace();
    fp.xdawn_->filters = r.mat();
    fp.xdawn_->fitted = true;
  }
  if (r.u32()) {
    fp.erpc_.emplace();
    fp.erpc_->prototype = r.mat();
    fp.erpc_->fitted = true;
  }
  if (r.u32()) {
    fp.tangent_.emplace();
    fp.tangent_->ref_inv_sqrt = r.mat();
    fp.tangent_->ref_sqrt = r.mat();
    fp.tangent_->fitted = true;
  }
  if (r.u32()) fp.vect_.emplace();
  if (r.u32()) {
    fp.scaler_.emplace();
    fp.scaler_->mean = r.mat();
    fp.scaler_->inv_std = r.mat();
    fp.scaler_->fitted = true;
  }
  fp.estimator_ = load_estimator(r);
  return fp;
}

}  // namespace bci
