#include "bci/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "bci/rng.hpp"

namespace bci {

namespace {

Eigen::RowVectorXd flatten_epoch(const Eigen::MatrixXd& epoch) {
  Eigen::RowVectorXd v(epoch.rows() * epoch.cols());
  Eigen::Index k = 0;
  for (Eigen::Index ch = 0; ch < epoch.rows(); ++ch)
    for (Eigen::Index t = 0; t < epoch.cols(); ++t) v(k++) = epoch(ch, t);
  return v;
}

void finalize_epoch_dataset(Dataset& ds) {
  ds.x.resize(static_cast<Eigen::Index>(ds.epochs.size()),
              static_cast<Eigen::Index>(kNumChannels) * kEpochLen);
  for (std::size_t i = 0; i < ds.epochs.size(); ++i)
    ds.x.row(static_cast<Eigen::Index>(i)) = flatten_epoch(ds.epochs[i]);
  ds.manifest.counts.clear();
  for (int label : ds.y) ++ds.manifest.counts[label];
}

std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                    std::size_t k,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<const Epoch*> target_epochs(const std::vector<Epoch>& epochs) {
  std::vector<const Epoch*> out;
  for (const auto& e : epochs)
    if (e.label == StimulusKind::target) out.push_back(&e);
  return out;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master_seed, int subject_id,
                             int replicate) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(subject_id) + 1,
                  static_cast<std::uint64_t>(replicate) + 0x5245504cULL);
}

Dataset build_binary(int legit_subject, const EpochsBySubject& by_subject,
                     int replicate, std::uint64_t seed) {
  const auto it = by_subject.find(legit_subject);
  if (it == by_subject.end())
    throw std::invalid_argument("build_binary: unknown legit subject " +
                                std::to_string(legit_subject));
  const auto legit = target_epochs(it->second);
  const std::size_t n = legit.size();

  std::vector<int> imposters;
  for (const auto& [sid, _] : by_subject)
    if (sid != legit_subject) imposters.push_back(sid);
  std::sort(imposters.begin(), imposters.end());
  if (imposters.empty())
    throw std::invalid_argument("build_binary: need at least one imposter");
  const std::size_t m = imposters.size();
  if (n < m)
    throw std::invalid_argument(
        "build_binary: legit subject needs at least one epoch per imposter");

  Dataset ds;
  ds.mode = DatasetMode::epochs;
  ds.manifest.mode = DatasetMode::epochs;
  ds.manifest.scope = "binary:" + std::to_string(legit_subject);
  ds.manifest.replicate = replicate;
  ds.manifest.seed = seed;

  for (const Epoch* e : legit) {
    ds.epochs.push_back(e->data);
    ds.y.push_back(1);
  }

  const std::size_t base = n / m;
  const std::size_t remainder = n % m;
  auto rng = make_rng(mix_seed(seed, 0x42494eULL));
  for (std::size_t j = 0; j < m; ++j) {
    const int sid = imposters[j];
    const auto pool = target_epochs(by_subject.at(sid));
    const std::size_t want = base + (j < remainder ? 1 : 0);
    if (pool.size() < want)
      throw std::runtime_error("build_binary: imposter subject " +
                               std::to_string(sid) + " has only " +
                               std::to_string(pool.size()) +
                               " target epochs, needs " + std::to_string(want));
    for (std::size_t k : sample_without_replacement(pool.size(), want, rng)) {
      ds.epochs.push_back(pool[k]->data);
      ds.y.push_back(0);
    }
  }

  finalize_epoch_dataset(ds);
  return ds;
}

Dataset build_multiclass(const EpochsBySubject& by_subject, int replicate,
                         std::uint64_t seed) {
  if (by_subject.size() < 2)
    throw std::invalid_argument("build_multiclass: need at least two subjects");

  std::size_t m = SIZE_MAX;
  for (const auto& [sid, epochs] : by_subject) {
    const std::size_t c = target_epochs(epochs).size();
    if (c == 0)
      throw std::runtime_error("build_multiclass: subject " +
                               std::to_string(sid) + " has no target epochs");
    m = std::min(m, c);
  }

  Dataset ds;
  ds.mode = DatasetMode::epochs;
  ds.manifest.mode = DatasetMode::epochs;
  ds.manifest.scope = "multiclass";
  ds.manifest.replicate = replicate;
  ds.manifest.seed = seed;

  auto rng = make_rng(mix_seed(seed, 0x4d554c54ULL));
  for (const auto& [sid, epochs] : by_subject) {
    const auto pool = target_epochs(epochs);
    std::vector<std::size_t> pick;
    if (pool.size() == m) {
      pick.resize(m);
      std::iota(pick.begin(), pick.end(), std::size_t{0});
    } else {
      pick = sample_without_replacement(pool.size(), m, rng);
    }
    for (std::size_t k : pick) {
      ds.epochs.push_back(pool[k]->data);
      ds.y.push_back(sid);
    }
  }

  finalize_epoch_dataset(ds);
  return ds;
}

Dataset to_statistics(const Dataset& ds, std::size_t window,
                      std::size_t stride) {
  if (ds.mode != DatasetMode::epochs)
    throw std::invalid_argument("to_statistics: input must be epoch mode");
  if (ds.epochs.empty()) throw std::invalid_argument("to_statistics: empty");

  // One block per label, in first-appearance order of the labels.
  std::vector<int> label_order;
  for (int label : ds.y)
    if (std::find(label_order.begin(), label_order.end(), label) ==
        label_order.end())
      label_order.push_back(label);

  Dataset out;
  out.mode = DatasetMode::statistics;
  out.manifest = ds.manifest;
  out.manifest.mode = DatasetMode::statistics;
  out.manifest.window = window;
  out.manifest.counts.clear();

  std::vector<FeatureVector> all;
  for (int label : label_order) {
    FeatureBlock block;
    block.label = label;
    std::size_t count = 0;
    for (int l : ds.y)
      if (l == label) ++count;
    block.rows.resize(static_cast<Eigen::Index>(count) * kEpochLen,
                      static_cast<Eigen::Index>(kNumChannels));
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < ds.epochs.size(); ++i) {
      if (ds.y[i] != label) continue;
      block.rows.middleRows(r, kEpochLen) = ds.epochs[i].transpose();
      r += kEpochLen;
    }
    for (auto& fv : sliding_stats(block, window, stride))
      all.push_back(std::move(fv));
  }

  out.x.resize(static_cast<Eigen::Index>(all.size()),
               static_cast<Eigen::Index>(kNumFeatures));
  out.y.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t f = 0; f < kNumFeatures; ++f)
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
          all[i].values[f];
    out.y[i] = all[i].label;
    ++out.manifest.counts[all[i].label];
  }
  return out;
}

SplitDataset train_test_split(const Dataset& ds, double test_fraction,
                              std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.y.size(); ++i) by_class[ds.y[i]].push_back(i);
  for (const auto& [label, idx] : by_class)
    if (idx.size() < 5)
      throw std::invalid_argument("train_test_split: class " +
                                  std::to_string(label) +
                                  " has fewer than 5 samples");

  auto rng = make_rng(mix_seed(seed, 0x53504c54ULL));
  std::vector<bool> in_test(ds.y.size(), false);
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < k; ++i) in_test[idx[i]] = true;
  }

  SplitDataset split;
  for (Dataset* part : {&split.train, &split.test}) {
    part->mode = ds.mode;
    part->manifest = ds.manifest;
    part->manifest.counts.clear();
  }
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    Dataset& part = in_test[i] ? split.test : split.train;
    part.y.push_back(ds.y[i]);
    ++part.manifest.counts[ds.y[i]];
    if (!ds.epochs.empty()) part.epochs.push_back(ds.epochs[i]);
  }
  for (Dataset* part : {&split.train, &split.test}) {
    part->x.resize(static_cast<Eigen::Index>(part->y.size()), ds.x.cols());
  }
  Eigen::Index tr = 0, te = 0;
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    if (in_test[i])
      split.test.x.row(te++) = ds.x.row(static_cast<Eigen::Index>(i));
    else
      split.train.x.row(tr++) = ds.x.row(static_cast<Eigen::Index>(i));
  }
  return split;
}

void write_manifest_json(const DatasetManifest& m,
                         const std::filesystem::path& path) {
  nlohmann::json j;
  j["mode"] = m.mode == DatasetMode::epochs ? "epochs" : "statistics";
  j["scope"] = m.scope;
  j["replicate"] = m.replicate;
  j["seed"] = m.seed;
  j["window"] = m.window;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [label, count] : m.counts)
    counts[std::to_string(label)] = count;
  j["counts"] = counts;
  j["sources"] = m.sources;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_manifest_json: cannot open " +
                             path.string());
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("read_manifest_json: cannot open " +
                             path.string());
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.mode = j.at("mode") == "epochs" ? DatasetMode::epochs
                                    : DatasetMode::statistics;
  m.scope = j.at("scope");
  m.replicate = j.at("replicate");
  m.seed = j.at("seed");
  m.window = j.at("window");
  for (const auto& [key, val] : j.at("counts").items())
    m.counts[std::stoi(key)] = val;
  for (const auto& s : j.at("sources")) m.sources.push_back(s);
  return m;
}

}  // namespace bci
