#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "bci/datasets.hpp"

using namespace bci;
namespace fs = std::filesystem;

namespace {

// Target epochs tagged with a constant value identifying (subject, index).
std::vector<Epoch> tagged_epochs(int subject, int n_target,
                                 int n_nontarget = 3) {
  std::vector<Epoch> out;
  for (int i = 0; i < n_target; ++i) {
    Epoch e;
    e.subject_id = subject;
    e.label = StimulusKind::target;
    e.epoch_id = i;
    e.data.setConstant(8, kEpochLen, subject * 1000.0 + i);
    out.push_back(e);
  }
  for (int i = 0; i < n_nontarget; ++i) {
    Epoch e;
    e.subject_id = subject;
    e.label = StimulusKind::non_target;
    e.data.setConstant(8, kEpochLen, -1.0);
    out.push_back(e);
  }
  return out;
}

int epoch_subject(const Eigen::MatrixXd& m) {
  return static_cast<int>(m(0, 0)) / 1000;
}

}  // namespace

TEST_CASE("binary datasets balance imposters with the remainder up front") {
  // 35 legit targets against 9 imposters: floor gives 3 each, the 8 extras
  // go to the lowest imposter ids.
  EpochsBySubject by_subject;
  by_subject[0] = tagged_epochs(0, 35);
  for (int s = 1; s <= 9; ++s) by_subject[s] = tagged_epochs(s, 12);

  const Dataset ds = build_binary(0, by_subject, 0, 99);
  REQUIRE(ds.size() == 70);
  CHECK(ds.manifest.scope == "binary:0");
  CHECK(ds.manifest.counts.at(1) == 35);
  CHECK(ds.manifest.counts.at(0) == 35);

  std::map<int, int> per_imposter;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] == 1)
      CHECK(epoch_subject(ds.epochs[i]) == 0);
    else
      ++per_imposter[epoch_subject(ds.epochs[i])];
  }
  for (int s = 1; s <= 8; ++s) CHECK(per_imposter[s] == 4);
  CHECK(per_imposter[9] == 3);

  // Non-target epochs never leak in.
  for (const auto& m : ds.epochs) CHECK(m(0, 0) >= 0.0);
}

TEST_CASE("imposter draws are deterministic in the seed and distinct") {
  EpochsBySubject by_subject;
  for (int s = 0; s < 4; ++s) by_subject[s] = tagged_epochs(s, 20);

  const Dataset a = build_binary(2, by_subject, 0, 7);
  const Dataset b = build_binary(2, by_subject, 0, 7);
  const Dataset c = build_binary(2, by_subject, 1, replicate_seed(7, 2, 1));
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.epochs[i] == b.epochs[i]);
    CHECK(a.y[i] == b.y[i]);
    if (i < c.size() && a.epochs[i] != c.epochs[i]) differs = true;
  }
  CHECK(differs);

  // No imposter epoch is drawn twice.
  std::set<double> seen;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.y[i] == 0) CHECK(seen.insert(a.epochs[i](0, 0)).second);
}

TEST_CASE("replicate seeds separate subjects and replicates") {
  std::set<std::uint64_t> seeds;
  for (int s = 0; s < 10; ++s)
    for (int r = 0; r < 5; ++r) CHECK(seeds.insert(replicate_seed(42, s, r)).second);
  CHECK(replicate_seed(42, 1, 2) != replicate_seed(43, 1, 2));
}

TEST_CASE("multiclass datasets are class-equal at the minimum count") {
  EpochsBySubject by_subject;
  by_subject[1] = tagged_epochs(1, 10);
  by_subject[2] = tagged_epochs(2, 7);
  by_subject[3] = tagged_epochs(3, 9);

  const Dataset ds = build_multiclass(by_subject, 0, 5);
  REQUIRE(ds.size() == 21);
  CHECK(ds.manifest.scope == "multiclass");
  std::map<int, int> counts;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    counts[ds.y[i]]++;
    CHECK(epoch_subject(ds.epochs[i]) == ds.y[i]);
  }
  for (int s = 1; s <= 3; ++s) CHECK(counts[s] == 7);
}

TEST_CASE("degenerate dataset requests are rejected") {
  EpochsBySubject by_subject;
  by_subject[0] = tagged_epochs(0, 5);
  CHECK_THROWS_WITH(build_binary(7, by_subject, 0, 1),
                    doctest::Contains("unknown legit subject"));
  CHECK_THROWS_WITH(build_binary(0, by_subject, 0, 1),
                    doctest::Contains("imposter"));
  CHECK_THROWS_WITH(build_multiclass(by_subject, 0, 1),
                    doctest::Contains("two subjects"));

  by_subject[1] = tagged_epochs(1, 5);
  by_subject[2] = tagged_epochs(2, 5);
  by_subject[0] = tagged_epochs(0, 1);  // fewer legit epochs than imposters
  CHECK_THROWS_WITH(build_binary(0, by_subject, 0, 1),
                    doctest::Contains("at least one epoch per imposter"));
}

TEST_CASE("statistics conversion windows each label block") {
  EpochsBySubject by_subject;
  by_subject[0] = tagged_epochs(0, 6);
  by_subject[1] = tagged_epochs(1, 6);
  const Dataset ds = build_binary(0, by_subject, 0, 3);

  const std::size_t W = 58;
  const Dataset stats = to_statistics(ds, W);
  CHECK(stats.mode == DatasetMode::statistics);
  CHECK(stats.x.cols() == static_cast<Eigen::Index>(kNumFeatures));

  // Each side concatenates 6 epochs into one block of 6 * 232 rows.
  const std::size_t per_label = 6 * kEpochLen - W + 1;
  CHECK(stats.manifest.counts.at(1) == per_label);
  CHECK(stats.manifest.counts.at(0) == per_label);
  CHECK(stats.size() == 2 * per_label);
  CHECK(stats.manifest.window == W);

  CHECK_THROWS_WITH(to_statistics(stats, W), doctest::Contains("epoch mode"));
}

TEST_CASE("stratified splits honour per-class rounding") {
  EpochsBySubject by_subject;
  by_subject[0] = tagged_epochs(0, 40);
  by_subject[1] = tagged_epochs(1, 45);
  const Dataset ds = build_binary(0, by_subject, 0, 3);  // 40 + 40

  const SplitDataset split = train_test_split(ds, 0.2, 11);
  CHECK(split.test.size() == 16);
  CHECK(split.train.size() == 64);
  CHECK(split.test.manifest.counts.at(0) == 8);
  CHECK(split.test.manifest.counts.at(1) == 8);
  CHECK(split.train.manifest.counts.at(0) == 32);
  CHECK(split.train.manifest.counts.at(1) == 32);

  // Rows keep following their labels through the shuffle.
  for (const Dataset* part : {&split.train, &split.test})
    for (std::size_t i = 0; i < part->size(); ++i) {
      const int subj = epoch_subject(part->epochs[i]);
      CHECK((part->y[i] == 1 ? 0 : 1) == subj);
    }

  // Train and test are disjoint and cover the input.
  std::set<double> tags;
  for (const auto& m : split.train.epochs) CHECK(tags.insert(m(0, 0)).second);
  for (const auto& m : split.test.epochs) CHECK(tags.insert(m(0, 0)).second);
  CHECK(tags.size() == 80);

  const SplitDataset again = train_test_split(ds, 0.2, 11);
  CHECK(again.test.y == split.test.y);

  // Tiny classes cannot be split.
  EpochsBySubject small;
  small[0] = tagged_epochs(0, 4);
  small[1] = tagged_epochs(1, 8);
  const Dataset tiny = build_binary(0, small, 0, 3);
  CHECK_THROWS_WITH(train_test_split(tiny, 0.2, 1),
                    doctest::Contains("fewer than 5"));
}

TEST_CASE("manifests round-trip through JSON") {
  DatasetManifest m;
  m.mode = DatasetMode::statistics;
  m.scope = "binary:3";
  m.replicate = 2;
  m.seed = 123456789;
  m.window = 116;
  m.counts[0] = 1000;
  m.counts[1] = 999;
  m.sources = {"a.csv", "b.csv"};

  const fs::path p = fs::temp_directory_path() / "bci_datasets_manifest.json";
  write_manifest_json(m, p);
  const DatasetManifest back = read_manifest_json(p);
  CHECK(back.mode == m.mode);
  CHECK(back.scope == m.scope);
  CHECK(back.replicate == m.replicate);
  CHECK(back.seed == m.seed);
  CHECK(back.window == m.window);
  CHECK(back.counts == m.counts);
  CHECK(back.sources == m.sources);
  fs::remove(p);
}
