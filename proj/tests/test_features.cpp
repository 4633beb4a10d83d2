#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "bci/features.hpp"

using namespace bci;
namespace fs = std::filesystem;

namespace {

FeatureBlock block_from_column(const std::vector<double>& col, int label = 1,
                               int subject = 1) {
  FeatureBlock b;
  b.label = label;
  b.subject_id = subject;
  b.rows.resize(static_cast<Eigen::Index>(col.size()), 8);
  for (std::size_t i = 0; i < col.size(); ++i)
    for (int c = 0; c < 8; ++c)
      b.rows(static_cast<Eigen::Index>(i), c) = col[i] + 10.0 * c;
  return b;
}

// Straightforward two-pass statistics for one window of one channel.
std::array<double, kStatsPerChannel> oracle_stats(std::vector<double> w) {
  const double n = static_cast<double>(w.size());
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= n;
  double var = 0.0, sum = 0.0, mx = w[0];
  for (double v : w) {
    var += (v - mean) * (v - mean);
    sum += v;
    mx = std::max(mx, v);
  }
  var /= n;  // population variance
  std::sort(w.begin(), w.end());
  const std::size_t m = w.size();
  const double median =
      m % 2 == 1 ? w[m / 2] : 0.5 * (w[m / 2 - 1] + w[m / 2]);
  return {mean, var, std::sqrt(var), mx, sum, median};
}

fs::path temp_file(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bci_features_" + name);
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("hand-computed statistics of a tiny window") {
  // Channel 0 sees [1,2] then [2,3] then [3,4] with window 2, stride 1.
  const auto b = block_from_column({1.0, 2.0, 3.0, 4.0});
  const auto vecs = sliding_stats(b, 2);
  REQUIRE(vecs.size() == 3);

  // First window [1,2]: mean 1.5, var 0.25, std 0.5, max 2, sum 3, median 1.5.
  const auto& v = vecs[0].values;
  CHECK(v[0] == doctest::Approx(1.5));
  CHECK(v[1] == doctest::Approx(0.25));
  CHECK(v[2] == doctest::Approx(0.5));
  CHECK(v[3] == doctest::Approx(2.0));
  CHECK(v[4] == doctest::Approx(3.0));
  CHECK(v[5] == doctest::Approx(1.5));
  CHECK(vecs[0].window_start == 0);
  CHECK(vecs[1].window_start == 1);
  CHECK(vecs[2].window_start == 2);
  CHECK(vecs[0].label == 1);
  CHECK(vecs[0].subject_id == 1);

  // Channel 3 is the same ramp shifted by 30.
  CHECK(vecs[0].values[3 * kStatsPerChannel + 0] == doctest::Approx(31.5));
  CHECK(vecs[0].values[3 * kStatsPerChannel + 1] == doctest::Approx(0.25));
}

TEST_CASE("constant input gives zero spread and equal location statistics") {
  const auto b = block_from_column(std::vector<double>(50, 7.0));
  const auto vecs = sliding_stats(b, 10);
  REQUIRE(vecs.size() == 41);
  for (const auto& fv : vecs) {
    CHECK(fv.values[0] == doctest::Approx(7.0));   // mean
    CHECK(fv.values[1] == doctest::Approx(0.0));   // var
    CHECK(fv.values[2] == doctest::Approx(0.0));   // std
    CHECK(fv.values[3] == doctest::Approx(7.0));   // max
    CHECK(fv.values[4] == doctest::Approx(70.0));  // sum
    CHECK(fv.values[5] == doctest::Approx(7.0));   // median
  }
}

TEST_CASE("window count follows floor((B - W) / stride) + 1") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> b_dist(1, 400);
  for (int trial = 0; trial < 100; ++trial) {
    const int B = b_dist(rng);
    const int W = std::uniform_int_distribution<int>(1, B)(rng);
    const int stride = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto b = block_from_column(std::vector<double>(
        static_cast<std::size_t>(B), 1.0));
    const auto vecs =
        sliding_stats(b, static_cast<std::size_t>(W),
                      static_cast<std::size_t>(stride));
    CHECK(vecs.size() == static_cast<std::size_t>((B - W) / stride) + 1);
    CHECK(vecs.back().window_start ==
          static_cast<std::size_t>((B - W) / stride * stride));
  }
  // Boundary: window exactly the block.
  const auto b = block_from_column(std::vector<double>(17, 2.0));
  CHECK(sliding_stats(b, 17).size() == 1);
}

TEST_CASE("statistics match a two-pass oracle on random data") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 5.0);
  FeatureBlock b;
  b.label = 0;
  b.subject_id = 4;
  b.rows.resize(120, 8);
  for (int i = 0; i < 120; ++i)
    for (int c = 0; c < 8; ++c) b.rows(i, c) = gauss(rng);

  const std::size_t W = 13, stride = 3;
  const auto vecs = sliding_stats(b, W, stride);
  for (const auto& fv : vecs) {
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      std::vector<double> window;
      for (std::size_t t = 0; t < W; ++t)
        window.push_back(
            b.rows(static_cast<Eigen::Index>(fv.window_start + t),
                   static_cast<Eigen::Index>(ch)));
      const auto expect = oracle_stats(window);
      for (std::size_t s = 0; s < kStatsPerChannel; ++s)
        CHECK(fv.values[ch * kStatsPerChannel + s] ==
              doctest::Approx(expect[s]).epsilon(1e-10));
      // Order invariants.
      const double mn = *std::min_element(window.begin(), window.end());
      CHECK(mn <= fv.values[ch * kStatsPerChannel + 5]);
      CHECK(fv.values[ch * kStatsPerChannel + 5] <=
            fv.values[ch * kStatsPerChannel + 3]);
    }
  }
}

TEST_CASE("blocks require homogeneous labels and fitted windows") {
  Epoch a, b;
  a.label = StimulusKind::target;
  b.label = StimulusKind::non_target;
  a.data.setOnes(8, kEpochLen);
  b.data.setOnes(8, kEpochLen);
  CHECK_THROWS_WITH(make_block({a, b}), doctest::Contains("mixed labels"));
  CHECK_THROWS_WITH(make_block({}), doctest::Contains("no epochs"));

  const FeatureBlock blk = make_block({a});
  CHECK(blk.rows.rows() == kEpochLen);
  CHECK(blk.label == 1);
  CHECK_THROWS_WITH(sliding_stats(blk, kEpochLen + 1),
                    doctest::Contains("window larger"));
}

TEST_CASE("two stacked epochs concatenate along time") {
  Epoch a, b;
  a.label = b.label = StimulusKind::target;
  a.subject_id = b.subject_id = 6;
  a.data.setConstant(8, kEpochLen, 1.0);
  b.data.setConstant(8, kEpochLen, 2.0);
  const FeatureBlock blk = make_block({a, b});
  REQUIRE(blk.rows.rows() == 2 * kEpochLen);
  CHECK(blk.subject_id == 6);
  CHECK(blk.rows(0, 0) == 1.0);
  CHECK(blk.rows(kEpochLen, 0) == 2.0);

  // A window straddling the seam mixes both epochs' samples.
  const auto vecs = sliding_stats(blk, 2);
  CHECK(vecs[kEpochLen - 1].values[0] == doctest::Approx(1.5));
}

TEST_CASE("features CSV round-trips with the documented header") {
  CHECK(features_csv_header().rfind("subject_id,label,window_start,mean_Fp1,",
                                    0) == 0);
  CHECK(features_csv_header().find("median_O2") != std::string::npos);

  const auto b = block_from_column({1.0, 2.0, 3.0, 4.0, 5.0}, 0, 2);
  const auto vecs = sliding_stats(b, 3);
  const fs::path p = temp_file("roundtrip.csv");
  write_features_csv(vecs, p);

  const auto back = read_features_csv(p);
  REQUIRE(back.size() == vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    CHECK(back[i].label == vecs[i].label);
    CHECK(back[i].subject_id == vecs[i].subject_id);
    CHECK(back[i].window_start == vecs[i].window_start);
    for (std::size_t f = 0; f < kNumFeatures; ++f)
      CHECK(back[i].values[f] ==
            doctest::Approx(vecs[i].values[f]).epsilon(1e-9));
  }

  std::ofstream(p) << "bogus\n";
  CHECK_THROWS_WITH(read_features_csv(p), doctest::Contains(":1"));
  std::ofstream(p) << features_csv_header() << "\n1,2,3\n";
  CHECK_THROWS(read_features_csv(p));
  fs::remove(p);
}
