#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "bci/estimators.hpp"
#include "bci/rng.hpp"

namespace bci {

namespace {

// Above this many samples the exact sorted-split search switches to a
// quantile-binned histogram search (256 bins per feature).
constexpr std::size_t kBinnedThreshold = 8192;
constexpr int kMaxBins = 256;

struct Split {
  int feature{-1};
  float threshold{0.0f};
  double impurity_gain{-1.0};
};

// Quantile binning shared by all trees of one fit. `cuts[f]` are strictly
// increasing thresholds lying between distinct feature values, so
// value <= cuts[f][b]  <=>  bin <= b.
struct FeatureBins {
  // Row-major so one node pass reads each sample's candidate codes from a
  // single cache line instead of mtry scattered columns.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      codes;  // n x p
  std::vector<std::vector<float>> cuts;

  static FeatureBins build(const Eigen::MatrixXf& x) {
    const auto n = x.rows();
    const auto p = x.cols();
    FeatureBins bins;
    bins.codes.resize(n, p);
    bins.cuts.resize(static_cast<std::size_t>(p));
    std::vector<float> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index f = 0; f < p; ++f) {
      for (Eigen::Index i = 0; i < n; ++i)
        sorted[static_cast<std::size_t>(i)] = x(i, f);
      std::sort(sorted.begin(), sorted.end());
      auto& cuts = bins.cuts[static_cast<std::size_t>(f)];
      for (int q = 1; q < kMaxBins; ++q) {
        const auto idx = static_cast<std::size_t>(
            static_cast<std::uint64_t>(q) * static_cast<std::uint64_t>(n) /
            kMaxBins);
        if (idx == 0 || idx >= sorted.size()) continue;
        const float lo = sorted[idx - 1], hi = sorted[idx];
        if (lo == hi) continue;
        float cut = lo + (hi - lo) / 2.0f;
        if (cut >= hi) cut = lo;
        if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto it =
            std::upper_bound(cuts.begin(), cuts.end(), x(i, f));
        bins.codes(i, f) =
            static_cast<std::uint8_t>(it - cuts.begin());
      }
    }
    return bins;
  }
};

struct TreeBuilder {
  const Eigen::MatrixXf& x;   // n x p
  const std::vector<int>& y;  // class indices 0..K-1
  const FeatureBins* bins;    // nullptr for the exact path
  int n_classes;
  int mtry;
  std::mt19937_64 rng;

  std::vector<std::int32_t> indices;  // bootstrap sample, partitioned in place
  std::vector<std::pair<float, std::int32_t>> scratch;
  std::vector<int> feature_pool;
  std::vector<std::int64_t> counts, left_counts;
  std::vector<std::int32_t> hist;  // feature x bin x class tallies (binned)

  RandomForest::Tree build() {
    const auto n = static_cast<std::size_t>(x.rows());
    indices.resize(n);
    std::uniform_int_distribution<std::int32_t> pick(
        0, static_cast<std::int32_t>(n) - 1);
    for (auto& i : indices) i = pick(rng);

    feature_pool.resize(static_cast<std::size_t>(x.cols()));
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    counts.assign(static_cast<std::size_t>(n_classes), 0);
    left_counts.assign(static_cast<std::size_t>(n_classes), 0);
    if (bins)
      hist.assign(static_cast<std::size_t>(mtry) *
                      static_cast<std::size_t>(kMaxBins * n_classes),
                  0);

    RandomForest::Tree tree;
    // Stack of (node id, begin, end) spans over `indices`.
    struct Frame {
      std::int32_t node;
      std::size_t begin, end;
    };
    std::vector<Frame> stack;
    tree.nodes.push_back({});
    stack.push_back({0, 0, n});

    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      build_node(tree, f.node, f.begin, f.end, stack);
    }
    return tree;
  }

  template <typename Stack>
  void build_node(RandomForest::Tree& tree, std::int32_t node,
                  std::size_t begin, std::size_t end, Stack& stack) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = begin; i < end; ++i)
      ++counts[static_cast<std::size_t>(
          y[static_cast<std::size_t>(indices[i])])];

    const std::size_t n = end - begin;
    int nonzero = 0;
    for (auto c : counts)
      if (c > 0) ++nonzero;
    if (nonzero <= 1 || n < 2) {
      make_leaf(tree, node);
      return;
    }

    const Split split = bins ? best_split_binned(begin, end)
                             : best_split_exact(begin, end);
    if (split.feature < 0) {
      make_leaf(tree, node);
      return;
    }

    const auto mid = static_cast<std::size_t>(
        std::partition(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                       indices.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::int32_t i) {
                         return x(i, split.feature) <= split.threshold;
                       }) -
        indices.begin());

    tree.nodes[static_cast<std::size_t>(node)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(node)].threshold = split.threshold;
    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(node)].left = left;
    tree.nodes[static_cast<std::size_t>(node)].right = left + 1;
    stack.push_back({left, begin, mid});
    stack.push_back({left + 1, mid, end});
  }

  void make_leaf(RandomForest::Tree& tree, std::int32_t node) {
    // counts holds this node's tally; majority, ties to the smallest class.
    std::int64_t best = -1;
    std::int32_t cls = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] > best) {
        best = counts[c];
        cls = static_cast<std::int32_t>(c);
      }
    tree.nodes[static_cast<std::size_t>(node)].leaf_class = cls;
  }

  void draw_features() {
    // mtry distinct features by partial Fisher-Yates.
    for (int k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<std::size_t> pick(
          static_cast<std::size_t>(k), feature_pool.size() - 1);
      std::swap(feature_pool[static_cast<std::size_t>(k)],
                feature_pool[pick(rng)]);
    }
  }

  // Evaluates one candidate boundary given left-side tallies; shared by the
  // exact and binned scans.
  static void consider(Split& best, double parent_gini, double total,
                       double nl, double left_sq, double right_sq, int feat,
                       float threshold) {
    const double nr = total - nl;
    const double weighted = (nl - left_sq / nl) + (nr - right_sq / nr);
    const double gain = parent_gini - weighted / total;
    if (gain > best.impurity_gain + 1e-15) best = {feat, threshold, gain};
  }

  Split best_split_exact(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const double total = static_cast<double>(n);
    double parent_sq = 0.0;
    for (auto c : counts) parent_sq += static_cast<double>(c) * c;
    const double parent_gini = 1.0 - parent_sq / (total * total);

    draw_features();
    Split best;
    scratch.resize(n);
    for (int k = 0; k < mtry; ++k) {
      const int feat = feature_pool[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t s = indices[begin + i];
        scratch[i] = {x(s, feat), static_cast<std::int32_t>(
                                      y[static_cast<std::size_t>(s)])};
      }
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (scratch.front().first == scratch.back().first) continue;

      std::fill(left_counts.begin(), left_counts.end(), 0);
      double left_sq = 0.0;
      double right_sq = parent_sq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto cls = static_cast<std::size_t>(scratch[i].second);
        // Incremental update of sum of squared counts on both sides.
        left_sq += 2.0 * static_cast<double>(left_counts[cls]) + 1.0;
        right_sq -=
            2.0 * static_cast<double>(counts[cls] - left_counts[cls]) - 1.0;
        ++left_counts[cls];
        if (scratch[i].first == scratch[i + 1].first) continue;

        float threshold = scratch[i].first +
                          (scratch[i + 1].first - scratch[i].first) / 2.0f;
        // Guard against midpoint rounding onto the right value.
        if (threshold >= scratch[i + 1].first) threshold = scratch[i].first;
        consider(best, parent_gini, total,
                 static_cast<double>(i + 1), left_sq, right_sq, feat,
                 threshold);
      }
    }
    if (best.impurity_gain <= 1e-12) best.feature = -1;
    return best;
  }

  Split best_split_binned(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const double total = static_cast<double>(n);
    double parent_sq = 0.0;
    for (auto c : counts) parent_sq += static_cast<double>(c) * c;
    const double parent_gini = 1.0 - parent_sq / (total * total);
    const auto k_classes = static_cast<std::size_t>(n_classes);

    draw_features();
    Split best;
    // One pass over the node's samples fills the histograms of all sampled
    // features at once; the per-feature stride keeps each slot independent.
    const std::size_t slot = static_cast<std::size_t>(kMaxBins) * k_classes;
    for (int k = 0; k < mtry; ++k) {
      const int feat = feature_pool[static_cast<std::size_t>(k)];
      const std::size_t n_bins =
          bins->cuts[static_cast<std::size_t>(feat)].size() + 1;
      std::fill(hist.begin() + static_cast<std::ptrdiff_t>(
                                   static_cast<std::size_t>(k) * slot),
                hist.begin() + static_cast<std::ptrdiff_t>(
                                   static_cast<std::size_t>(k) * slot +
                                   n_bins * k_classes),
                0);
    }
    for (std::size_t i = begin; i < end; ++i) {
      const std::int32_t s = indices[i];
      const std::uint8_t* code_row = bins->codes.data() +
                                     static_cast<std::size_t>(s) *
                                         static_cast<std::size_t>(x.cols());
      const auto cls =
          static_cast<std::size_t>(y[static_cast<std::size_t>(s)]);
      for (int k = 0; k < mtry; ++k) {
        const int feat = feature_pool[static_cast<std::size_t>(k)];
        ++hist[static_cast<std::size_t>(k) * slot +
               static_cast<std::size_t>(code_row[feat]) * k_classes + cls];
      }
    }
    for (int k = 0; k < mtry; ++k) {
      const int feat = feature_pool[static_cast<std::size_t>(k)];
      const auto& cuts = bins->cuts[static_cast<std::size_t>(feat)];
      if (cuts.empty()) continue;
      const int n_bins = static_cast<int>(cuts.size()) + 1;
      const std::int32_t* fh = hist.data() + static_cast<std::size_t>(k) * slot;
      std::fill(left_counts.begin(), left_counts.end(), 0);
      double left_sq = 0.0;
      double right_sq = parent_sq;
      std::size_t nl = 0;
      for (int b = 0; b + 1 < n_bins; ++b) {
        for (std::size_t c = 0; c < k_classes; ++c) {
          const std::int64_t add =
              fh[static_cast<std::size_t>(b) * k_classes + c];
          if (add == 0) continue;
          left_sq += static_cast<double>(add) *
                     (2.0 * static_cast<double>(left_counts[c]) +
                      static_cast<double>(add));
          const std::int64_t right_before = counts[c] - left_counts[c];
          right_sq -= static_cast<double>(add) *
                      (2.0 * static_cast<double>(right_before) -
                       static_cast<double>(add));
          left_counts[c] += add;
          nl += static_cast<std::size_t>(add);
        }
        if (nl == 0 || nl == n) continue;
        consider(best, parent_gini, total,
                 static_cast<double>(nl), left_sq, right_sq, feat,
                 cuts[static_cast<std::size_t>(b)]);
      }
    }
    if (best.impurity_gain <= 1e-12) best.feature = -1;
    return best;
  }
};

}  // namespace

void RandomForest::fit(const PipelineData& x_in, const std::vector<int>& y) {
  if (!x_in.is_flat)
    throw std::invalid_argument("random_forest: expects flat feature vectors");
  const Eigen::MatrixXd& xd = x_in.flat;
  if (static_cast<std::size_t>(xd.rows()) != y.size())
    throw std::invalid_argument("random_forest: label count mismatch");

  std::set<int> cls_set(y.begin(), y.end());
  if (cls_set.size() < 2)
    throw std::invalid_argument("random_forest: fit needs at least two classes");
  classes.assign(cls_set.begin(), cls_set.end());
  std::map<int, int> to_idx;
  for (std::size_t i = 0; i < classes.size(); ++i)
    to_idx[classes[i]] = static_cast<int>(i);
  std::vector<int> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yi[i] = to_idx[y[i]];

  train_ = xd.cast<float>();
  const int mtry = std::max(
      1, static_cast<int>(std::sqrt(static_cast<double>(xd.cols()))));

  FeatureBins bins;
  const bool binned = y.size() > kBinnedThreshold;
  if (binned) bins = FeatureBins::build(train_);

  trees.assign(static_cast<std::size_t>(n_trees_), {});
  const unsigned n_threads =
      std::max(1u, std::min(std::thread::hardware_concurrency(),
                            static_cast<unsigned>(n_trees_)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t; (t = next.fetch_add(1)) < n_trees_;) {
      TreeBuilder builder{train_,
                          yi,
                          binned ? &bins : nullptr,
                          static_cast<int>(classes.size()),
                          mtry,
                          make_rng(mix_seed(seed_, 0x464f52ULL,
                                            static_cast<std::uint64_t>(t)))};
      trees[static_cast<std::size_t>(t)] = builder.build();
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  train_.resize(0, 0);
}

Eigen::MatrixXd RandomForest::vote_matrix(const PipelineData& x_in) const {
  if (!x_in.is_flat)
    throw std::invalid_argument("random_forest: expects flat feature vectors");
  const Eigen::MatrixXf x = x_in.flat.cast<float>();
  Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(
      x.rows(), static_cast<Eigen::Index>(classes.size()));
  for (const auto& tree : trees) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::int32_t node = 0;
      while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      votes(i, tree.nodes[static_cast<std::size_t>(node)].leaf_class) += 1.0;
    }
  }
  return votes / static_cast<double>(trees.size());
}

std::vector<int> RandomForest::predict(const PipelineData& x_in) const {
  const Eigen::MatrixXd votes = vote_matrix(x_in);
  std::vector<int> out(static_cast<std::size_t>(votes.rows()));
  for (Eigen::Index i = 0; i < votes.rows(); ++i) {
    Eigen::Index best = 0;
    votes.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<double> RandomForest::decision_scores(
    const PipelineData& x_in) const {
  const Eigen::MatrixXd votes = vote_matrix(x_in);
  std::vector<double> out(static_cast<std::size_t>(votes.rows()));
  for (Eigen::Index i = 0; i < votes.rows(); ++i)
    out[static_cast<std::size_t>(i)] = votes(i, votes.cols() - 1);
  return out;
}

}  // namespace bci
