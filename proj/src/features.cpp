#include "bci/features.hpp"

#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <set>
#include <stdexcept>

namespace bci {

namespace {

// Order-statistic window over a multiset pair; low holds the smaller half.
class SlidingMedian {
 public:
  void insert(double x) {
    if (low_.empty() || x <= *low_.rbegin())
      low_.insert(x);
    else
      high_.insert(x);
    rebalance();
  }
  void erase(double x) {
    auto it = low_.find(x);
    if (it != low_.end())
      low_.erase(it);
    else
      high_.erase(high_.find(x));
    rebalance();
  }
  double median() const {
    const std::size_t n = low_.size() + high_.size();
    if (n % 2 == 1) return *low_.rbegin();
    return 0.5 * (*low_.rbegin() + *high_.begin());
  }

 private:
  void rebalance() {
    const std::size_t n = low_.size() + high_.size();
    const std::size_t target = (n + 1) / 2;
    while (low_.size() > target) {
      auto it = std::prev(low_.end());
      high_.insert(*it);
      low_.erase(it);
    }
    while (low_.size() < target && !high_.empty()) {
      auto it = high_.begin();
      low_.insert(*it);
      high_.erase(it);
    }
  }
  std::multiset<double> low_, high_;
};

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

}  // namespace

FeatureBlock make_block(const std::vector<Epoch>& epochs) {
  if (epochs.empty()) throw std::invalid_argument("make_block: no epochs");
  FeatureBlock block;
  block.label = epochs.front().label == StimulusKind::target ? 1 : 0;
  block.subject_id = epochs.front().subject_id;
  block.rows.resize(static_cast<Eigen::Index>(epochs.size()) * kEpochLen,
                    static_cast<Eigen::Index>(kNumChannels));
  Eigen::Index r = 0;
  for (const auto& e : epochs) {
    const int lbl = e.label == StimulusKind::target ? 1 : 0;
    if (lbl != block.label)
      throw std::invalid_argument("make_block: mixed labels in one block");
    block.rows.middleRows(r, kEpochLen) = e.data.transpose();
    r += kEpochLen;
  }
  return block;
}

std::vector<FeatureVector> sliding_stats(const FeatureBlock& block,
                                         std::size_t window,
                                         std::size_t stride) {
  const auto b = static_cast<std::size_t>(block.rows.rows());
  if (window == 0 || window > b)
    throw std::invalid_argument("sliding_stats: window larger than block");
  if (stride < 1) throw std::invalid_argument("sliding_stats: stride >= 1");

  const std::size_t count = (b - window) / stride + 1;
  std::vector<FeatureVector> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].label = block.label;
    out[i].subject_id = block.subject_id;
    out[i].window_start = i * stride;
  }

  const double w = static_cast<double>(window);
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const double* col = block.rows.col(static_cast<Eigen::Index>(ch)).data();

    // Prefix sums for mean/variance/sum.
    std::vector<double> ps(b + 1, 0.0), pss(b + 1, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      ps[i + 1] = ps[i] + col[i];
      pss[i + 1] = pss[i] + col[i] * col[i];
    }

    std::deque<std::size_t> maxq;  // indices, values decreasing
    SlidingMedian med;
    std::size_t filled = 0;  // elements [0, filled) inserted into med/maxq

    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t start = i * stride;
      const std::size_t stop = start + window;
      while (filled < stop) {
        while (!maxq.empty() && col[maxq.back()] <= col[filled])
          maxq.pop_back();
        maxq.push_back(filled);
        med.insert(col[filled]);
        ++filled;
      }
      while (!maxq.empty() && maxq.front() < start) maxq.pop_front();
      if (i > 0)
        for (std::size_t j = (i - 1) * stride; j < start && j < stop; ++j)
          med.erase(col[j]);

      const double sum = ps[stop] - ps[start];
      const double sumsq = pss[stop] - pss[start];
      const double mean = sum / w;
      double var = sumsq / w - mean * mean;
      if (var < 0.0) var = 0.0;

      double* v = out[i].values.data() + ch * kStatsPerChannel;
      v[0] = mean;
      v[1] = var;
      v[2] = std::sqrt(var);
      v[3] = col[maxq.front()];
      v[4] = sum;
      v[5] = med.median();
    }
  }
  return out;
}

std::string features_csv_header() {
  std::string h = "subject_id,label,window_start";
  for (std::size_t ch = 0; ch < kNumChannels; ++ch)
    for (std::size_t s = 0; s < kStatsPerChannel; ++s)
      h += std::string(",") + kStatNames[s] + "_" + kChannelNames[ch];
  return h;
}

void write_features_csv(const std::vector<FeatureVector>& vectors,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_features_csv: cannot open " +
                             path.string());
  std::string buf = features_csv_header() + "\n";
  char field[64];
  for (const auto& fv : vectors) {
    std::snprintf(field, sizeof(field), "%d,%d,%zu", fv.subject_id, fv.label,
                  fv.window_start);
    buf += field;
    for (double v : fv.values) {
      std::snprintf(field, sizeof(field), ",%.10g", v);
      buf += field;
    }
    buf += '\n';
    if (buf.size() > (1 << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw std::runtime_error("write_features_csv: write failed for " +
                             path.string());
}

std::vector<FeatureVector> read_features_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("read_features_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != features_csv_header())
    fail(path, 1, "unexpected header: " + line);

  std::vector<FeatureVector> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    constexpr std::size_t kFields = 3 + kNumFeatures;
    double vals[kFields];
    for (std::size_t f = 0; f < kFields; ++f) {
      vals[f] = std::strtod(p, &end);
      if (end == p) fail(path, lineno, "malformed numeric field");
      p = end;
      if (f + 1 < kFields) {
        if (*p != ',') fail(path, lineno, "wrong column count");
        ++p;
      }
    }
    if (*p != '\0') fail(path, lineno, "wrong column count");
    FeatureVector fv;
    fv.subject_id = static_cast<int>(vals[0]);
    fv.label = static_cast<int>(vals[1]);
    fv.window_start = static_cast<std::size_t>(vals[2]);
    for (std::size_t i = 0; i < kNumFeatures; ++i) fv.values[i] = vals[3 + i];
    out.push_back(fv);
  }
  return out;
}

}  // namespace bci
