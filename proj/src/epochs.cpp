#include "bci/epochs.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>

namespace bci {

namespace {

const char* kHeader =
    "subject_id,session_id,epoch_id,label,sample_idx,Fp1,Fp2,C3,C4,P7,P8,O1,O2";

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

}  // namespace

std::vector<Epoch> extract_epochs(const SessionRecording& rec,
                                  std::size_t* n_dropped) {
  if (rec.markers.empty())
    throw std::runtime_error("extract_epochs: recording has no markers");

  std::vector<Epoch> out;
  std::size_t dropped = 0;
  int epoch_id = 0;
  const auto n = rec.n_samples();
  for (const auto& m : rec.markers) {
    if (m.sample_index < static_cast<std::size_t>(kEpochPre) ||
        m.sample_index + static_cast<std::size_t>(kEpochPost) >= n) {
      ++dropped;
      continue;
    }
    Epoch e;
    e.subject_id = rec.subject_id;
    e.session_id = rec.session_id;
    e.epoch_id = epoch_id++;
    e.label = m.kind;
    e.onset_sample = m.sample_index;
    e.data = rec.samples.block(
        0, static_cast<Eigen::Index>(m.sample_index - kEpochPre),
        static_cast<Eigen::Index>(kNumChannels), kEpochLen);
    out.push_back(std::move(e));
  }
  if (n_dropped) *n_dropped = dropped;
  return out;
}

Epoch baseline_correct(const Epoch& epoch) {
  Epoch out = epoch;
  const Eigen::VectorXd baseline =
      epoch.data.leftCols(kEpochPre).rowwise().mean();
  out.data = epoch.data.colwise() - baseline;
  return out;
}

void write_epochs_csv(const std::vector<Epoch>& epochs,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_epochs_csv: cannot open " + path.string());
  std::string buf;
  buf.reserve(1 << 20);
  buf += kHeader;
  buf += '\n';
  char field[64];
  for (const auto& e : epochs) {
    if (e.data.rows() != static_cast<Eigen::Index>(kNumChannels) ||
        e.data.cols() != kEpochLen)
      throw std::runtime_error("write_epochs_csv: epoch has wrong shape");
    for (int t = 0; t < kEpochLen; ++t) {
      std::snprintf(field, sizeof(field), "%d,%d,%d,%d,%d", e.subject_id,
                    e.session_id, e.epoch_id,
                    e.label == StimulusKind::target ? 1 : 0, t - kEpochPre);
      buf += field;
      for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
        std::snprintf(field, sizeof(field), ",%.6f",
                      e.data(static_cast<Eigen::Index>(ch), t));
        buf += field;
      }
      buf += '\n';
      if (buf.size() > (1 << 20) - 1024) {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw std::runtime_error("write_epochs_csv: write failed for " +
                             path.string());
}

std::vector<Epoch> read_epochs_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("read_epochs_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) fail(path, 1, "unexpected header: " + line);

  std::vector<Epoch> epochs;
  Epoch cur;
  int cur_rows = 0;
  bool have_cur = false;
  std::size_t lineno = 1;

  auto flush = [&](void) {
    if (!have_cur) return;
    if (cur_rows != kEpochLen)
      fail(path, lineno,
           "epoch " + std::to_string(cur.epoch_id) + " has " +
               std::to_string(cur_rows) + " samples, expected " +
               std::to_string(kEpochLen));
    epochs.push_back(cur);
    have_cur = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const char* p = line.c_str();
    char* end = nullptr;
    constexpr std::size_t kFields = 5 + kNumChannels;
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

    const int subject = static_cast<int>(vals[0]);
    const int session = static_cast<int>(vals[1]);
    const int eid = static_cast<int>(vals[2]);
    const int label = static_cast<int>(vals[3]);
    const int sample_idx = static_cast<int>(vals[4]);
    if (label != 0 && label != 1) fail(path, lineno, "invalid label");
    if (sample_idx < -kEpochPre || sample_idx > kEpochPost)
      fail(path, lineno, "sample_idx out of range");

    const bool new_epoch = !have_cur || subject != cur.subject_id ||
                           session != cur.session_id || eid != cur.epoch_id;
    if (new_epoch) {
      flush();
      cur = Epoch{};
      cur.subject_id = subject;
      cur.session_id = session;
      cur.epoch_id = eid;
      cur.label = label == 1 ? StimulusKind::target : StimulusKind::non_target;
      cur.data.setZero(static_cast<Eigen::Index>(kNumChannels), kEpochLen);
      cur_rows = 0;
      have_cur = true;
    }
    if (sample_idx + kEpochPre != cur_rows)
      fail(path, lineno, "non-contiguous sample_idx");
    for (std::size_t ch = 0; ch < kNumChannels; ++ch)
      cur.data(static_cast<Eigen::Index>(ch), sample_idx + kEpochPre) =
          vals[5 + ch];
    ++cur_rows;
  }
  flush();
  return epochs;
}

}  // namespace bci
