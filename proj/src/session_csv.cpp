#include "bci/session_csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bci {

namespace {

const char* kHeader = "timestamp_ms,Fp1,Fp2,C3,C4,P7,P8,O1,O2,stimulus";

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

}  // namespace

void write_session_csv(const SessionRecording& rec,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_session_csv: cannot open " + path.string());

  std::vector<int> stim(rec.n_samples(), 0);
  for (const auto& m : rec.markers) {
    if (m.sample_index >= rec.n_samples())
      throw std::runtime_error("write_session_csv: marker out of range");
    stim[m.sample_index] = stimulus_code(m.kind);
  }

  std::string buf;
  buf.reserve(1 << 20);
  buf += kHeader;
  buf += '\n';
  char field[64];
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    std::snprintf(field, sizeof(field), "%.3f", rec.timestamps_ms[i]);
    buf += field;
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      std::snprintf(field, sizeof(field), ",%.6f",
                    rec.samples(static_cast<Eigen::Index>(ch),
                                static_cast<Eigen::Index>(i)));
      buf += field;
    }
    buf += ',';
    buf += static_cast<char>('0' + stim[i]);
    buf += '\n';
    if (buf.size() > (1 << 20) - 1024) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw std::runtime_error("write_session_csv: write failed for " +
                             path.string());
}

SessionRecording read_session_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("read_session_csv: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) fail(path, 1, "unexpected header: " + line);

  std::vector<double> timestamps;
  std::vector<std::array<double, kNumChannels>> rows;
  std::vector<StimulusEvent> markers;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const char* p = line.c_str();
    char* end = nullptr;
    std::array<double, kNumChannels + 2> vals{};
    std::size_t n_fields = 0;
    while (true) {
      if (n_fields >= vals.size()) fail(path, lineno, "too many columns");
      vals[n_fields] = std::strtod(p, &end);
      if (end == p) fail(path, lineno, "malformed numeric field");
      ++n_fields;
      p = end;
      if (*p == ',') {
        ++p;
      } else if (*p == '\0') {
        break;
      } else {
        fail(path, lineno, "unexpected character in row");
      }
    }
    if (n_fields != kNumChannels + 2)
      fail(path, lineno,
           "expected " + std::to_string(kNumChannels + 2) + " columns, got " +
               std::to_string(n_fields));

    if (!timestamps.empty() && vals[0] <= timestamps.back())
      fail(path, lineno, "timestamps not strictly increasing");
    timestamps.push_back(vals[0]);

    std::array<double, kNumChannels> row{};
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) row[ch] = vals[ch + 1];
    rows.push_back(row);

    const int stim = static_cast<int>(vals[kNumChannels + 1]);
    if (stim < 0 || stim > 2) fail(path, lineno, "invalid stimulus code");
    if (stim != 0)
      markers.push_back({rows.size() - 1, stim == 2 ? StimulusKind::target
                                                    : StimulusKind::non_target});
  }

  SessionRecording rec;
  rec.timestamps_ms = std::move(timestamps);
  rec.samples.resize(static_cast<Eigen::Index>(kNumChannels),
                     static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t ch = 0; ch < kNumChannels; ++ch)
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) =
          rows[i][ch];
  rec.markers = std::move(markers);
  return rec;
}

}  // namespace bci
