#include "bci/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bci {

namespace {

constexpr const char* kHandshake = "EEGSTREAM v1 channels=8 rate=256";

struct FdCloser {
  int fd{-1};
  ~FdCloser() {
    if (fd >= 0) ::close(fd);
  }
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("stream: invalid host address " + host);
  return addr;
}

// Single-producer/single-consumer line queue fed by the socket reader thread.
class LineQueue {
 public:
  void push(std::string line) {
    std::lock_guard lock(mu_);
    lines_.push_back(std::move(line));
    cv_.notify_one();
  }
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_one();
  }
  // Returns false when the stream is closed and drained.
  bool pop(std::string& line) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !lines_.empty() || closed_; });
    if (lines_.empty()) return false;
    line = std::move(lines_.front());
    lines_.pop_front();
    return true;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool closed_{false};
};

void reader_loop(int fd, LineQueue& queue) {
  std::string pending;
  char buf[4096];
  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = pending.find('\n')) != std::string::npos) {
      std::string line = pending.substr(0, pos);
      pending.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      queue.push(std::move(line));
    }
  }
  if (!pending.empty()) queue.push(std::move(pending));
  queue.close();
}

std::vector<double> parse_csv_numbers(const std::string& line,
                                      std::size_t skip_prefix) {
  std::vector<double> vals;
  const char* p = line.c_str() + skip_prefix;
  char* end = nullptr;
  while (*p != '\0') {
    const double v = std::strtod(p, &end);
    if (end == p) throw std::runtime_error("stream: malformed frame: " + line);
    vals.push_back(v);
    p = end;
    if (*p == ',') ++p;
  }
  return vals;
}

}  // namespace

SessionRecording stream_ingest(const std::string& host, std::uint16_t port,
                               double duration_s) {
  FdCloser server{::socket(AF_INET, SOCK_STREAM, 0)};
  if (server.fd < 0) throw std::runtime_error("stream_ingest: socket failed");
  const int one = 1;
  ::setsockopt(server.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(host, port);
  if (::bind(server.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw std::runtime_error(std::string("stream_ingest: bind failed: ") +
                             std::strerror(errno));
  if (::listen(server.fd, 1) != 0)
    throw std::runtime_error("stream_ingest: listen failed");

  FdCloser conn{::accept(server.fd, nullptr, nullptr)};
  if (conn.fd < 0) throw std::runtime_error("stream_ingest: accept failed");

  LineQueue queue;
  std::thread reader(reader_loop, conn.fd, std::ref(queue));

  std::vector<double> timestamps;
  std::vector<std::array<double, kNumChannels>> rows;
  std::vector<std::pair<double, StimulusKind>> raw_markers;
  bool saw_handshake = false;
  bool saw_end = false;

  std::string line;
  try {
    while (queue.pop(line)) {
      if (line.empty()) continue;
      if (!saw_handshake) {
        if (line != kHandshake)
          throw std::runtime_error("stream_ingest: bad handshake: " + line);
        saw_handshake = true;
        continue;
      }
      if (line == "END") {
        saw_end = true;
        break;
      }
      if (line.rfind("S,", 0) == 0) {
        const auto vals = parse_csv_numbers(line, 2);
        if (vals.size() != kNumChannels + 1)
          throw std::runtime_error("stream_ingest: sample frame needs " +
                                   std::to_string(kNumChannels + 1) +
                                   " fields: " + line);
        if (!timestamps.empty() && vals[0] <= timestamps.back())
          throw std::runtime_error("stream_ingest: non-monotone timestamp");
        timestamps.push_back(vals[0]);
        std::array<double, kNumChannels> row{};
        for (std::size_t ch = 0; ch < kNumChannels; ++ch) row[ch] = vals[ch + 1];
        rows.push_back(row);
        if (vals[0] >= duration_s * 1000.0) break;
      } else if (line.rfind("M,", 0) == 0) {
        const auto vals = parse_csv_numbers(line, 2);
        if (vals.size() != 2)
          throw std::runtime_error("stream_ingest: marker frame needs 2 "
                                   "fields: " + line);
        const int code = static_cast<int>(vals[1]);
        if (code != 1 && code != 2)
          throw std::runtime_error("stream_ingest: invalid marker code");
        raw_markers.emplace_back(vals[0], code == 2 ? StimulusKind::target
                                                    : StimulusKind::non_target);
      } else {
        throw std::runtime_error("stream_ingest: unknown frame: " + line);
      }
    }
  } catch (...) {
    ::shutdown(conn.fd, SHUT_RDWR);
    reader.join();
    throw;
  }
  ::shutdown(conn.fd, SHUT_RDWR);
  reader.join();

  if (!saw_handshake)
    throw std::runtime_error("stream_ingest: connection closed before handshake");

  SessionRecording rec;
  rec.timestamps_ms = timestamps;
  rec.samples.resize(static_cast<Eigen::Index>(kNumChannels),
                     static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t ch = 0; ch < kNumChannels; ++ch)
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) =
          rows[i][ch];

  // Nearest-sample alignment of marker timestamps.
  for (const auto& [t_ms, kind] : raw_markers) {
    if (timestamps.empty()) break;
    const auto it =
        std::lower_bound(timestamps.begin(), timestamps.end(), t_ms);
    std::size_t idx = static_cast<std::size_t>(it - timestamps.begin());
    if (idx == timestamps.size()) {
      idx = timestamps.size() - 1;
    } else if (idx > 0 &&
               t_ms - timestamps[idx - 1] < timestamps[idx] - t_ms) {
      --idx;
    }
    rec.markers.push_back({idx, kind});
  }
  std::sort(rec.markers.begin(), rec.markers.end(),
            [](const auto& a, const auto& b) {
              return a.sample_index < b.sample_index;
            });

  const double span_ms =
      timestamps.empty() ? 0.0 : timestamps.back() + 1000.0 / kSampleRateHz;
  rec.truncated = !saw_end && span_ms + 1e-6 < duration_s * 1000.0;
  return rec;
}

void stream_replay(const SessionRecording& rec, const std::string& host,
                   std::uint16_t port) {
  FdCloser fd{::socket(AF_INET, SOCK_STREAM, 0)};
  if (fd.fd < 0) throw std::runtime_error("stream_replay: socket failed");
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw std::runtime_error(std::string("stream_replay: connect failed: ") +
                             std::strerror(errno));

  auto send_all = [&](const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd.fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw std::runtime_error("stream_replay: send failed");
      sent += static_cast<std::size_t>(n);
    }
  };

  std::string buf = std::string(kHandshake) + "\n";
  std::size_t next_marker = 0;
  char field[64];
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    // Markers are interleaved just before their sample.
    while (next_marker < rec.markers.size() &&
           rec.markers[next_marker].sample_index == i) {
      const auto& m = rec.markers[next_marker];
      std::snprintf(field, sizeof(field), "M,%.3f,%d\n",
                    rec.timestamps_ms[m.sample_index], stimulus_code(m.kind));
      buf += field;
      ++next_marker;
    }
    std::snprintf(field, sizeof(field), "S,%.3f", rec.timestamps_ms[i]);
    buf += field;
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      std::snprintf(field, sizeof(field), ",%.6f",
                    rec.samples(static_cast<Eigen::Index>(ch),
                                static_cast<Eigen::Index>(i)));
      buf += field;
    }
    buf += '\n';
    if (buf.size() > (1 << 16)) {
      send_all(buf);
      buf.clear();
    }
  }
  buf += "END\n";
  send_all(buf);
}

}  // namespace bci
