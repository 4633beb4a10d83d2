#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include "bci/session_csv.hpp"
#include "bci/stream.hpp"
#include "bci/synth.hpp"

using namespace bci;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bci_acquire_" + name);
  fs::remove(p);
  return p;
}

SessionRecording small_recording(int n = 100) {
  SessionRecording rec;
  rec.subject_id = 1;
  rec.session_id = 2;
  rec.samples.resize(8, n);
  for (int i = 0; i < n; ++i) {
    rec.timestamps_ms.push_back(i * 1000.0 / 256.0);
    for (int c = 0; c < 8; ++c)
      rec.samples(c, i) = 0.25 * c - 0.015625 * i;
  }
  rec.markers.push_back({30, StimulusKind::non_target});
  rec.markers.push_back({60, StimulusKind::target});
  return rec;
}

}  // namespace

TEST_CASE("session CSV round-trips losslessly") {
  const SessionRecording rec = small_recording();
  const fs::path p = temp_file("roundtrip.csv");
  write_session_csv(rec, p);

  const SessionRecording back = read_session_csv(p);
  REQUIRE(back.n_samples() == rec.n_samples());
  // Timestamps persist at millisecond precision with 3 decimals.
  for (std::size_t i = 0; i < rec.n_samples(); ++i)
    CHECK(std::abs(back.timestamps_ms[i] - rec.timestamps_ms[i]) <= 5.1e-4);
  // Values are printed with 6 decimals; these inputs are exact at that scale.
  CHECK(back.samples == rec.samples);
  REQUIRE(back.markers.size() == 2);
  CHECK(back.markers[0].sample_index == 30);
  CHECK(back.markers[0].kind == StimulusKind::non_target);
  CHECK(back.markers[1].sample_index == 60);
  CHECK(back.markers[1].kind == StimulusKind::target);
  fs::remove(p);
}

TEST_CASE("synth sessions persist with full protocol counts") {
  const SessionRecording rec = generate_session(make_subject_profile(0, 42),
                                                make_schedule(42), 0);
  const fs::path p = temp_file("synth.csv");
  write_session_csv(rec, p);

  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "timestamp_ms,Fp1,Fp2,C3,C4,P7,P8,O1,O2,stimulus");
  std::size_t rows = 0, nonzero = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto comma = line.rfind(',');
    if (line.substr(comma + 1) != "0") ++nonzero;
  }
  CHECK(rows == 54528);
  CHECK(nonzero == 200);

  const SessionRecording back = read_session_csv(p);
  CHECK(back.n_samples() == 54528);
  CHECK(back.count_markers(StimulusKind::target) == 40);
  CHECK(back.count_markers(StimulusKind::non_target) == 160);
  fs::remove(p);
}

TEST_CASE("empty recording writes a header-only file") {
  const fs::path p = temp_file("empty.csv");
  write_session_csv(SessionRecording{}, p);
  std::ifstream in(p);
  std::string line;
  CHECK(std::getline(in, line));
  CHECK(line == "timestamp_ms,Fp1,Fp2,C3,C4,P7,P8,O1,O2,stimulus");
  CHECK_FALSE(std::getline(in, line));
  fs::remove(p);
}

TEST_CASE("malformed CSV inputs are rejected with the offending line") {
  const std::string header = "timestamp_ms,Fp1,Fp2,C3,C4,P7,P8,O1,O2,stimulus\n";
  const std::string good = "0.000,1,1,1,1,1,1,1,1,0\n";

  const fs::path p = temp_file("bad.csv");
  auto write_and_expect_throw = [&](const std::string& body,
                                    const std::string& needle) {
    std::ofstream(p) << header << body;
    try {
      read_session_csv(p);
      FAIL_CHECK("expected a parse error for: " << body);
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  // 7 data columns instead of 8.
  write_and_expect_throw("0.000,1,1,1,1,1,1,1,0\n", ":2");
  // Non-numeric field.
  write_and_expect_throw("0.000,1,x,1,1,1,1,1,1,0\n", ":2");
  // Non-monotone timestamps.
  write_and_expect_throw(good + "10.0,1,1,1,1,1,1,1,1,0\n" +
                             "5.0,1,1,1,1,1,1,1,1,0\n",
                         ":4");
  // Invalid stimulus code.
  write_and_expect_throw("0.000,1,1,1,1,1,1,1,1,7\n", "stimulus");
  fs::remove(p);
}

TEST_CASE("stream replay round-trips through ingest") {
  const SessionRecording rec = small_recording(600);
  const std::uint16_t port = 39871;

  SessionRecording got;
  std::thread server([&] {
    got = stream_ingest("127.0.0.1", port,
                        rec.timestamps_ms.back() / 1000.0);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  stream_replay(rec, "127.0.0.1", port);
  server.join();

  REQUIRE(got.n_samples() == rec.n_samples());
  CHECK_FALSE(got.truncated);
  for (Eigen::Index c = 0; c < 8; ++c)
    for (std::size_t i = 0; i < rec.n_samples(); ++i)
      CHECK(got.samples(c, static_cast<Eigen::Index>(i)) ==
            doctest::Approx(rec.samples(c, static_cast<Eigen::Index>(i)))
                .epsilon(1e-6));
  REQUIRE(got.markers.size() == rec.markers.size());
  for (std::size_t m = 0; m < rec.markers.size(); ++m) {
    CHECK(got.markers[m].sample_index == rec.markers[m].sample_index);
    CHECK(got.markers[m].kind == rec.markers[m].kind);
  }
}

TEST_CASE("early stream close yields a truncated recording") {
  const std::uint16_t port = 39872;

  SessionRecording got;
  std::thread server([&] {
    // Ask for far more sample time than the producer will deliver.
    got = stream_ingest("127.0.0.1", port, 30.0);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));

  // A producer that dies mid-session: a few samples, no END sentinel.
  std::string payload = "EEGSTREAM v1 channels=8 rate=256\n";
  char line[128];
  for (int i = 0; i < 100; ++i) {
    std::snprintf(line, sizeof(line), "S,%.3f,1,2,3,4,5,6,7,8\n",
                  i * 1000.0 / 256.0);
    payload += line;
  }
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  REQUIRE(::send(fd, payload.data(), payload.size(), MSG_NOSIGNAL) ==
          static_cast<ssize_t>(payload.size()));
  ::close(fd);
  server.join();

  CHECK(got.n_samples() == 100);
  CHECK(got.truncated);
}
