#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bci/runner.hpp"

using namespace bci;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bci_runner_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& body) {
  const fs::path p = fs::temp_directory_path() / "bci_runner_config.json";
  std::ofstream(p) << body;
  return p;
}

RunConfig tiny_config(const fs::path& root) {
  RunConfig cfg;
  cfg.subjects = 2;
  cfg.sessions_per_subject = 1;
  cfg.replicates = 1;
  cfg.windows = {232};
  cfg.experiments = {Experiment::binary};
  cfg.output_root = root;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run configs parse with defaults and round-trip") {
  const RunConfig defaults = read_run_config(write_config("{}"));
  CHECK(defaults.master_seed == 42);
  CHECK(defaults.subjects == 10);
  CHECK(defaults.sessions_per_subject == 20);
  CHECK(defaults.windows == std::vector<std::size_t>{58, 116, 174, 232});
  CHECK(defaults.replicates == 5);
  CHECK(defaults.ica);
  CHECK(defaults.experiments.size() == 2);

  RunConfig cfg = tiny_config("somewhere");
  cfg.master_seed = 7;
  cfg.band_high_hz = 20.0;
  const fs::path p = fs::temp_directory_path() / "bci_runner_roundtrip.json";
  write_run_config(cfg, p);
  const RunConfig back = read_run_config(p);
  CHECK(back.master_seed == 7);
  CHECK(back.subjects == 2);
  CHECK(back.band_high_hz == 20.0);
  CHECK(back.windows == cfg.windows);
  CHECK(back.experiments == cfg.experiments);
  CHECK(back.output_root == cfg.output_root);
  fs::remove(p);
}

TEST_CASE("invalid run configs raise ConfigError") {
  CHECK_THROWS_AS(read_run_config("no_such_file.json"), ConfigError);
  CHECK_THROWS_AS(read_run_config(write_config("not json")), ConfigError);
  CHECK_THROWS_AS(read_run_config(write_config("[1,2]")), ConfigError);
  CHECK_THROWS_WITH_AS(read_run_config(write_config("{\"subjects\": 1}")),
                       doctest::Contains("subjects"), ConfigError);
  CHECK_THROWS_WITH_AS(
      read_run_config(write_config("{\"windows\": [0]}")),
      doctest::Contains("window"), ConfigError);
  CHECK_THROWS_WITH_AS(
      read_run_config(write_config("{\"windows\": [500]}")),
      doctest::Contains("window"), ConfigError);
  CHECK_THROWS_WITH_AS(
      read_run_config(write_config("{\"experiments\": [\"banana\"]}")),
      doctest::Contains("banana"), ConfigError);
  CHECK_THROWS_WITH_AS(
      read_run_config(
          write_config("{\"band_low_hz\": 20, \"band_high_hz\": 5}")),
      doctest::Contains("band"), ConfigError);
}

TEST_CASE("an unwritable output root fails the setup stage") {
  const fs::path blocker = fs::temp_directory_path() / "bci_runner_blocker";
  std::ofstream(blocker) << "x";
  RunConfig cfg = tiny_config(blocker / "nested");
  std::ostringstream log;
  try {
    run_all(cfg, 1, log);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage == "setup");
    CHECK(std::string(e.what()).find("output root") != std::string::npos);
  }
  fs::remove(blocker);
}

TEST_CASE("run-all produces the artifact tree, caches, and is deterministic") {
  const fs::path root_a = temp_dir("a");
  const fs::path root_b = temp_dir("b");
  RunConfig cfg = tiny_config(root_a);

  std::ostringstream log;
  REQUIRE(run_all(cfg, 1, log) == 0);

  // Artifact tree.
  CHECK(fs::exists(root_a / "sessions" / "subject00_session00.csv"));
  CHECK(fs::exists(root_a / "sessions" / "subject01_session00.csv"));
  CHECK(fs::exists(root_a / "preprocessed" / "base" /
                   "subject00_session00.csv"));
  CHECK(fs::exists(root_a / "preprocessed" / "ica" /
                   "subject01_session00.csv"));
  CHECK(fs::exists(root_a / "epochs" / "base" / "subject00.csv"));
  CHECK(fs::exists(root_a / "epochs" / "ica" / "subject01.csv"));
  CHECK(fs::exists(root_a / "datasets" / "binary_subject00_replicate0.json"));
  CHECK(fs::exists(root_a / "reports" / "binary" / "base" / "report.json"));
  CHECK(fs::exists(root_a / "reports" / "binary" / "base_ica" /
                   "report.json"));
  CHECK(fs::exists(root_a / "reports" / "binary" / "statistics" / "w232" /
                   "report.json"));
  CHECK(fs::exists(root_a / "reports" / "binary" / "statistics" /
                   "f1_by_window.svg"));
  // Binary-only run: no multiclass reports.
  CHECK_FALSE(fs::exists(root_a / "reports" / "multiclass"));

  // A second invocation skips every stage.
  std::ostringstream relog;
  REQUIRE(run_all(cfg, 1, relog) == 0);
  for (const char* stage :
       {"synth", "preprocess", "epochs", "datasets", "evaluate"})
    CHECK(relog.str().find(std::string("stage ") + stage + ": cached") !=
          std::string::npos);

  // A fresh root reproduces the report bytes.
  cfg.output_root = root_b;
  std::ostringstream log_b;
  REQUIRE(run_all(cfg, 1, log_b) == 0);
  for (const char* rel :
       {"reports/binary/base/report.json",
        "reports/binary/statistics/w232/report.json"}) {
    CHECK(slurp(root_a / rel) == slurp(root_b / rel));
    CHECK(!slurp(root_a / rel).empty());
  }

  fs::remove_all(root_a);
  fs::remove_all(root_b);
}
