// Command-line front end: one subcommand per pipeline stage plus run-all.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bci/datasets.hpp"
#include "bci/dsp.hpp"
#include "bci/epochs.hpp"
#include "bci/eval.hpp"
#include "bci/features.hpp"
#include "bci/ica.hpp"
#include "bci/rng.hpp"
#include "bci/runner.hpp"
#include "bci/session_csv.hpp"
#include "bci/stream.hpp"
#include "bci/synth.hpp"

namespace fs = std::filesystem;
using namespace bci;

namespace {

// Reads <dir>/subject*.csv into a subject-id keyed map.
EpochsBySubject load_epoch_dir(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  EpochsBySubject by_subject;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    for (Epoch& e : read_epochs_csv(f))
      by_subject[e.subject_id].push_back(std::move(e));
  if (by_subject.empty())
    throw std::runtime_error("no epoch CSV files in " + dir.string());
  return by_subject;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"P300 authentication pipeline"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  int jobs = 1;
  app.add_option("--seed", seed, "master seed");
  app.add_option("--jobs", jobs, "worker threads for the evaluation grid");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic sessions");
  int sy_subjects = 1, sy_sessions = 1, sy_first_subject = 0;
  fs::path sy_out = "sessions";
  synth->add_option("--subjects", sy_subjects, "number of subjects");
  synth->add_option("--sessions", sy_sessions, "sessions per subject");
  synth->add_option("--first-subject", sy_first_subject, "first subject id");
  synth->add_option("--out", sy_out, "output directory")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "record a network stream");
  std::string in_host = "127.0.0.1";
  std::uint16_t in_port = 0;
  double in_duration = 213.0;
  fs::path in_out;
  ingest->add_option("--host", in_host, "listen address");
  ingest->add_option("--port", in_port, "listen port")->required();
  ingest->add_option("--duration", in_duration, "seconds to record");
  ingest->add_option("--out", in_out, "output session CSV")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "replay a session as a stream");
  std::string rp_host = "127.0.0.1";
  std::uint16_t rp_port = 0;
  fs::path rp_in;
  replay->add_option("file", rp_in, "session CSV")->required();
  replay->add_option("--host", rp_host, "target address");
  replay->add_option("--port", rp_port, "target port")->required();

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "notch + band-pass, then ICA");
  fs::path pp_in, pp_out;
  double pp_notch = 50.0, pp_q = 30.0, pp_low = 1.0, pp_high = 17.0;
  int pp_order = 6;
  bool pp_ica = false;
  double pp_thresh = 0.7;
  prep->add_option("input", pp_in, "session CSV")->required();
  prep->add_option("--out", pp_out, "output session CSV")->required();
  prep->add_option("--notch-hz", pp_notch, "notch frequency");
  prep->add_option("--notch-q", pp_q, "notch quality factor");
  prep->add_option("--band-low", pp_low, "band-pass low edge (Hz)");
  prep->add_option("--band-high", pp_high, "band-pass high edge (Hz)");
  prep->add_option("--order", pp_order, "Butterworth prototype order");
  prep->add_flag("--ica", pp_ica, "remove blink components");
  prep->add_option("--ica-threshold", pp_thresh, "blink correlation cutoff");

  // epochs
  auto* epochs_cmd = app.add_subcommand("epochs", "extract stimulus epochs");
  fs::path ep_in, ep_out;
  bool ep_targets_only = false, ep_no_baseline = false;
  epochs_cmd->add_option("input", ep_in, "session CSV")->required();
  epochs_cmd->add_option("--out", ep_out, "output epochs CSV")->required();
  epochs_cmd->add_flag("--targets-only", ep_targets_only,
                       "keep target epochs only");
  epochs_cmd->add_flag("--no-baseline", ep_no_baseline,
                       "skip baseline correction");

  // features
  auto* feats = app.add_subcommand("features", "sliding-window statistics");
  fs::path ft_in, ft_out;
  std::size_t ft_window = 232, ft_stride = 1;
  feats->add_option("input", ft_in, "epochs CSV")->required();
  feats->add_option("--out", ft_out, "output features CSV")->required();
  feats->add_option("--window", ft_window, "window size in samples");
  feats->add_option("--stride", ft_stride, "window stride in samples");

  // dataset
  auto* dset = app.add_subcommand("dataset", "build a labeled dataset");
  fs::path ds_dir, ds_manifest;
  std::string ds_mode = "binary";
  int ds_subject = 0, ds_replicate = 0;
  std::size_t ds_window = 0;
  dset->add_option("--epochs-dir", ds_dir, "directory of per-subject epochs")
      ->required();
  dset->add_option("--mode", ds_mode, "binary or multiclass")
      ->check(CLI::IsMember({"binary", "multiclass"}));
  dset->add_option("--subject", ds_subject, "legitimate subject (binary)");
  dset->add_option("--replicate", ds_replicate, "replicate index");
  dset->add_option("--window", ds_window,
                   "statistics window (0 keeps raw epochs)");
  dset->add_option("--out", ds_manifest, "manifest JSON path")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "run one experiment");
  std::string ev_experiment = "binary", ev_config = "base";
  std::size_t ev_window = 232;
  int ev_replicates = 5;
  fs::path ev_dir, ev_out;
  eval_cmd->add_option("--experiment", ev_experiment, "binary or multi")
      ->check(CLI::IsMember({"binary", "multi"}));
  eval_cmd->add_option("--config", ev_config, "base, ica or stats")
      ->check(CLI::IsMember({"base", "ica", "stats"}));
  eval_cmd->add_option("--window", ev_window, "statistics window");
  eval_cmd->add_option("--replicates", ev_replicates, "dataset replicates");
  eval_cmd
      ->add_option("--epochs-dir", ev_dir,
                   "per-subject epochs (the matching preprocessing variant)")
      ->required();
  eval_cmd->add_option("--out", ev_out, "report directory")->required();

  // run-all
  auto* runall = app.add_subcommand("run-all", "full pipeline from a config");
  fs::path ra_config;
  runall->add_option("--config", ra_config, "run configuration JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const bool seed_given = app.count("--seed") > 0;

  if (*synth) {
    fs::create_directories(sy_out);
    for (int s = sy_first_subject; s < sy_first_subject + sy_subjects; ++s) {
      const SubjectProfile profile = make_subject_profile(s, seed);
      for (int t = 0; t < sy_sessions; ++t) {
        const OddballSchedule schedule =
            make_schedule(mix_seed(seed, static_cast<std::uint64_t>(s),
                                   static_cast<std::uint64_t>(t)));
        const SessionRecording rec = generate_session(profile, schedule, t);
        char buf[48];
        std::snprintf(buf, sizeof(buf), "subject%02d_session%02d.csv", s, t);
        write_session_csv(rec, sy_out / buf);
      }
    }
    std::cout << "wrote " << sy_subjects * sy_sessions << " session(s) to "
              << sy_out.string() << "\n";
  } else if (*ingest) {
    const SessionRecording rec = stream_ingest(in_host, in_port, in_duration);
    write_session_csv(rec, in_out);
    std::cout << "recorded " << rec.n_samples() << " samples, "
              << rec.markers.size() << " markers"
              << (rec.truncated ? " (truncated)" : "") << "\n";
  } else if (*replay) {
    stream_replay(read_session_csv(rp_in), rp_host, rp_port);
  } else if (*prep) {
    SessionRecording rec = read_session_csv(pp_in);
    const BiquadCascade notch = design_notch(pp_notch, pp_q, rec.sample_rate);
    const BiquadCascade band = design_butterworth_bandpass(
        pp_order, pp_low, pp_high, rec.sample_rate);
    apply_zero_phase_rows(notch, rec.samples);
    apply_zero_phase_rows(band, rec.samples);
    if (pp_ica) {
      const IcaModel model =
          fastica_fit(rec.samples, kNumChannels, mix_seed(seed, 0x696361ULL));
      const std::vector<int> blinks =
          detect_artifact_components(model, rec.samples, pp_thresh);
      rec.samples = remove_components(model, rec.samples, blinks);
      std::cout << "removed " << blinks.size() << " component(s)\n";
    }
    write_session_csv(rec, pp_out);
  } else if (*epochs_cmd) {
    const SessionRecording rec = read_session_csv(ep_in);
    std::size_t dropped = 0;
    std::vector<Epoch> out;
    for (Epoch& e : extract_epochs(rec, &dropped)) {
      if (ep_targets_only && e.label != StimulusKind::target) continue;
      out.push_back(ep_no_baseline ? std::move(e) : baseline_correct(e));
    }
    write_epochs_csv(out, ep_out);
    std::cout << "wrote " << out.size() << " epoch(s), dropped " << dropped
              << " at the edges\n";
  } else if (*feats) {
    // One label-homogeneous block per (subject, label) group.
    std::map<std::pair<int, int>, std::vector<Epoch>> groups;
    for (Epoch& e : read_epochs_csv(ft_in))
      groups[{e.subject_id, static_cast<int>(e.label)}].push_back(
          std::move(e));
    std::vector<FeatureVector> vectors;
    for (const auto& [key, epochs] : groups) {
      const FeatureBlock block = make_block(epochs);
      for (FeatureVector& v : sliding_stats(block, ft_window, ft_stride))
        vectors.push_back(std::move(v));
    }
    write_features_csv(vectors, ft_out);
    std::cout << "wrote " << vectors.size() << " feature vector(s)\n";
  } else if (*dset) {
    const EpochsBySubject by_subject = load_epoch_dir(ds_dir);
    Dataset ds =
        ds_mode == "binary"
            ? build_binary(ds_subject, by_subject, ds_replicate,
                           replicate_seed(seed, ds_subject, ds_replicate))
            : build_multiclass(by_subject, ds_replicate,
                               replicate_seed(seed, -1, ds_replicate));
    if (ds_window > 0) ds = to_statistics(ds, ds_window);
    write_manifest_json(ds.manifest, ds_manifest);
    std::cout << "dataset " << ds.manifest.scope << ": " << ds.size()
              << " samples\n";
  } else if (*eval_cmd) {
    const Experiment experiment = ev_experiment == "binary"
                                      ? Experiment::binary
                                      : Experiment::multiclass;
    const Configuration configuration =
        ev_config == "base"
            ? Configuration::base
            : (ev_config == "ica" ? Configuration::base_ica
                                  : Configuration::statistics);
    const EpochsBySubject by_subject = load_epoch_dir(ev_dir);
    std::vector<Dataset> datasets;
    for (int r = 0; r < ev_replicates; ++r) {
      if (experiment == Experiment::binary) {
        for (const auto& kv : by_subject)
          datasets.push_back(build_binary(kv.first, by_subject, r,
                                          replicate_seed(seed, kv.first, r)));
      } else {
        datasets.push_back(
            build_multiclass(by_subject, r, replicate_seed(seed, -1, r)));
      }
    }
    const bool stats = configuration == Configuration::statistics;
    if (stats)
      for (auto& ds : datasets) ds = to_statistics(ds, ev_window);
    const EvaluationReport report = run_experiment(
        experiment, configuration, datasets,
        stats ? statistics_registry() : classifier_registry(), seed, jobs);
    emit_report(report, ev_out);
    std::cout << "report written to " << ev_out.string() << "\n";
  } else if (*runall) {
    RunConfig cfg = read_run_config(ra_config);
    if (seed_given) cfg.master_seed = seed;
    return run_all(cfg, jobs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage failed (" << e.stage << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
