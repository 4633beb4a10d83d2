#include "bci/runner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bci/datasets.hpp"
#include "bci/dsp.hpp"
#include "bci/epochs.hpp"
#include "bci/ica.hpp"
#include "bci/rng.hpp"
#include "bci/session_csv.hpp"
#include "bci/synth.hpp"

namespace bci {

namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ config

Experiment experiment_from_string(const std::string& s) {
  if (s == "binary") return Experiment::binary;
  if (s == "multiclass") return Experiment::multiclass;
  throw ConfigError("unknown experiment \"" + s +
                    "\" (expected binary or multiclass)");
}

}  // namespace

RunConfig read_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  RunConfig cfg;
  try {
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"];
    if (j.contains("subjects")) cfg.subjects = j["subjects"];
    if (j.contains("sessions_per_subject"))
      cfg.sessions_per_subject = j["sessions_per_subject"];
    if (j.contains("notch_hz")) cfg.notch_hz = j["notch_hz"];
    if (j.contains("notch_q")) cfg.notch_q = j["notch_q"];
    if (j.contains("band_low_hz")) cfg.band_low_hz = j["band_low_hz"];
    if (j.contains("band_high_hz")) cfg.band_high_hz = j["band_high_hz"];
    if (j.contains("band_order")) cfg.band_order = j["band_order"];
    if (j.contains("ica")) cfg.ica = j["ica"];
    if (j.contains("ica_threshold")) cfg.ica_threshold = j["ica_threshold"];
    if (j.contains("windows"))
      cfg.windows = j["windows"].get<std::vector<std::size_t>>();
    if (j.contains("replicates")) cfg.replicates = j["replicates"];
    if (j.contains("experiments")) {
      cfg.experiments.clear();
      for (const auto& e : j["experiments"])
        cfg.experiments.push_back(
            experiment_from_string(e.get<std::string>()));
    }
    if (j.contains("output_root"))
      cfg.output_root = j["output_root"].get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad config value in " + path.string() + ": " +
                      e.what());
  }

  if (cfg.subjects < 2) throw ConfigError("subjects must be >= 2");
  if (cfg.sessions_per_subject < 1)
    throw ConfigError("sessions_per_subject must be >= 1");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (cfg.band_order < 1) throw ConfigError("band_order must be >= 1");
  if (!(cfg.band_low_hz > 0 && cfg.band_high_hz > cfg.band_low_hz))
    throw ConfigError("band edges must satisfy 0 < low < high");
  if (cfg.windows.empty()) throw ConfigError("windows must be non-empty");
  for (std::size_t w : cfg.windows)
    if (w < 1 || w > static_cast<std::size_t>(kEpochLen))
      throw ConfigError("window sizes must lie in [1, " +
                        std::to_string(kEpochLen) + "]");
  if (cfg.experiments.empty())
    throw ConfigError("experiments must be non-empty");
  return cfg;
}

void write_run_config(const RunConfig& cfg, const fs::path& path) {
  nlohmann::ordered_json j;
  j["master_seed"] = cfg.master_seed;
  j["subjects"] = cfg.subjects;
  j["sessions_per_subject"] = cfg.sessions_per_subject;
  j["notch_hz"] = cfg.notch_hz;
  j["notch_q"] = cfg.notch_q;
  j["band_low_hz"] = cfg.band_low_hz;
  j["band_high_hz"] = cfg.band_high_hz;
  j["band_order"] = cfg.band_order;
  j["ica"] = cfg.ica;
  j["ica_threshold"] = cfg.ica_threshold;
  j["windows"] = cfg.windows;
  j["replicates"] = cfg.replicates;
  auto exps = nlohmann::ordered_json::array();
  for (Experiment e : cfg.experiments) exps.push_back(to_string(e));
  j["experiments"] = exps;
  j["output_root"] = cfg.output_root.string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << j.dump(2) << "\n";
}

// ----------------------------------------------------------------- caching

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_update(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_update(std::uint64_t& h, const std::string& s) {
  fnv_update(h, s.data(), s.size());
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    fnv_update(h, buf, static_cast<std::size_t>(in.gcount()));
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// Stage bookkeeping: content hash of the stage inputs plus the output list.
// A stage is skipped when the stamp hash matches and every output exists.
class Stage {
 public:
  Stage(std::string name, const fs::path& root, std::ostream& log)
      : name_(std::move(name)),
        stamp_(root / ".stamps" / (name_ + ".json")),
        log_(log) {}

  void input(const std::string& text) { fnv_update(hash_, text); }
  void input_file(const fs::path& p) {
    fnv_update(hash_, p.filename().string());
    const std::uint64_t fh = hash_file(p);
    fnv_update(hash_, &fh, sizeof(fh));
  }
  void output(const fs::path& p) { outputs_.push_back(p); }

  bool cached() const {
    std::ifstream in(stamp_, std::ios::binary);
    if (!in) return false;
    nlohmann::json j;
    try {
      in >> j;
    } catch (...) {
      return false;
    }
    if (j.value("hash", std::string{}) != hex64(hash_)) return false;
    for (const auto& p : outputs_)
      if (!fs::exists(p)) return false;
    log_ << "stage " << name_ << ": cached\n";
    return true;
  }

  void commit() const {
    fs::create_directories(stamp_.parent_path());
    nlohmann::ordered_json j;
    j["stage"] = name_;
    j["hash"] = hex64(hash_);
    std::ofstream out(stamp_, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write stamp " + stamp_.string());
    out << j.dump(2) << "\n";
    log_ << "stage " << name_ << ": done\n";
  }

  std::uint64_t hash() const { return hash_; }

 private:
  std::string name_;
  fs::path stamp_;
  std::ostream& log_;
  std::uint64_t hash_{kFnvOffset};
  std::vector<fs::path> outputs_;
};

// --------------------------------------------------------------- artifacts

std::string session_name(int subject, int session) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "subject%02d_session%02d.csv", subject,
                session);
  return buf;
}

std::vector<std::string> variants(const RunConfig& cfg) {
  std::vector<std::string> v = {"base"};
  if (cfg.ica) v.push_back("ica");
  return v;
}

EpochsBySubject load_target_epochs(const RunConfig& cfg, const fs::path& root,
                                   const std::string& variant) {
  EpochsBySubject by_subject;
  for (int s = 0; s < cfg.subjects; ++s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "subject%02d.csv", s);
    auto epochs = read_epochs_csv(root / "epochs" / variant / buf);
    by_subject[s] = std::move(epochs);
  }
  return by_subject;
}

template <typename Fn>
void run_stage(const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

int run_all(const RunConfig& cfg, int jobs, std::ostream& log) {
  const fs::path root = cfg.output_root;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root))
    throw StageError("setup", "cannot create output root " + root.string());
  {
    std::ofstream probe(root / ".write-probe", std::ios::binary);
    if (!probe)
      throw StageError("setup", "output root not writable: " + root.string());
  }
  fs::remove(root / ".write-probe", ec);

  // ---- synth
  run_stage("synth", [&] {
    Stage st("synth", root, log);
    st.input("seed=" + std::to_string(cfg.master_seed) +
             " subjects=" + std::to_string(cfg.subjects) +
             " sessions=" + std::to_string(cfg.sessions_per_subject));
    for (int s = 0; s < cfg.subjects; ++s)
      for (int t = 0; t < cfg.sessions_per_subject; ++t)
        st.output(root / "sessions" / session_name(s, t));
    if (st.cached()) return;
    fs::create_directories(root / "sessions");
    for (int s = 0; s < cfg.subjects; ++s) {
      const SubjectProfile profile =
          make_subject_profile(s, cfg.master_seed);
      for (int t = 0; t < cfg.sessions_per_subject; ++t) {
        const OddballSchedule schedule = make_schedule(
            mix_seed(cfg.master_seed, static_cast<std::uint64_t>(s),
                     static_cast<std::uint64_t>(t)));
        const SessionRecording rec = generate_session(profile, schedule, t);
        write_session_csv(rec, root / "sessions" / session_name(s, t));
      }
    }
    st.commit();
  });

  // ---- preprocess (notch + band-pass; optional ICA variant)
  run_stage("preprocess", [&] {
    Stage st("preprocess", root, log);
    std::ostringstream params;
    params << "notch=" << cfg.notch_hz << "/" << cfg.notch_q
           << " band=" << cfg.band_low_hz << "-" << cfg.band_high_hz << "/"
           << cfg.band_order << " ica=" << cfg.ica << "/"
           << cfg.ica_threshold;
    st.input(params.str());
    std::vector<fs::path> inputs;
    for (int s = 0; s < cfg.subjects; ++s)
      for (int t = 0; t < cfg.sessions_per_subject; ++t)
        inputs.push_back(root / "sessions" / session_name(s, t));
    for (const auto& p : inputs) st.input_file(p);
    for (const auto& variant : variants(cfg))
      for (int s = 0; s < cfg.subjects; ++s)
        for (int t = 0; t < cfg.sessions_per_subject; ++t)
          st.output(root / "preprocessed" / variant / session_name(s, t));
    if (st.cached()) return;

    const BiquadCascade notch =
        design_notch(cfg.notch_hz, cfg.notch_q, kSampleRateHz);
    const BiquadCascade band = design_butterworth_bandpass(
        cfg.band_order, cfg.band_low_hz, cfg.band_high_hz, kSampleRateHz);
    for (const auto& variant : variants(cfg))
      fs::create_directories(root / "preprocessed" / variant);
    for (int s = 0; s < cfg.subjects; ++s) {
      for (int t = 0; t < cfg.sessions_per_subject; ++t) {
        SessionRecording rec =
            read_session_csv(root / "sessions" / session_name(s, t));
        apply_zero_phase_rows(notch, rec.samples);
        apply_zero_phase_rows(band, rec.samples);
        write_session_csv(
            rec, root / "preprocessed" / "base" / session_name(s, t));
        if (cfg.ica) {
          const IcaModel model = fastica_fit(
              rec.samples, kNumChannels,
              mix_seed(cfg.master_seed, 0x696361ULL,
                       static_cast<std::uint64_t>(s * 1000 + t)));
          const std::vector<int> blinks = detect_artifact_components(
              model, rec.samples, cfg.ica_threshold);
          rec.samples = remove_components(model, rec.samples, blinks);
          write_session_csv(
              rec, root / "preprocessed" / "ica" / session_name(s, t));
        }
      }
    }
    st.commit();
  });

  // ---- epochs (baseline-corrected target epochs per subject)
  run_stage("epochs", [&] {
    Stage st("epochs", root, log);
    std::vector<fs::path> inputs;
    for (const auto& variant : variants(cfg))
      for (int s = 0; s < cfg.subjects; ++s)
        for (int t = 0; t < cfg.sessions_per_subject; ++t)
          inputs.push_back(root / "preprocessed" / variant /
                           session_name(s, t));
    for (const auto& p : inputs) st.input_file(p);
    for (const auto& variant : variants(cfg))
      for (int s = 0; s < cfg.subjects; ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "subject%02d.csv", s);
        st.output(root / "epochs" / variant / buf);
      }
    if (st.cached()) return;

    for (const auto& variant : variants(cfg)) {
      fs::create_directories(root / "epochs" / variant);
      for (int s = 0; s < cfg.subjects; ++s) {
        std::vector<Epoch> targets;
        for (int t = 0; t < cfg.sessions_per_subject; ++t) {
          SessionRecording rec = read_session_csv(
              root / "preprocessed" / variant / session_name(s, t));
          rec.subject_id = s;
          rec.session_id = t;
          for (const Epoch& e : extract_epochs(rec))
            if (e.label == StimulusKind::target)
              targets.push_back(baseline_correct(e));
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "subject%02d.csv", s);
        write_epochs_csv(targets, root / "epochs" / variant / buf);
      }
    }
    st.commit();
  });

  // ---- datasets (manifests; samples are rebuilt deterministically)
  run_stage("datasets", [&] {
    Stage st("datasets", root, log);
    st.input("replicates=" + std::to_string(cfg.replicates));
    for (int s = 0; s < cfg.subjects; ++s) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "subject%02d.csv", s);
      st.input_file(root / "epochs" / "base" / buf);
    }
    const bool binary =
        std::count(cfg.experiments.begin(), cfg.experiments.end(),
                   Experiment::binary) > 0;
    const bool multi =
        std::count(cfg.experiments.begin(), cfg.experiments.end(),
                   Experiment::multiclass) > 0;
    for (int r = 0; r < cfg.replicates; ++r) {
      if (binary)
        for (int s = 0; s < cfg.subjects; ++s) {
          char buf[48];
          std::snprintf(buf, sizeof(buf),
                        "binary_subject%02d_replicate%d.json", s, r);
          st.output(root / "datasets" / buf);
        }
      if (multi) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "multiclass_replicate%d.json", r);
        st.output(root / "datasets" / buf);
      }
    }
    if (st.cached()) return;

    const EpochsBySubject by_subject = load_target_epochs(cfg, root, "base");
    fs::create_directories(root / "datasets");
    for (int r = 0; r < cfg.replicates; ++r) {
      if (binary)
        for (int s = 0; s < cfg.subjects; ++s) {
          const Dataset ds = build_binary(
              s, by_subject, r, replicate_seed(cfg.master_seed, s, r));
          char buf[48];
          std::snprintf(buf, sizeof(buf),
                        "binary_subject%02d_replicate%d.json", s, r);
          write_manifest_json(ds.manifest, root / "datasets" / buf);
        }
      if (multi) {
        const Dataset ds = build_multiclass(
            by_subject, r, replicate_seed(cfg.master_seed, -1, r));
        char buf[48];
        std::snprintf(buf, sizeof(buf), "multiclass_replicate%d.json", r);
        write_manifest_json(ds.manifest, root / "datasets" / buf);
      }
    }
    st.commit();
  });

  // ---- evaluate
  run_stage("evaluate", [&] {
    Stage st("evaluate", root, log);
    std::ostringstream params;
    params << "replicates=" << cfg.replicates << " windows=";
    for (std::size_t w : cfg.windows) params << w << ",";
    params << " experiments=";
    for (Experiment e : cfg.experiments) params << to_string(e) << ",";
    st.input(params.str());
    for (const auto& variant : variants(cfg))
      for (int s = 0; s < cfg.subjects; ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "subject%02d.csv", s);
        st.input_file(root / "epochs" / variant / buf);
      }
    std::vector<Configuration> configurations = {Configuration::base};
    if (cfg.ica) configurations.push_back(Configuration::base_ica);
    configurations.push_back(Configuration::statistics);
    for (Experiment e : cfg.experiments)
      for (Configuration c : configurations) {
        const fs::path dir =
            root / "reports" / to_string(e) /
            (c == Configuration::base_ica ? "base_ica" : to_string(c));
        if (c == Configuration::statistics) {
          for (std::size_t w : cfg.windows)
            st.output(dir / ("w" + std::to_string(w)) / "report.json");
          st.output(dir / "f1_by_window.svg");
        } else {
          st.output(dir / "report.json");
        }
      }
    if (st.cached()) return;

    std::map<std::string, EpochsBySubject> epochs_by_variant;
    for (const auto& variant : variants(cfg))
      epochs_by_variant[variant] = load_target_epochs(cfg, root, variant);

    auto build_datasets = [&](Experiment e, const EpochsBySubject& src) {
      std::vector<Dataset> out;
      for (int r = 0; r < cfg.replicates; ++r) {
        if (e == Experiment::binary) {
          for (int s = 0; s < cfg.subjects; ++s)
            out.push_back(build_binary(
                s, src, r, replicate_seed(cfg.master_seed, s, r)));
        } else {
          out.push_back(build_multiclass(
              src, r, replicate_seed(cfg.master_seed, -1, r)));
        }
      }
      return out;
    };

    for (Experiment e : cfg.experiments) {
      for (Configuration c : configurations) {
        const fs::path dir =
            root / "reports" / to_string(e) /
            (c == Configuration::base_ica ? "base_ica" : to_string(c));
        log << "evaluate " << to_string(e) << "/" << to_string(c) << "\n";
        const std::string variant =
            c == Configuration::base_ica ? "ica" : "base";
        const std::vector<Dataset> datasets =
            build_datasets(e, epochs_by_variant.at(variant));
        if (c == Configuration::statistics) {
          std::vector<EvaluationReport> reports;
          for (std::size_t w : cfg.windows) {
            std::vector<Dataset> flat;
            for (const auto& ds : datasets)
              flat.push_back(to_statistics(ds, w));
            EvaluationReport rep =
                run_experiment(e, c, flat, statistics_registry(),
                               cfg.master_seed, jobs);
            emit_report(rep, dir / ("w" + std::to_string(w)));
            reports.push_back(std::move(rep));
          }
          emit_window_chart(reports, dir / "f1_by_window.svg");
        } else {
          const EvaluationReport rep = run_experiment(
              e, c, datasets, classifier_registry(), cfg.master_seed, jobs);
          emit_report(rep, dir);
        }
      }
    }
    st.commit();
  });

  return 0;
}

}  // namespace bci
