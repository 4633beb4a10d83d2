#include "bci/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bci/rng.hpp"

namespace bci {

std::string to_string(Experiment e) {
  return e == Experiment::binary ? "binary" : "multiclass";
}

std::string to_string(Configuration c) {
  switch (c) {
    case Configuration::base: return "base";
    case Configuration::base_ica: return "base+ica";
    case Configuration::statistics: return "statistics";
  }
  return "?";
}

namespace {

struct CellResult {
  Metrics metrics;
  double fit_seconds{0.0};
  double predict_seconds{0.0};
  std::size_t train_n{0};
  std::size_t test_n{0};
};

PipelineData to_pipeline_data(const Dataset& ds) {
  if (ds.mode == DatasetMode::statistics) return PipelineData::from_flat(ds.x);
  return PipelineData::from_mats(ds.epochs);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

CellResult evaluate_cell(const Dataset& ds, const PipelineConfig& config,
                         MetricAveraging averaging, std::uint64_t split_seed,
                         std::uint64_t fit_seed) {
  const SplitDataset split = train_test_split(ds, 0.2, split_seed);
  CellResult cell;
  cell.train_n = split.train.size();
  cell.test_n = split.test.size();

  auto t0 = std::chrono::steady_clock::now();
  const FittedPipeline model =
      pipeline_fit(config, to_pipeline_data(split.train), split.train.y,
                   fit_seed);
  cell.fit_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const std::vector<int> pred = model.predict(to_pipeline_data(split.test));
  cell.predict_seconds = seconds_since(t0);

  cell.metrics = compute_metrics(split.test.y, pred, averaging);
  return cell;
}

}  // namespace

EvaluationReport run_experiment(Experiment experiment,
                                Configuration configuration,
                                const std::vector<Dataset>& datasets,
                                const std::vector<PipelineConfig>& registry,
                                std::uint64_t seed, int jobs) {
  if (datasets.empty())
    throw std::invalid_argument("run_experiment: no datasets");
  if (registry.empty())
    throw std::invalid_argument("run_experiment: empty registry subset");
  const bool stats_run = configuration == Configuration::statistics;
  for (const auto& ds : datasets) {
    const bool flat = ds.mode == DatasetMode::statistics;
    if (flat != stats_run)
      throw std::invalid_argument(
          "run_experiment: dataset mode does not match configuration " +
          to_string(configuration));
  }
  if (stats_run)
    for (const auto& c : registry)
      if (!c.statistics_compatible())
        throw std::invalid_argument("run_experiment: " + c.label() +
                                    " cannot run on statistics vectors");

  const MetricAveraging averaging = experiment == Experiment::binary
                                        ? MetricAveraging::binary_positive
                                        : MetricAveraging::macro;
  const std::size_t nd = datasets.size(), nc = registry.size();
  std::vector<CellResult> grid(nd * nc);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= grid.size()) return;
      const std::size_t di = idx / nc, ci = idx % nc;
      try {
        grid[idx] = evaluate_cell(
            datasets[di], registry[ci], averaging,
            mix_seed(seed, static_cast<std::uint64_t>(di)),
            mix_seed(seed, static_cast<std::uint64_t>(di),
                     static_cast<std::uint64_t>(ci)));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::make_exception_ptr(std::runtime_error(
              "run_experiment: dataset " + datasets[di].manifest.scope +
              " replicate " + std::to_string(datasets[di].manifest.replicate) +
              ", " + registry[ci].label() + ": " + e.what()));
        next.store(grid.size());
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, grid.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::set<int> label_set;
  for (const auto& ds : datasets) label_set.insert(ds.y.begin(), ds.y.end());
  const std::vector<int> classes(label_set.begin(), label_set.end());
  const int k = static_cast<int>(classes.size());
  auto global_index = [&](int label) {
    return static_cast<int>(std::lower_bound(classes.begin(), classes.end(),
                                             label) -
                            classes.begin());
  };

  EvaluationReport report;
  report.experiment = experiment;
  report.configuration = configuration;
  report.window =
      stats_run ? datasets.front().manifest.window : std::size_t{0};
  report.seed = seed;
  report.n_datasets = nd;

  for (std::size_t ci = 0; ci < nc; ++ci) {
    ClassifierResult r;
    r.id = registry[ci].id;
    r.label = registry[ci].label();
    r.transforms = registry[ci].transforms;
    r.estimator = registry[ci].estimator;
    r.classes = classes;
    r.confusion = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t di = 0; di < nd; ++di) {
      const CellResult& cell = grid[di * nc + ci];
      r.precision += cell.metrics.precision;
      r.recall += cell.metrics.recall;
      r.f1 += cell.metrics.f1;
      r.per_dataset_f1.push_back(cell.metrics.f1);
      r.fit_seconds += cell.fit_seconds;
      r.predict_seconds += cell.predict_seconds;
      r.train_n += cell.train_n;
      r.test_n += cell.test_n;
      const auto& cls = cell.metrics.classes;
      for (std::size_t a = 0; a < cls.size(); ++a)
        for (std::size_t b = 0; b < cls.size(); ++b)
          r.confusion(global_index(cls[a]), global_index(cls[b])) +=
              cell.metrics.confusion(static_cast<int>(a),
                                     static_cast<int>(b));
    }
    r.precision /= static_cast<double>(nd);
    r.recall /= static_cast<double>(nd);
    r.f1 /= static_cast<double>(nd);
    r.accuracy = static_cast<double>(r.confusion.trace()) /
                 static_cast<double>(r.confusion.sum());
    report.classifiers.push_back(std::move(r));
  }
  return report;
}

// --------------------------------------------------------------- reporting

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(report.experiment);
  j["configuration"] = to_string(report.configuration);
  j["window"] = report.window;
  j["seed"] = report.seed;
  j["n_datasets"] = report.n_datasets;
  j["classifiers"] = nlohmann::ordered_json::array();
  for (const auto& r : report.classifiers) {
    nlohmann::ordered_json c;
    c["id"] = r.id;
    c["label"] = r.label;
    c["transforms"] = r.transforms;
    c["estimator"] = r.estimator;
    c["accuracy"] = r.accuracy;
    c["precision"] = r.precision;
    c["recall"] = r.recall;
    c["f1"] = r.f1;
    c["per_dataset_f1"] = r.per_dataset_f1;
    c["classes"] = r.classes;
    auto conf = nlohmann::ordered_json::array();
    for (int a = 0; a < r.confusion.rows(); ++a) {
      auto row = nlohmann::ordered_json::array();
      for (int b = 0; b < r.confusion.cols(); ++b)
        row.push_back(r.confusion(a, b));
      conf.push_back(row);
    }
    c["confusion"] = conf;
    c["train_n"] = r.train_n;
    c["test_n"] = r.test_n;
    j["classifiers"].push_back(c);
  }
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("emit_report: cannot open " + path.string());
  out << text;
  if (!out)
    throw std::runtime_error("emit_report: write failed for " + path.string());
}

std::string format_f1(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

constexpr double kBarScale = 240.0;  // pixels at f1 = 1
constexpr double kBaselineY = 280.0;

// One bar per entry; bar height in pixels = value * kBarScale, so relative
// heights reproduce the values exactly up to the 4-decimal attribute print.
std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::string>& labels,
                          const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& series_names) {
  const std::size_t groups = labels.size();
  const std::size_t per_group = series.size();
  const double bar_w = 18.0, gap = 14.0;
  const double group_w = per_group * bar_w + gap;
  const double width = 70.0 + groups * group_w + 160.0;
  static const char* kPalette[] = {"#4878cf", "#ee854a", "#6acc65",
                                   "#d65f5f", "#956cb4", "#8c613c"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"330\" viewBox=\"0 0 " << width << " 330\">\n";
  os << "  <text x=\"10\" y=\"18\" font-size=\"13\">" << title << "</text>\n";
  os << "  <line x1=\"60\" y1=\"" << kBaselineY << "\" x2=\"" << (width - 150)
     << "\" y2=\"" << kBaselineY << "\" stroke=\"#222\"/>\n";
  os << "  <line x1=\"60\" y1=\"" << kBaselineY - kBarScale
     << "\" x2=\"60\" y2=\"" << kBaselineY << "\" stroke=\"#222\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    const double y = kBaselineY - v * kBarScale;
    os << "  <text x=\"30\" y=\"" << y + 4 << "\" font-size=\"10\">"
       << format_f1(v).substr(0, 4) << "</text>\n";
  }
  for (std::size_t g = 0; g < groups; ++g) {
    const double x0 = 70.0 + g * group_w;
    for (std::size_t s = 0; s < per_group; ++s) {
      const double v = series[s][g];
      const double h = v * kBarScale;
      os << "  <rect class=\"bar\" data-value=\"" << format_f1(v) << "\" x=\""
         << x0 + s * bar_w << "\" y=\"" << format_f1(kBaselineY - h)
         << "\" width=\"" << bar_w - 2 << "\" height=\"" << format_f1(h)
         << "\" fill=\"" << kPalette[s % 6] << "\"/>\n";
    }
    os << "  <text x=\"" << x0 << "\" y=\"" << kBaselineY + 16
       << "\" font-size=\"10\">" << labels[g] << "</text>\n";
  }
  for (std::size_t s = 0; s < series_names.size(); ++s) {
    const double y = 40.0 + s * 18.0;
    os << "  <rect x=\"" << width - 140 << "\" y=\"" << y - 10
       << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[s % 6]
       << "\"/>\n";
    os << "  <text x=\"" << width - 122 << "\" y=\"" << y
       << "\" font-size=\"11\">" << series_names[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

void emit_window_chart(const std::vector<EvaluationReport>& reports,
                       const std::filesystem::path& path) {
  if (reports.empty())
    throw std::invalid_argument("emit_window_chart: no reports");
  std::vector<std::string> labels;
  for (const auto& r : reports.front().classifiers) labels.push_back(r.label);
  std::vector<std::vector<double>> series;
  std::vector<std::string> names;
  for (const auto& rep : reports) {
    std::vector<double> vals;
    for (const auto& r : rep.classifiers) vals.push_back(r.f1);
    if (vals.size() != labels.size())
      throw std::invalid_argument(
          "emit_window_chart: classifier sets differ across reports");
    series.push_back(std::move(vals));
    names.push_back(rep.window == 0 ? std::string("epochs")
                                    : "W=" + std::to_string(rep.window));
  }
  write_text(path, bar_chart_svg("mean f1 by window size", labels, series,
                                 names));
}

void emit_report(const EvaluationReport& report,
                 const std::filesystem::path& out_dir) {
  if (report.classifiers.empty() || report.n_datasets == 0)
    throw std::invalid_argument("emit_report: empty report");
  std::filesystem::create_directories(out_dir);

  write_text(out_dir / "report.json", report_to_json(report));

  nlohmann::ordered_json timings;
  timings["classifiers"] = nlohmann::ordered_json::array();
  for (const auto& r : report.classifiers) {
    nlohmann::ordered_json t;
    t["id"] = r.id;
    t["fit_seconds"] = r.fit_seconds;
    t["predict_seconds"] = r.predict_seconds;
    timings["classifiers"].push_back(t);
  }
  write_text(out_dir / "timings.json", timings.dump(2) + "\n");

  for (const auto& r : report.classifiers) {
    std::ostringstream os;
    os << "true\\predicted";
    for (int c : r.classes) os << "," << c;
    os << "\n";
    for (int a = 0; a < r.confusion.rows(); ++a) {
      os << r.classes[static_cast<std::size_t>(a)];
      for (int b = 0; b < r.confusion.cols(); ++b)
        os << "," << r.confusion(a, b);
      os << "\n";
    }
    write_text(out_dir / ("confusion_" + std::to_string(r.id) + ".csv"),
               os.str());
  }

  std::vector<std::string> labels;
  std::vector<double> f1s;
  for (const auto& r : report.classifiers) {
    labels.push_back(r.label);
    f1s.push_back(r.f1);
  }
  write_text(out_dir / "f1_by_classifier.svg",
             bar_chart_svg("mean f1, " + to_string(report.experiment) + " / " +
                               to_string(report.configuration),
                           labels, {f1s}, {"f1"}));
  emit_window_chart({report}, out_dir / "f1_by_window.svg");
}

}  // namespace bci
