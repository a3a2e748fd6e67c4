#pragma once

// Experiment harness: epsilon-sweep runs over datasets and perturbation
// modes, CSV/JSON outputs, and paired comparison of two finished runs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dapmlm/dataset.hpp"
#include "dapmlm/metrics.hpp"
#include "dapmlm/naive_bayes.hpp"
#include "dapmlm/protocol.hpp"
#include "json.hpp"

namespace dapmlm {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { Clean, DpData, DpModel, DpBoth };

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::Clean: return "clean";
    case Mode::DpData: return "dp_data";
    case Mode::DpModel: return "dp_model";
    case Mode::DpBoth: return "dp_both";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "clean") return Mode::Clean;
  if (s == "dp_data") return Mode::DpData;
  if (s == "dp_model") return Mode::DpModel;
  if (s == "dp_both") return Mode::DpBoth;
  throw std::invalid_argument("unknown mode: " + s);
}

struct ExperimentConfig {
  std::vector<std::filesystem::path> datasets;
  std::vector<double> epsilon_grid = {0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 2.0};
  Mode mode = Mode::DpBoth;
  std::size_t trials = 30;
  std::uint64_t seed = 42;
  double split = 0.9;
  std::filesystem::path out = "out";
  bool noise_per_row = false;
  double count_noise_scale = 1.0;
  std::size_t owners = 20;
};

// Flat "key value..." lines; '#' starts a comment, 'dataset' may repeat.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  bool grid_set = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error("config line " + std::to_string(line_no) + ": " + what);
    };
    try {
      if (key == "dataset") {
        std::string path;
        if (!(ls >> path)) throw fail("dataset needs a path");
        config.datasets.emplace_back(path);
      } else if (key == "epsilon_grid") {
        std::vector<double> grid;
        double e = 0.0;
        while (ls >> e) grid.push_back(e);
        if (grid.empty()) throw fail("epsilon_grid needs at least one value");
        config.epsilon_grid = std::move(grid);
        grid_set = true;
      } else if (key == "mode") {
        std::string m;
        ls >> m;
        config.mode = parse_mode(m);
      } else if (key == "trials") {
        if (!(ls >> config.trials) || config.trials == 0)
          throw fail("trials must be a positive integer");
      } else if (key == "seed") {
        if (!(ls >> config.seed)) throw fail("seed must be an integer");
      } else if (key == "split") {
        if (!(ls >> config.split)) throw fail("split must be a real number");
      } else if (key == "out") {
        std::string path;
        if (!(ls >> path)) throw fail("out needs a path");
        config.out = path;
      } else if (key == "noise_per_row") {
        std::string v;
        ls >> v;
        if (v != "true" && v != "false") throw fail("noise_per_row must be true or false");
        config.noise_per_row = v == "true";
      } else if (key == "count_noise_scale") {
        if (!(ls >> config.count_noise_scale) || config.count_noise_scale < 0.0)
          throw fail("count_noise_scale must be non-negative");
      } else if (key == "owners") {
        if (!(ls >> config.owners) || config.owners == 0)
          throw fail("owners must be a positive integer");
      } else {
        throw fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  if (config.mode == Mode::Clean && !grid_set) config.epsilon_grid = {0.0};
  return config;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  return parse_config(in);
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Seed of one (dataset, epsilon, mode, trial) cell, derived by hashing the
// coordinates into the master seed so cells are independent and reorderable.
inline std::uint64_t cell_seed(std::uint64_t master, const std::string& dataset,
                               double epsilon, Mode mode, std::size_t trial) {
  std::uint64_t h = fnv1a64_u64(master, 0xcbf29ce484222325ULL);
  h = fnv1a64(dataset, h);
  h = fnv1a64(detail::fmt_g17(epsilon), h);
  h = fnv1a64(mode_name(mode), h);
  h = fnv1a64_u64(trial, h);
  return h;
}

struct ResultRow {
  std::string dataset;
  double epsilon = 0.0;
  Mode mode = Mode::Clean;
  std::size_t trial = 0;
  ClassificationReport report;
};

struct SummaryRow {
  std::string dataset;
  double epsilon = 0.0;
  Mode mode = Mode::Clean;
  std::size_t trials = 0;
  double mean_accuracy = 0.0, std_accuracy = 0.0;
  double mean_precision = 0.0, std_precision = 0.0;
  double mean_recall = 0.0, std_recall = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;
};

struct CellFailure {
  std::string dataset;
  double epsilon = 0.0;
  std::size_t trial = 0;
  std::string error;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<CellFailure> failures;
  nlohmann::json manifest;
};

// One protocol round trip: split, normalize on the training side, shard the
// training rows across the data owners, run the protocol with a single
// classification query over the test rows, score the response.
inline ClassificationReport run_cell(const Dataset& data, double epsilon, Mode mode,
                                     std::size_t trial, const ExperimentConfig& config,
                                     std::ostream* trace_out = nullptr) {
  const std::uint64_t seed = cell_seed(config.seed, data.name(), epsilon, mode, trial);
  const SplitPair parts = split(data, config.split, seed);
  const NormalizationParams norm = fit_normalizer(parts.train_rows);
  const auto train_rows = apply_normalizer(parts.train_rows, norm);
  const auto test_rows = apply_normalizer(parts.test_rows, norm);

  ProtocolConfig pc;
  const std::size_t owners = std::min(config.owners, train_rows.size());
  const std::size_t base = train_rows.size() / owners;
  const std::size_t extra = train_rows.size() % owners;
  std::size_t next = 0;
  for (std::size_t i = 0; i < owners; ++i) {
    const std::size_t take = base + (i < extra ? 1 : 0);
    if (take == 0) continue;
    std::vector<std::vector<double>> shard_rows(train_rows.begin() + next,
                                                train_rows.begin() + next + take);
    std::vector<std::string> shard_labels(parts.train_labels.begin() + next,
                                          parts.train_labels.begin() + next + take);
    next += take;
    pc.owner_data.emplace_back(data.name() + "-shard-" + std::to_string(i + 1),
                               std::move(shard_rows), std::move(shard_labels));
  }

  pc.class_hint = data.class_list();
  pc.budget = PrivacyBudget(mode == Mode::Clean ? 1.0 : epsilon);
  pc.perturb_data = mode == Mode::DpData || mode == Mode::DpBoth;
  pc.perturb_model = mode == Mode::DpModel || mode == Mode::DpBoth;
  pc.placement = config.noise_per_row ? NoisePlacement::PerRow : NoisePlacement::PerCell;
  pc.count_noise_scale = config.count_noise_scale;
  pc.seed = seed;
  UserQuery q;
  q.kind = UserQuery::Kind::Classify;
  q.rows = test_rows;
  pc.queries.push_back(std::move(q));

  const SimulationTrace trace = run_protocol(pc);
  if (trace_out) export_trace(trace, *trace_out);
  const AuditReport audit = audit_trace(trace);
  if (!audit.passed)
    throw std::runtime_error("privacy audit failed: " + audit.violations.front());
  if (trace.responses.empty())
    throw std::runtime_error("protocol produced no classification response");
  return evaluate(trace.responses.front(), parts.test_labels);
}

namespace detail {

inline SummaryRow summarize(const std::string& dataset, double epsilon, Mode mode,
                            const std::vector<const ClassificationReport*>& reports) {
  SummaryRow s;
  s.dataset = dataset;
  s.epsilon = epsilon;
  s.mode = mode;
  s.trials = reports.size();
  const double n = static_cast<double>(reports.size());
  auto stats = [&](auto get, double& mean, double& sd) {
    for (const auto* r : reports) mean += get(*r);
    mean /= n;
    for (const auto* r : reports) {
      const double c = get(*r) - mean;
      sd += c * c;
    }
    sd = std::sqrt(sd / n);
  };
  stats([](const auto& r) { return r.accuracy; }, s.mean_accuracy, s.std_accuracy);
  stats([](const auto& r) { return r.precision; }, s.mean_precision, s.std_precision);
  stats([](const auto& r) { return r.recall; }, s.mean_recall, s.std_recall);
  stats([](const auto& r) { return r.f1; }, s.mean_f1, s.std_f1);
  return s;
}

inline void write_results_csv(const std::filesystem::path& path,
                              const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "dataset,epsilon,mode,trial,accuracy,precision,recall,f1\n";
  for (const auto& r : rows)
    out << r.dataset << "," << fmt_g17(r.epsilon) << "," << mode_name(r.mode) << ","
        << r.trial << "," << fmt_g17(r.report.accuracy) << ","
        << fmt_g17(r.report.precision) << "," << fmt_g17(r.report.recall) << ","
        << fmt_g17(r.report.f1) << "\n";
}

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "dataset,epsilon,mode,trials,mean_accuracy,std_accuracy,mean_precision,"
         "std_precision,mean_recall,std_recall,mean_f1,std_f1\n";
  for (const auto& s : rows)
    out << s.dataset << "," << fmt_g17(s.epsilon) << "," << mode_name(s.mode) << ","
        << s.trials << "," << fmt_g17(s.mean_accuracy) << "," << fmt_g17(s.std_accuracy)
        << "," << fmt_g17(s.mean_precision) << "," << fmt_g17(s.std_precision) << ","
        << fmt_g17(s.mean_recall) << "," << fmt_g17(s.std_recall) << ","
        << fmt_g17(s.mean_f1) << "," << fmt_g17(s.std_f1) << "\n";
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.datasets.empty())
    throw std::runtime_error("no datasets configured");
  std::filesystem::create_directories(config.out);

  std::vector<double> grid =
      config.mode == Mode::Clean ? std::vector<double>{0.0} : config.epsilon_grid;
  if (grid.empty()) throw std::runtime_error("empty epsilon grid");
  if (config.mode != Mode::Clean)
    for (double e : grid)
      if (!(e > 0.0)) throw std::runtime_error("epsilon grid values must be positive");

  ExperimentResult result;
  nlohmann::json& manifest = result.manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["mode"] = mode_name(config.mode);
  manifest["trials"] = config.trials;
  manifest["split"] = config.split;
  manifest["owners"] = config.owners;
  manifest["noise_per_row"] = config.noise_per_row;
  manifest["count_noise_scale"] = config.count_noise_scale;
  manifest["epsilon_grid"] = grid;
  manifest["datasets"] = nlohmann::json::array();
  manifest["failures"] = nlohmann::json::array();

  for (const auto& path : config.datasets) {
    std::optional<Schema> schema;
    auto schema_path = path;
    schema_path.replace_extension(".schema");
    if (std::filesystem::exists(schema_path)) schema = load_schema(schema_path);
    const Dataset data = load_csv(path, schema);
    manifest["datasets"].push_back(dataset_manifest(data, schema, file_checksum(path)));

    bool trace_written = false;
    for (double epsilon : grid) {
      std::vector<const ClassificationReport*> cell_reports;
      const std::size_t first_row = result.rows.size();
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        try {
          // Export the first cell's message log so `audit` has an input.
          std::optional<std::ofstream> trace_file;
          if (!trace_written) {
            trace_file.emplace(config.out / ("trace_" + data.name() + ".txt"));
            trace_written = true;
          }
          ClassificationReport report =
              run_cell(data, epsilon, config.mode, trial, config,
                       trace_file ? &*trace_file : nullptr);
          result.rows.push_back({data.name(), epsilon, config.mode, trial, report});
        } catch (const std::exception& e) {
          result.failures.push_back({data.name(), epsilon, trial, e.what()});
          manifest["failures"].push_back({{"dataset", data.name()},
                                          {"epsilon", epsilon},
                                          {"trial", trial},
                                          {"error", e.what()}});
        }
      }
      for (std::size_t i = first_row; i < result.rows.size(); ++i)
        cell_reports.push_back(&result.rows[i].report);
      if (!cell_reports.empty())
        result.summary.push_back(
            detail::summarize(data.name(), epsilon, config.mode, cell_reports));
    }
  }

  detail::write_results_csv(config.out / "results.csv", result.rows);
  detail::write_summary_csv(config.out / "summary.csv", result.summary);
  std::ofstream mf(config.out / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// Comparison of two finished runs via their summary.csv files.

struct ComparisonRow {
  std::string dataset;
  std::string metric;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  std::string verdict;  // rejected | not_rejected | insufficient
};

namespace detail {

struct SummaryFile {
  // dataset -> epsilon-ordered rows
  std::map<std::string, std::vector<SummaryRow>> by_dataset;
};

inline SummaryFile read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open summary file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("dataset,epsilon,mode,trials,", 0) != 0)
    throw std::runtime_error("unrecognized summary header in " + path.string());
  SummaryFile file;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 12)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 12 columns");
    SummaryRow s;
    s.dataset = cells[0];
    s.epsilon = std::stod(cells[1]);
    s.mode = parse_mode(cells[2]);
    s.trials = std::stoul(cells[3]);
    s.mean_accuracy = std::stod(cells[4]);
    s.std_accuracy = std::stod(cells[5]);
    s.mean_precision = std::stod(cells[6]);
    s.std_precision = std::stod(cells[7]);
    s.mean_recall = std::stod(cells[8]);
    s.std_recall = std::stod(cells[9]);
    s.mean_f1 = std::stod(cells[10]);
    s.std_f1 = std::stod(cells[11]);
    file.by_dataset[s.dataset].push_back(s);
  }
  return file;
}

inline std::vector<double> metric_series(const std::vector<SummaryRow>& rows,
                                         const std::string& metric) {
  std::vector<double> out;
  for (const auto& s : rows) {
    if (metric == "accuracy") out.push_back(s.mean_accuracy);
    else if (metric == "precision") out.push_back(s.mean_precision);
    else if (metric == "recall") out.push_back(s.mean_recall);
    else out.push_back(s.mean_f1);
  }
  return out;
}

}  // namespace detail

// Pairs the two runs by epsilon grid position, per dataset and metric. A
// single-cell run (e.g. a clean baseline) is broadcast across the other
// run's grid; otherwise the grids must match.
inline std::vector<ComparisonRow> compare_runs(const std::filesystem::path& dir_a,
                                               const std::filesystem::path& dir_b) {
  const auto a = detail::read_summary_csv(dir_a / "summary.csv");
  const auto b = detail::read_summary_csv(dir_b / "summary.csv");
  static const std::vector<std::string> metrics = {"accuracy", "precision", "recall",
                                                   "f1"};
  std::vector<ComparisonRow> table;
  for (const auto& [dataset, rows_a] : a.by_dataset) {
    const auto it = b.by_dataset.find(dataset);
    if (it == b.by_dataset.end()) continue;
    const auto& rows_b = it->second;
    const std::size_t n = std::max(rows_a.size(), rows_b.size());
    if (rows_a.size() != rows_b.size() && rows_a.size() != 1 && rows_b.size() != 1)
      throw std::runtime_error("epsilon grid mismatch for dataset " + dataset);
    if (rows_a.size() == rows_b.size())
      for (std::size_t i = 0; i < n; ++i)
        if (rows_a[i].epsilon != rows_b[i].epsilon)
          throw std::runtime_error("epsilon grid mismatch for dataset " + dataset);

    for (const auto& metric : metrics) {
      auto series_a = detail::metric_series(rows_a, metric);
      auto series_b = detail::metric_series(rows_b, metric);
      if (series_a.size() == 1) series_a.assign(n, series_a.front());
      if (series_b.size() == 1) series_b.assign(n, series_b.front());
      ComparisonRow row;
      row.dataset = dataset;
      row.metric = metric;
      try {
        const WilcoxonResult w = wilcoxon_signed_rank(series_a, series_b);
        row.statistic = w.statistic;
        row.p_value = w.p_value;
        row.n_effective = w.n_effective;
        row.verdict = w.rejected ? "rejected" : "not_rejected";
      } catch (const std::invalid_argument&) {
        row.verdict = "insufficient";
      }
      table.push_back(std::move(row));
    }
  }
  if (table.empty()) throw std::runtime_error("runs share no datasets");
  return table;
}

inline void write_comparison_csv(const std::filesystem::path& path,
                                 const std::vector<ComparisonRow>& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "dataset,metric,statistic,p_value,n_effective,verdict\n";
  for (const auto& r : table)
    out << r.dataset << "," << r.metric << "," << detail::fmt_g17(r.statistic) << ","
        << detail::fmt_g17(r.p_value) << "," << r.n_effective << "," << r.verdict
        << "\n";
}

}  // namespace dapmlm
