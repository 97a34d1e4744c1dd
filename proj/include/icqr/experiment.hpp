#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "icqr/conformal.hpp"
#include "icqr/dataset.hpp"
#include "icqr/importance.hpp"
#include "icqr/kmeans.hpp"
#include "icqr/quantile_net.hpp"
#include "icqr/summary.hpp"
#include "icqr/synthetic.hpp"

namespace icqr {

inline constexpr int kReportSchemaVersion = 1;

struct ExperimentConfig {
  // Either a CSV path with a response column, or the name of a built-in
  // synthetic law (see builtin_synthetic).
  std::string dataset_path;
  std::string response_column = "y";
  std::string synthetic;
  std::size_t synthetic_size = 0;

  double alpha = 0.1;
  double variance_threshold = 0.9;
  std::size_t max_k = 10;
  std::size_t trials = 10;
  SplitSpec split;  // seed is derived per trial
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  QuantileNetConfig net;  // quantile levels and seed are set per trial
  ImportanceConfig importance;
  KMeansConfig kmeans;
  std::vector<Method> methods{Method::naive, Method::qr, Method::cqr, Method::icqr};

  void validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("ExperimentConfig: alpha must lie in (0,1)");
    if (!(variance_threshold > 0.0 && variance_threshold < 1.0))
      throw std::invalid_argument("ExperimentConfig: variance_threshold must lie in (0,1)");
    if (max_k < 2) throw std::invalid_argument("ExperimentConfig: max_k must be >= 2");
    if (methods.empty()) throw std::invalid_argument("ExperimentConfig: no methods requested");
    if (dataset_path.empty() == synthetic.empty())
      throw std::invalid_argument("ExperimentConfig: set exactly one of dataset and synthetic");
    split.validate();
    net.validate();
    importance.validate();
    kmeans.validate();
  }

  KSelectionConfig k_selection() const {
    KSelectionConfig k;
    k.variance_threshold = variance_threshold;
    k.max_k = max_k;
    k.kmeans = kmeans;
    return k;
  }
};

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto name = detail::trim(item);
    if (name.empty()) continue;
    const Method m = parse_method(name);
    if (std::find(out.begin(), out.end(), m) != out.end())
      throw std::invalid_argument("method '" + std::string(name) + "' listed twice");
    out.push_back(m);
  }
  if (out.empty()) throw std::invalid_argument("empty method list");
  return out;
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!parse_double(v, out))
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" +
                                v + "'");
  return out;
}

}  // namespace detail

// Applies one `key = value` setting.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::to_real;
  using detail::to_unsigned;
  const std::string v(detail::trim(value));
  if (key == "dataset") cfg.dataset_path = v;
  else if (key == "response") cfg.response_column = v;
  else if (key == "synthetic") cfg.synthetic = v;
  else if (key == "synthetic_size") cfg.synthetic_size = to_unsigned(key, v);
  else if (key == "alpha") cfg.alpha = to_real(key, v);
  else if (key == "variance_threshold") cfg.variance_threshold = to_real(key, v);
  else if (key == "max_k") cfg.max_k = to_unsigned(key, v);
  else if (key == "trials") cfg.trials = to_unsigned(key, v);
  else if (key == "train_fraction") cfg.split.train_fraction = to_real(key, v);
  else if (key == "cal_fraction") cfg.split.cal_fraction = to_real(key, v);
  else if (key == "val_fraction") cfg.split.val_fraction = to_real(key, v);
  else if (key == "seed") cfg.seed = to_unsigned(key, v);
  else if (key == "threads") cfg.threads = to_unsigned(key, v);
  else if (key == "hidden_layers") {
    cfg.net.hidden_layers.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.net.hidden_layers.push_back(to_unsigned(key, item));
  } else if (key == "learning_rate") cfg.net.learning_rate = to_real(key, v);
  else if (key == "epochs") cfg.net.epochs = to_unsigned(key, v);
  else if (key == "batch_size") cfg.net.batch_size = to_unsigned(key, v);
  else if (key == "weight_decay") cfg.net.weight_decay = to_real(key, v);
  else if (key == "importance_repetitions") cfg.importance.repetitions = to_unsigned(key, v);
  else if (key == "kmeans_max_iterations") cfg.kmeans.max_iterations = to_unsigned(key, v);
  else if (key == "kmeans_restarts") cfg.kmeans.restarts = to_unsigned(key, v);
  else if (key == "min_cluster_size") cfg.kmeans.min_cluster_size = to_unsigned(key, v);
  else if (key == "methods") cfg.methods = parse_methods(v);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

// Flat text config: one `key = value` per line, '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": expected key = value");
    const std::string key(detail::trim(std::string_view(line).substr(0, eq)));
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in, std::move(cfg));
}

// ---------------------------------------------------------------------------
// Reports

struct KCandidateReport {
  std::size_t k = 0;
  double variance_explained = 0.0;
  double objective = 0.0;
};

// Per-trial calibration details. Group fields are filled for icqr only.
struct TrialDiagnostics {
  std::size_t trial = 0;
  double coverage = 0.0;
  double q_hat = 0.0;
  std::size_t selected_k = 0;
  double variance_explained = 0.0;
  bool threshold_met = false;
  std::vector<KCandidateReport> candidates;
  std::vector<double> importances;
  double baseline_error = 0.0;
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> group_sizes;
  std::vector<double> group_q_hats;
  std::vector<double> group_coverage;
};

struct MethodReport {
  Method method = Method::cqr;
  SummaryStats width_stats;
  SummaryStats coverage_stats;
  std::vector<double> trial_coverage;
  // icqr: validation coverage per cluster index, pooled over trials.
  std::map<std::size_t, double> per_group_coverage;
  std::vector<TrialDiagnostics> diagnostics;
  // Pooled validation widths in trial order. Kept in memory for plotting;
  // not serialized.
  std::vector<double> widths;
};

struct ExperimentReport {
  int schema_version = kReportSchemaVersion;
  std::string dataset;
  std::vector<std::string> column_names;
  std::size_t rows = 0;
  double alpha = 0.1;
  double variance_threshold = 0.9;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<MethodReport> methods;

  const MethodReport& method(Method m) const {
    for (const auto& r : methods)
      if (r.method == m) return r;
    throw std::out_of_range("report has no method '" + std::string(to_string(m)) + "'");
  }
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return mix_seed(base_seed + trial);
}

// Intervals produced by one method in one trial, in validation-row order.
struct MethodOutcome {
  Method method = Method::cqr;
  std::vector<PredictionInterval> intervals;
  TrialDiagnostics diagnostics;
};

struct TrialOutcome {
  std::size_t trial = 0;
  // Source rows of the validation partition and their responses.
  std::vector<std::size_t> validation_rows;
  std::vector<double> validation_response;
  std::vector<MethodOutcome> methods;
};

// One pass of the protocol: seeded split, z-score normalization fitted on
// the training partition, quantile-net training, then calibration and
// validation intervals for every requested method.
inline TrialOutcome run_trial(const Dataset& data, const ExperimentConfig& cfg, std::size_t t) {
  const std::uint64_t seed = trial_seed(cfg.seed, t);
  SplitSpec split_spec = cfg.split;
  split_spec.seed = derive_seed(seed, streams::split);
  const ThreeWaySplit parts = split(data, split_spec);

  const Normalizer norm = fit_normalizer(parts.train);
  const Dataset train_set = norm.apply(parts.train);
  const Dataset cal = norm.apply(parts.calibration);
  const Dataset val = norm.apply(parts.validation);

  QuantileNetConfig net = cfg.net;
  net.seed = derive_seed(seed, streams::network);
  net.quantile_levels = QuantileNetConfig::levels_for(cfg.alpha);
  const QuantileModel model = train(train_set, net);

  TrialOutcome out;
  out.trial = t;
  out.validation_rows = parts.validation_rows;
  out.validation_response = val.response;

  const ConformalConfig conformal{cfg.alpha};
  for (const Method method : cfg.methods) {
    MethodOutcome mo;
    mo.method = method;
    auto& d = mo.diagnostics;
    d.trial = t;
    auto& intervals = mo.intervals;
    intervals.reserve(val.size());

    switch (method) {
      case Method::naive: {
        const auto r = calibrate_naive(model, cal, conformal);
        d.q_hat = r.q_hat;
        for (std::size_t i = 0; i < val.size(); ++i)
          intervals.push_back(interval_naive(model, val.features.row(i), r));
        break;
      }
      case Method::qr:
        for (std::size_t i = 0; i < val.size(); ++i)
          intervals.push_back(interval_qr(model, val.features.row(i)));
        break;
      case Method::cqr: {
        const auto r = calibrate_cqr(model, cal, conformal);
        d.q_hat = r.q_hat;
        for (std::size_t i = 0; i < val.size(); ++i)
          intervals.push_back(interval_cqr(model, val.features.row(i), r));
        break;
      }
      case Method::icqr: {
        ImportanceConfig icfg = cfg.importance;
        icfg.seed = derive_seed(seed, streams::importance);
        KSelectionConfig ksel = cfg.k_selection();
        ksel.kmeans.seed = derive_seed(seed, streams::clustering);
        const auto g = calibrate_icqr(model, cal, conformal, ksel, icfg);
        d.selected_k = g.k();
        d.variance_explained = g.clustering().variance_explained;
        d.threshold_met = g.selection.threshold_met;
        for (const auto& c : g.selection.candidates)
          d.candidates.push_back({c.k, c.variance_explained, c.objective});
        d.importances = g.importance.values;
        d.baseline_error = g.importance.baseline_error;
        for (std::size_t c = 0; c < g.k(); ++c) {
          const auto row = g.clustering().centroids.row(c);
          d.centroids.emplace_back(row.begin(), row.end());
        }
        d.group_sizes = g.group_sizes;
        d.group_q_hats = g.q_hats;
        for (std::size_t i = 0; i < val.size(); ++i)
          intervals.push_back(interval_icqr(model, val.features.row(i), g));
        break;
      }
    }

    std::size_t covered = 0;
    std::vector<std::size_t> group_hits(d.group_sizes.size(), 0), group_total(d.group_sizes.size(), 0);
    for (std::size_t i = 0; i < val.size(); ++i) {
      const bool hit = intervals[i].contains(val.response[i]);
      covered += hit ? 1 : 0;
      if (const auto g = intervals[i].group) {
        group_hits[*g] += hit ? 1 : 0;
        ++group_total[*g];
      }
    }
    d.coverage = static_cast<double>(covered) / static_cast<double>(val.size());
    for (std::size_t c = 0; c < group_total.size(); ++c)
      d.group_coverage.push_back(group_total[c] == 0 ? 0.0
                                                     : static_cast<double>(group_hits[c]) /
                                                           static_cast<double>(group_total[c]));
    out.methods.push_back(std::move(mo));
  }
  return out;
}

namespace detail {

// What run_experiment keeps from a trial once its intervals are reduced.
struct MethodTrial {
  std::vector<double> widths;
  TrialDiagnostics diag;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> group_counts;  // covered, total
};

inline std::vector<MethodTrial> reduce_trial(TrialOutcome outcome) {
  std::vector<MethodTrial> out;
  for (auto& mo : outcome.methods) {
    MethodTrial mt;
    mt.widths.reserve(mo.intervals.size());
    for (std::size_t i = 0; i < mo.intervals.size(); ++i) {
      const auto& pi = mo.intervals[i];
      mt.widths.push_back(pi.width());
      if (pi.group) {
        auto& [c, n] = mt.group_counts[*pi.group];
        c += pi.contains(outcome.validation_response[i]) ? 1 : 0;
        ++n;
      }
    }
    mt.diag = std::move(mo.diagnostics);
    out.push_back(std::move(mt));
  }
  return out;
}

}  // namespace detail

// Repeats split / normalize / train / calibrate / evaluate for every trial
// and aggregates one report per requested method. Trials may run on several
// threads; results are combined in trial order, so the report is identical
// for any thread count.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                       const std::string& dataset_name) {
  cfg.validate();
  data.validate();
  std::vector<std::vector<detail::MethodTrial>> results(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < cfg.trials;) {
      try {
        results[t] = detail::reduce_trial(run_trial(data, cfg, t));
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const std::exception& e) {
      throw std::runtime_error("trial " + std::to_string(t) + ": " + e.what());
    }
  }

  ExperimentReport report;
  report.dataset = dataset_name;
  report.column_names = data.column_names;
  report.rows = data.size();
  report.alpha = cfg.alpha;
  report.variance_threshold = cfg.variance_threshold;
  report.trials = cfg.trials;
  report.seed = cfg.seed;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    MethodReport mr;
    mr.method = cfg.methods[m];
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> pooled;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      auto& mt = results[t][m];
      mr.widths.insert(mr.widths.end(), mt.widths.begin(), mt.widths.end());
      mr.trial_coverage.push_back(mt.diag.coverage);
      for (const auto& [c, counts] : mt.group_counts) {
        pooled[c].first += counts.first;
        pooled[c].second += counts.second;
      }
      mr.diagnostics.push_back(std::move(mt.diag));
    }
    for (const auto& [c, counts] : pooled)
      mr.per_group_coverage[c] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    mr.width_stats = summarize(mr.widths);
    mr.coverage_stats = summarize(mr.trial_coverage);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.synthetic.empty()) {
    const auto data = generate_synthetic(builtin_synthetic(cfg.synthetic, cfg.synthetic_size),
                                         derive_seed(cfg.seed, streams::synthetic));
    return run_experiment(cfg, data.data, "synthetic:" + cfg.synthetic);
  }
  return run_experiment(cfg, load_csv(cfg.dataset_path, cfg.response_column), cfg.dataset_path);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const SummaryStats& s) {
  return {{"min", s.min}, {"max", s.max},       {"mean", s.mean}, {"std", s.std},
          {"q1", s.q1},   {"median", s.median}, {"q3", s.q3},     {"iqr", s.iqr}};
}

inline SummaryStats summary_from_json(const nlohmann::json& j) {
  SummaryStats s;
  s.min = j.at("min");
  s.max = j.at("max");
  s.mean = j.at("mean");
  s.std = j.at("std");
  s.q1 = j.at("q1");
  s.median = j.at("median");
  s.q3 = j.at("q3");
  s.iqr = j.at("iqr");
  return s;
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  using nlohmann::json;
  json methods = json::array();
  for (const auto& m : r.methods) {
    json diags = json::array();
    for (const auto& d : m.diagnostics) {
      json dj = {{"trial", d.trial}, {"coverage", d.coverage}};
      if (m.method == Method::naive || m.method == Method::cqr) dj["q_hat"] = d.q_hat;
      if (m.method == Method::icqr) {
        json cands = json::array();
        for (const auto& c : d.candidates)
          cands.push_back({{"k", c.k}, {"variance_explained", c.variance_explained},
                           {"objective", c.objective}});
        json imps = json::array();
        for (std::size_t j = 0; j < d.importances.size(); ++j)
          imps.push_back({{"column_name", j < r.column_names.size() ? r.column_names[j] : ""},
                          {"importance", d.importances[j]}});
        dj["selected_k"] = d.selected_k;
        dj["variance_explained"] = d.variance_explained;
        dj["threshold_met"] = d.threshold_met;
        dj["candidates"] = cands;
        dj["importances"] = imps;
        dj["baseline_error"] = d.baseline_error;
        dj["centroids"] = d.centroids;
        dj["group_sizes"] = d.group_sizes;
        dj["group_q_hats"] = d.group_q_hats;
        dj["group_coverage"] = d.group_coverage;
      }
      diags.push_back(std::move(dj));
    }
    json mj = {{"method", std::string(to_string(m.method))},
               {"width_stats", to_json(m.width_stats)},
               {"coverage_stats", to_json(m.coverage_stats)},
               {"trial_coverage", m.trial_coverage},
               {"diagnostics", diags}};
    if (m.method == Method::icqr) {
      json pg = json::array();
      for (const auto& [c, cov] : m.per_group_coverage)
        pg.push_back({{"cluster", c}, {"coverage", cov}});
      mj["per_group_coverage"] = pg;
    }
    methods.push_back(std::move(mj));
  }
  return {{"schema_version", r.schema_version},
          {"dataset", r.dataset},
          {"column_names", r.column_names},
          {"rows", r.rows},
          {"alpha", r.alpha},
          {"variance_threshold", r.variance_threshold},
          {"trials", r.trials},
          {"seed", r.seed},
          {"methods", methods}};
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.schema_version = j.at("schema_version");
  if (r.schema_version != kReportSchemaVersion)
    throw std::runtime_error("unsupported report schema_version " +
                             std::to_string(r.schema_version));
  r.dataset = j.at("dataset");
  r.column_names = j.at("column_names").get<std::vector<std::string>>();
  r.rows = j.at("rows");
  r.alpha = j.at("alpha");
  r.variance_threshold = j.at("variance_threshold");
  r.trials = j.at("trials");
  r.seed = j.at("seed");
  for (const auto& mj : j.at("methods")) {
    MethodReport m;
    m.method = parse_method(mj.at("method").get<std::string>());
    m.width_stats = summary_from_json(mj.at("width_stats"));
    m.coverage_stats = summary_from_json(mj.at("coverage_stats"));
    m.trial_coverage = mj.at("trial_coverage").get<std::vector<double>>();
    if (mj.contains("per_group_coverage"))
      for (const auto& pg : mj.at("per_group_coverage"))
        m.per_group_coverage[pg.at("cluster").get<std::size_t>()] = pg.at("coverage");
    for (const auto& dj : mj.at("diagnostics")) {
      TrialDiagnostics d;
      d.trial = dj.at("trial");
      d.coverage = dj.at("coverage");
      d.q_hat = dj.value("q_hat", 0.0);
      if (dj.contains("selected_k")) {
        d.selected_k = dj.at("selected_k");
        d.variance_explained = dj.at("variance_explained");
        d.threshold_met = dj.at("threshold_met");
        for (const auto& c : dj.at("candidates"))
          d.candidates.push_back({c.at("k"), c.at("variance_explained"), c.at("objective")});
        for (const auto& imp : dj.at("importances")) d.importances.push_back(imp.at("importance"));
        d.baseline_error = dj.at("baseline_error");
        d.centroids = dj.at("centroids").get<std::vector<std::vector<double>>>();
        d.group_sizes = dj.at("group_sizes").get<std::vector<std::size_t>>();
        d.group_q_hats = dj.at("group_q_hats").get<std::vector<double>>();
        d.group_coverage = dj.at("group_coverage").get<std::vector<double>>();
      }
      m.diagnostics.push_back(std::move(d));
    }
    r.methods.push_back(std::move(m));
  }
  return r;
}

enum class ReportFormat { table, json, csv };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

namespace detail {

inline void stats_table(std::ostream& out, const std::string& title, const ExperimentReport& r,
                        bool widths) {
  static const char* cols[] = {"min", "max", "mean", "std", "Q1", "median", "Q3", "IQR"};
  out << title << '\n';
  out << std::left << std::setw(8) << "Method" << std::right;
  for (const char* c : cols) out << std::setw(14) << c;
  out << '\n';
  out << std::fixed << std::setprecision(6);
  for (const auto& m : r.methods) {
    const SummaryStats& s = widths ? m.width_stats : m.coverage_stats;
    out << std::left << std::setw(8) << to_string(m.method) << std::right;
    for (double v : {s.min, s.max, s.mean, s.std, s.q1, s.median, s.q3, s.iqr})
      out << std::setw(14) << v;
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace detail

// table: width and coverage summary tables, one row per method in request
// order. json: the full report including diagnostics. csv: one row per
// (method, quantity, statistic).
inline void emit_report(const ExperimentReport& r, ReportFormat format, std::ostream& out) {
  if (r.methods.empty()) throw std::invalid_argument("emit_report: empty report");
  switch (format) {
    case ReportFormat::table:
      out << "dataset: " << r.dataset << "  rows: " << r.rows << "  trials: " << r.trials
          << "  alpha: " << r.alpha << "  variance threshold: " << r.variance_threshold << "\n\n";
      detail::stats_table(out, "Interval width summary statistics", r, true);
      out << '\n';
      detail::stats_table(out, "Coverage summary statistics", r, false);
      break;
    case ReportFormat::json:
      out << to_json(r).dump(2) << '\n';
      break;
    case ReportFormat::csv: {
      out << "method,quantity,statistic,value\n";
      for (const auto& m : r.methods) {
        for (const bool widths : {true, false}) {
          const SummaryStats& s = widths ? m.width_stats : m.coverage_stats;
          const std::pair<const char*, double> rows[] = {
              {"min", s.min}, {"max", s.max},       {"mean", s.mean}, {"std", s.std},
              {"q1", s.q1},   {"median", s.median}, {"q3", s.q3},     {"iqr", s.iqr}};
          for (const auto& [name, v] : rows)
            out << to_string(m.method) << ',' << (widths ? "width" : "coverage") << ',' << name
                << ',' << detail::format_double(v) << '\n';
        }
      }
      break;
    }
  }
  if (!out) throw std::runtime_error("emit_report: write failed");
}

inline void emit_report(const ExperimentReport& r, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report to '" + path + "'");
  emit_report(r, format, out);
}

// Plot-ready interval width quantiles (0, 0.01, ..., 1) per method.
inline void emit_width_quantiles(const ExperimentReport& r, std::ostream& out) {
  out << "method,quantile,width\n";
  for (const auto& m : r.methods) {
    if (m.widths.empty()) continue;
    std::vector<double> sorted = m.widths;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i <= 100; ++i) {
      const double p = i / 100.0;
      out << to_string(m.method) << ',' << detail::format_double(p) << ','
          << detail::format_double(interpolated_quantile(sorted, p)) << '\n';
    }
  }
}

}  // namespace icqr
