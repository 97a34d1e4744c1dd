// icqr-bench: runs the naive / QR / CQR / ICQR interval benchmark on a CSV
// dataset or a built-in synthetic law and prints summary tables.
//
//   icqr-bench run --config exp.cfg --format json --output report.json
//   icqr-bench run --synthetic two-group --trials 10 --methods cqr,icqr
//   icqr-bench synth --name four-group --size 4000 --output data.csv

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "icqr/icqr.hpp"

namespace {

struct RunOptions {
  std::string config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> response;
  std::optional<std::string> synthetic;
  std::optional<std::size_t> synthetic_size;
  std::optional<std::string> methods;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<double> alpha;
  std::optional<double> variance_threshold;
  std::optional<std::size_t> max_k;
  std::optional<std::size_t> epochs;
  std::string format = "table";
  std::string output;
  std::string width_quantiles;
};

struct SynthOptions {
  std::string name = "two-group";
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::string output;
};

icqr::ExperimentConfig build_config(const RunOptions& o) {
  icqr::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = icqr::load_config(o.config_path);
  if (o.dataset) {
    cfg.dataset_path = *o.dataset;
    cfg.synthetic.clear();
  }
  if (o.synthetic) {
    cfg.synthetic = *o.synthetic;
    cfg.dataset_path.clear();
  }
  if (o.response) cfg.response_column = *o.response;
  if (o.synthetic_size) cfg.synthetic_size = *o.synthetic_size;
  if (o.methods) cfg.methods = icqr::parse_methods(*o.methods);
  if (o.trials) cfg.trials = *o.trials;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.variance_threshold) cfg.variance_threshold = *o.variance_threshold;
  if (o.max_k) cfg.max_k = *o.max_k;
  if (o.epochs) cfg.net.epochs = *o.epochs;
  cfg.validate();
  return cfg;
}

int run(const RunOptions& o) {
  const auto format = icqr::parse_report_format(o.format);
  const auto cfg = build_config(o);
  const auto report = icqr::run_experiment(cfg);
  if (o.output.empty())
    icqr::emit_report(report, format, std::cout);
  else
    icqr::emit_report(report, format, o.output);
  if (!o.width_quantiles.empty()) {
    std::ofstream out(o.width_quantiles);
    if (!out) throw std::runtime_error("cannot write '" + o.width_quantiles + "'");
    icqr::emit_width_quantiles(report, out);
  }
  return 0;
}

int synth(const SynthOptions& o) {
  const auto data = icqr::generate_synthetic(icqr::builtin_synthetic(o.name, o.size), o.seed);
  if (o.output.empty())
    icqr::write_csv(data.data, std::cout);
  else
    icqr::write_csv(data.data, o.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformalized quantile regression interval benchmark"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Run the repeated split/train/calibrate benchmark");
  run_cmd->add_option("--config", ro.config_path, "Flat key = value experiment config")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--dataset", ro.dataset, "CSV file with a header row");
  run_cmd->add_option("--response", ro.response, "Response column of the CSV");
  run_cmd->add_option("--synthetic", ro.synthetic,
                      "Built-in law: two-group, four-group, linear, noise");
  run_cmd->add_option("--synthetic-size", ro.synthetic_size, "Rows to generate");
  run_cmd->add_option("--methods", ro.methods, "Comma list of naive,qr,cqr,icqr");
  run_cmd->add_option("--trials", ro.trials, "Number of repeated trainings");
  run_cmd->add_option("--seed", ro.seed, "Base seed");
  run_cmd->add_option("--threads", ro.threads, "Trials run concurrently");
  run_cmd->add_option("--alpha", ro.alpha, "Miscoverage rate");
  run_cmd->add_option("--variance-threshold", ro.variance_threshold,
                      "Fraction of variance explained that stops the k search");
  run_cmd->add_option("--max-k", ro.max_k, "Largest number of clusters tried");
  run_cmd->add_option("--epochs", ro.epochs, "Quantile-net training epochs");
  run_cmd->add_option("--format", ro.format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  run_cmd->add_option("--output", ro.output, "Report destination (default stdout)");
  run_cmd->add_option("--width-quantiles", ro.width_quantiles,
                      "Also write per-method interval width quantiles as CSV");

  SynthOptions so;
  auto* synth_cmd = app.add_subcommand("synth", "Write a built-in synthetic dataset as CSV");
  synth_cmd->add_option("--name", so.name, "two-group, four-group, linear or noise");
  synth_cmd->add_option("--size", so.size, "Rows (0 keeps the law's default)");
  synth_cmd->add_option("--seed", so.seed, "Seed");
  synth_cmd->add_option("--output", so.output, "Destination (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run_cmd->parsed()) return run(ro);
    if (synth_cmd->parsed()) return synth(so);
  } catch (const std::exception& e) {
    std::cerr << "icqr-bench: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
