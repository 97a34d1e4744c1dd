#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "icqr/experiment.hpp"

using namespace icqr;

namespace {

ExperimentConfig quick_config(const std::string& law, std::size_t size, std::size_t trials) {
  ExperimentConfig c;
  c.synthetic = law;
  c.synthetic_size = size;
  c.trials = trials;
  c.seed = 3;
  c.net.hidden_layers = {16, 16};
  c.net.epochs = 5;
  c.net.batch_size = 32;
  c.max_k = 6;
  return c;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Summarize, Examples) {
  const auto s = summarize(std::vector<double>{4, 1, 3, 2});
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 4.0);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(s.q1, 1.75);
  EXPECT_EQ(s.median, 2.5);
  EXPECT_EQ(s.q3, 3.25);
  EXPECT_EQ(s.iqr, 1.5);

  const auto c = summarize(std::vector<double>(9, 2.5));
  EXPECT_EQ(c.std, 0.0);
  EXPECT_EQ(c.iqr, 0.0);
  EXPECT_EQ(c.median, 2.5);

  const auto one = summarize(std::vector<double>{7});
  EXPECT_EQ(one.std, 0.0);
  EXPECT_EQ(one.q1, 7.0);
  EXPECT_THROW(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST(Summarize, StatisticsAreOrdered) {
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  std::lognormal_distribution<double> g(0, 2);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(size(rng));
    for (double& x : v) x = g(rng);
    const auto s = summarize(v);
    EXPECT_LE(s.min, s.q1);
    EXPECT_LE(s.q1, s.median);
    EXPECT_LE(s.median, s.q3);
    EXPECT_LE(s.q3, s.max);
    EXPECT_LE(s.min, s.mean);
    EXPECT_LE(s.mean, s.max);
    EXPECT_GE(s.iqr, 0.0);
  }
}

TEST(Synthetic, NoiseVarianceRatio) {
  const auto data = generate_synthetic(builtin_synthetic("four-group", 100000), 1);
  std::vector<double> ss(4, 0.0), n(4, 0.0);
  for (std::size_t r = 0; r < data.data.size(); ++r) {
    const std::size_t g = data.groups[r];
    const double e = data.data.response[r] - data.spec.mean_response(g, data.data.features.row(r));
    ss[g] += e * e;
    n[g] += 1;
    EXPECT_EQ(data.data.features(r, 1), static_cast<double>(g));
  }
  EXPECT_NEAR((ss[2] / n[2]) / (ss[0] / n[0]), 100.0, 10.0);
  EXPECT_NEAR((ss[3] / n[3]) / (ss[1] / n[1]), 100.0, 10.0);
  EXPECT_NEAR(n[2] / 100000.0, 0.05, 0.005);
}

TEST(Synthetic, ZeroNoiseIsExactAndDeterministic) {
  SyntheticSpec s;
  s.size = 200;
  s.continuous_features = 2;
  s.groups = {{0.3, 1.0, {2.0, -1.0}, 0.0}, {0.7, -4.0, {0.5}, 0.0}};
  const auto a = generate_synthetic(s, 9);
  for (std::size_t r = 0; r < a.data.size(); ++r) {
    const auto x = a.data.features.row(r);
    const double expect = a.groups[r] == 0 ? 1.0 + 2.0 * x[0] - x[1] : -4.0 + 0.5 * x[0];
    EXPECT_EQ(a.data.response[r], expect);
    EXPECT_GE(x[0], -1.0);
    EXPECT_LE(x[0], 1.0);
  }
  EXPECT_EQ(generate_synthetic(s, 9).data, a.data);
  EXPECT_NE(generate_synthetic(s, 10).data, a.data);

  s.groups[0].proportion = 0.5;
  EXPECT_THROW(generate_synthetic(s, 1), std::invalid_argument);
  EXPECT_THROW(builtin_synthetic("nope"), std::invalid_argument);
}

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# comment\n"
      "synthetic = two-group   # trailing\n"
      "trials = 3\n"
      "alpha=0.2\n"
      "hidden_layers = 8, 4\n"
      "methods = cqr,icqr\n"
      "\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.synthetic, "two-group");
  EXPECT_EQ(c.trials, 3u);
  EXPECT_EQ(c.alpha, 0.2);
  EXPECT_EQ(c.net.hidden_layers, (std::vector<std::size_t>{8, 4}));
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::cqr, Method::icqr}));
  EXPECT_NO_THROW(c.validate());

  std::istringstream unknown("trails = 3\n");
  EXPECT_THROW(parse_config(unknown), std::invalid_argument);
  std::istringstream bad("alpha = lots\n");
  EXPECT_THROW(parse_config(bad), std::invalid_argument);
  EXPECT_THROW(parse_methods("cqr,bogus"), std::invalid_argument);
}

TEST(Config, Validation) {
  ExperimentConfig c = quick_config("two-group", 200, 1);
  c.dataset_path = "x.csv";
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config("two-group", 200, 0);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config("two-group", 200, 1);
  c.variance_threshold = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = quick_config("two-group", 200, 1);
  c.max_k = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Experiment, NaiveWidthIsConstantWithinTrial) {
  ExperimentConfig c = quick_config("linear", 800, 3);
  c.methods = {Method::naive};
  const auto gen = generate_synthetic(builtin_synthetic("linear", 800), 1);
  for (std::size_t t = 0; t < c.trials; ++t) {
    const auto out = run_trial(gen.data, c, t);
    const auto& iv = out.methods.front().intervals;
    double lo = 1e300, hi = -1e300;
    for (const auto& pi : iv) {
      lo = std::min(lo, pi.width());
      hi = std::max(hi, pi.width());
      EXPECT_FALSE(pi.group.has_value());
    }
    EXPECT_LT(hi - lo, 1e-9);
  }
}

TEST(Experiment, NaiveCoversOnNoiselessData) {
  SyntheticSpec s;
  s.size = 1000;
  s.continuous_features = 2;
  s.group_feature = false;
  s.groups = {{1.0, 1.0, {1.0, -0.5}, 0.0}};
  const auto gen = generate_synthetic(s, 4);
  ExperimentConfig c = quick_config("unused", 0, 20);
  c.synthetic.clear();
  c.dataset_path = "inline";
  c.methods = {Method::naive};
  c.net.epochs = 40;
  const auto r = run_experiment(c, gen.data, "line");
  // The guarantee is on expected coverage, so allow three standard errors
  // of the trial mean below the target.
  const auto& cov = r.method(Method::naive).coverage_stats;
  EXPECT_GE(cov.mean, 0.9 - 3.0 * cov.std / std::sqrt(20.0));
  EXPECT_LT(r.method(Method::naive).width_stats.mean, 0.5);
  for (const auto& d : r.method(Method::naive).diagnostics) EXPECT_GE(d.q_hat, 0.0);
}

TEST(Experiment, IcqrWidthsSpreadMoreThanCqr) {
  ExperimentConfig c = quick_config("two-group", 4000, 3);
  c.net.hidden_layers = {64, 64};
  c.methods = {Method::cqr, Method::icqr};
  const auto r = run_experiment(c);
  EXPECT_GT(r.method(Method::icqr).width_stats.iqr, r.method(Method::cqr).width_stats.iqr);
  for (const auto& d : r.method(Method::icqr).diagnostics) {
    EXPECT_GE(d.selected_k, 2u);
    EXPECT_EQ(d.group_q_hats.size(), d.selected_k);
    EXPECT_EQ(d.importances.size(), 2u);
  }
}

TEST(Experiment, ThreadCountDoesNotChangeReport) {
  ExperimentConfig c = quick_config("two-group", 600, 4);
  const auto one = run_experiment(c);
  c.threads = 3;
  const auto three = run_experiment(c);
  EXPECT_EQ(to_json(one).dump(), to_json(three).dump());
  for (std::size_t m = 0; m < one.methods.size(); ++m)
    EXPECT_EQ(one.methods[m].widths, three.methods[m].widths);
}

TEST(Experiment, MeanCoverageNearTarget) {
  ExperimentConfig c = quick_config("two-group", 2000, 4);
  const auto r = run_experiment(c);
  for (Method m : {Method::naive, Method::cqr, Method::icqr})
    EXPECT_GE(r.method(m).coverage_stats.mean, 1 - c.alpha - 0.02) << to_string(m);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.trial_coverage.size(), 4u);
    EXPECT_EQ(m.widths.size(), 4u * 500u);
  }
}

TEST(Experiment, ErrorsNameTheTrial) {
  ExperimentConfig c = quick_config("two-group", 100, 2);
  c.net.batch_size = 80;  // larger than the 50-row training partition
  try {
    run_experiment(c);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("trial 0:", 0), 0u) << e.what();
  }
}

TEST(Report, JsonRoundTripAndFormats) {
  ExperimentConfig c = quick_config("two-group", 400, 2);
  c.methods = {Method::icqr, Method::naive, Method::qr};
  const auto r = run_experiment(c);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
  const auto back = report_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.method(Method::qr).width_stats, r.method(Method::qr).width_stats);

  std::ostringstream table;
  emit_report(r, ReportFormat::table, table);
  const std::string t = table.str();
  const auto first = t.find("\nicqr");
  const auto second = t.find("\nnaive");
  const auto third = t.find("\nqr");
  EXPECT_LT(first, second);
  EXPECT_LT(second, third);
  EXPECT_NE(t.find("Coverage summary statistics"), std::string::npos);

  std::ostringstream csv;
  emit_report(r, ReportFormat::csv, csv);
  EXPECT_EQ(count_lines(csv.str()), 3u * 16u + 1u);

  std::ostringstream q;
  emit_width_quantiles(r, q);
  EXPECT_EQ(count_lines(q.str()), 3u * 101u + 1u);
  EXPECT_THROW(parse_report_format("xml"), std::invalid_argument);
}
