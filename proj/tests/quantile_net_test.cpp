#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "icqr/quantile_net.hpp"
#include "icqr/synthetic.hpp"
#include "oracles.hpp"

using namespace icqr;

namespace {

QuantileNetConfig small_config(std::size_t epochs, std::uint64_t seed = 1) {
  QuantileNetConfig c;
  c.hidden_layers = {16, 16};
  c.epochs = epochs;
  c.learning_rate = 0.01;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

Dataset uniform_features(std::size_t n, std::size_t d, std::uint64_t seed,
                         const std::function<double(std::span<const double>)>& f) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix x(n, d);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) x(r, c) = u(rng);
    y[r] = f(x.row(r));
  }
  return make_dataset(std::move(x), std::move(y));
}

}  // namespace

TEST(PinballLoss, Examples) {
  EXPECT_DOUBLE_EQ(pinball_loss(0.9, 1.0, 0.0), 0.9);
  EXPECT_DOUBLE_EQ(pinball_loss(0.9, 0.0, 1.0), 0.1);
  EXPECT_EQ(pinball_loss(0.3, 2.5, 2.5), 0.0);
  for (double e : {-3.0, -0.5, 0.0, 0.25, 7.0})
    EXPECT_DOUBLE_EQ(pinball_loss(0.5, e, 0.0), 0.5 * std::abs(e));
}

TEST(PinballLoss, NonNegativeAndZeroOnlyAtResidualZero) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-10, 10), lv(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const double level = lv(rng), y = u(rng), p = u(rng);
    const double l = pinball_loss(level, y, p);
    EXPECT_GE(l, 0.0);
    if (y != p) EXPECT_GT(l, 0.0);
  }
}

TEST(PinballLoss, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  std::uniform_real_distribution<double> u(-5, 5), lv(0.01, 0.99);
  int checked = 0;
  while (checked < 1000) {
    const double level = lv(rng), y = u(rng), p = u(rng);
    if (std::abs(y - p) < 1e-3) continue;
    const double fd = oracle::central_difference(
        [&](double q) { return pinball_loss(level, y, q); }, p, 1e-5);
    EXPECT_NEAR(pinball_gradient(level, y, p), fd, 1e-4);
    ++checked;
  }
  // At a zero residual the (level - 1) branch is used.
  EXPECT_DOUBLE_EQ(pinball_gradient(0.9, 1.0, 1.0), 1.0 - 0.9);
}

TEST(QuantileModel, BackpropMatchesFiniteDifferences) {
  QuantileNetConfig c = small_config(1);
  c.hidden_layers = {5, 4};
  c.weight_decay = 0.01;
  const Dataset d = uniform_features(12, 3, 5, [](auto x) { return 2 * x[0] - x[2] + 0.3; });
  QuantileModel m = QuantileModel::initialize(3, c);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> grad(m.parameters().size());
  m.objective(d.features, d.response, rows, grad);

  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto p = m.parameters();
    const double keep = p[i];
    p[i] = keep + h;
    const double up = m.objective(d.features, d.response);
    p[i] = keep - h;
    const double down = m.objective(d.features, d.response);
    p[i] = keep;
    EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-5) << "parameter " << i;
  }
}

TEST(QuantileModel, MonotoneRepairPermutesOnly) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    std::array<double, 3> heads{u(rng), u(rng), u(rng)};
    if (i % 7 == 0) heads[1] = heads[0];
    const QuantilePrediction p = monotone_repair(heads);
    EXPECT_LE(p.lower, p.median);
    EXPECT_LE(p.median, p.upper);
    std::array<double, 3> got{p.lower, p.median, p.upper};
    std::sort(heads.begin(), heads.end());
    EXPECT_EQ(got, heads);
  }
}

TEST(QuantileModel, ZeroOutputLayerYieldsBiases) {
  QuantileModel m = QuantileModel::initialize(4, small_config(1));
  auto out = m.layer(m.layer_count() - 1);
  std::fill(out.weights.begin(), out.weights.end(), 0.0);
  out.biases[0] = -1.5;
  out.biases[1] = 0.25;
  out.biases[2] = 3.0;
  const std::vector<double> x{0.3, -2.0, 9.0, 1.0};
  EXPECT_EQ(m.raw_outputs(x), (std::array<double, 3>{-1.5, 0.25, 3.0}));
  EXPECT_EQ(m.predict(x), (QuantilePrediction{-1.5, 0.25, 3.0}));
}

TEST(QuantileModel, DimensionMismatchThrows) {
  const QuantileModel m = QuantileModel::initialize(2, small_config(1));
  const std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_THROW(m.predict(x), std::invalid_argument);
}

TEST(QuantileModel, ConfigValidation) {
  QuantileNetConfig c;
  c.quantile_levels = {0.5, 0.5, 0.9};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.quantile_levels = {0.0, 0.5, 0.9};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(QuantileNetConfig::levels_for(0.1), (std::array<double, 3>{0.05, 0.5, 0.95}));
}

TEST(Train, ConstantResponseConverges) {
  const Dataset d = uniform_features(400, 2, 2, [](auto) { return 5.0; });
  QuantileNetConfig c = small_config(1000);
  c.learning_rate = 0.002;  // fixed-step SGD jitters by roughly lr around the optimum
  const QuantileModel init = QuantileModel::initialize(2, c);
  const QuantileModel m = train(d, c);
  EXPECT_LT(m.objective(d.features, d.response), init.objective(d.features, d.response));
  for (std::size_t r = 0; r < d.size(); r += 37) {
    const auto p = m.predict(d.features.row(r));
    EXPECT_NEAR(p.lower, 5.0, 0.1);
    EXPECT_NEAR(p.median, 5.0, 0.1);
    EXPECT_NEAR(p.upper, 5.0, 0.1);
  }
}

TEST(Train, LinearTargetMedianCorrelates) {
  const Dataset d = uniform_features(1000, 1, 4, [](auto x) { return x[0]; });
  const QuantileModel m = train(d, small_config(40));
  std::vector<double> med;
  for (std::size_t r = 0; r < d.size(); ++r) med.push_back(m.predict(d.features.row(r)).median);
  EXPECT_GE(oracle::pearson(med, d.response), 0.99);
}

TEST(Train, NoiseResponseRecoversNormalQuantiles) {
  const auto data = generate_synthetic(builtin_synthetic("noise", 10000), 21);
  QuantileNetConfig c = small_config(20);
  const QuantileModel m = train(data.data, c);
  const double q05 = oracle::empirical_quantile(data.data.response, 0.05);
  const double q95 = oracle::empirical_quantile(data.data.response, 0.95);
  double lower = 0, upper = 0;
  for (std::size_t r = 0; r < data.data.size(); ++r) {
    const auto p = m.predict(data.data.features.row(r));
    lower += p.lower;
    upper += p.upper;
  }
  lower /= static_cast<double>(data.data.size());
  upper /= static_cast<double>(data.data.size());
  EXPECT_NEAR(lower, q05, 0.15);
  EXPECT_NEAR(upper, q95, 0.15);
  EXPECT_NEAR(lower, -1.645, 0.15);
  EXPECT_NEAR(upper, 1.645, 0.15);
}

TEST(Train, DeterministicForSeed) {
  const Dataset d = uniform_features(300, 3, 6, [](auto x) { return x[0] * x[1] + x[2]; });
  const QuantileModel a = train(d, small_config(5, 9));
  const QuantileModel b = train(d, small_config(5, 9));
  const QuantileModel c = train(d, small_config(5, 10));
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
  for (std::size_t r = 0; r < d.size(); ++r)
    EXPECT_EQ(a.predict(d.features.row(r)), b.predict(d.features.row(r)));
}

TEST(Train, Preconditions) {
  const Dataset d = uniform_features(10, 1, 1, [](auto x) { return x[0]; });
  QuantileNetConfig c = small_config(1);
  c.batch_size = 11;
  EXPECT_THROW(train(d, c), std::invalid_argument);
}

TEST(Train, DivergentLearningRateIsReported) {
  const Dataset d = uniform_features(64, 2, 1, [](auto x) { return 1e3 * x[0]; });
  QuantileNetConfig c = small_config(50);
  c.learning_rate = 1e300;
  EXPECT_THROW(train(d, c), std::runtime_error);
}

TEST(QuantileModel, SaveLoadIsBitExact) {
  const Dataset d = uniform_features(200, 3, 6, [](auto x) { return std::sin(3 * x[0]) + x[1]; });
  QuantileNetConfig c = small_config(3, 4);
  c.weight_decay = 1e-4;
  c.quantile_levels = {0.1, 0.5, 0.9};
  const QuantileModel m = train(d, c);
  std::stringstream buf;
  m.save(buf);
  const QuantileModel back = QuantileModel::load(buf);
  EXPECT_EQ(back.config(), m.config());
  ASSERT_EQ(back.parameters().size(), m.parameters().size());
  EXPECT_TRUE(std::equal(m.parameters().begin(), m.parameters().end(), back.parameters().begin()));

  std::stringstream bad("icqr-quantile-net 99\n");
  EXPECT_THROW(QuantileModel::load(bad), std::runtime_error);
  std::stringstream junk("not a model");
  EXPECT_THROW(QuantileModel::load(junk), std::runtime_error);
}
