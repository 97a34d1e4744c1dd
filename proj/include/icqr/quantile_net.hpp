#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icqr/dataset.hpp"
#include "icqr/matrix.hpp"
#include "icqr/random.hpp"

namespace icqr {

// Lower, median and upper conditional quantile estimates for one input.
struct QuantilePrediction {
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;

  friend bool operator==(const QuantilePrediction&, const QuantilePrediction&) = default;
};

// Anything that maps a feature vector to three quantile estimates.
template <class M>
concept QuantileRegressor = requires(const M& m, std::span<const double> x) {
  { m.predict(x) } -> std::same_as<QuantilePrediction>;
  { m.input_dimension() } -> std::convertible_to<std::size_t>;
  { m.quantile_levels() } -> std::convertible_to<std::array<double, 3>>;
};

// Quantile (pinball) loss of `prediction` against `y` at `level`.
inline double pinball_loss(double level, double y, double prediction) noexcept {
  const double e = y - prediction;
  return std::max(level * e, (level - 1.0) * e);
}

// Derivative of pinball_loss with respect to `prediction`. At e == 0 the
// (level - 1) branch is taken, giving 1 - level.
inline double pinball_gradient(double level, double y, double prediction) noexcept {
  return (y - prediction) > 0.0 ? -level : 1.0 - level;
}

// Sorts the three head outputs so lower <= median <= upper.
inline QuantilePrediction monotone_repair(std::array<double, 3> heads) noexcept {
  std::sort(heads.begin(), heads.end());
  return {heads[0], heads[1], heads[2]};
}

struct QuantileNetConfig {
  std::vector<std::size_t> hidden_layers{64, 64};
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::array<double, 3> quantile_levels{0.05, 0.5, 0.95};

  // Levels alpha/2, 0.5, 1 - alpha/2 for a target miscoverage alpha.
  static std::array<double, 3> levels_for(double alpha) {
    return {alpha / 2.0, 0.5, 1.0 - alpha / 2.0};
  }

  void validate() const {
    for (std::size_t units : hidden_layers)
      if (units == 0) throw std::invalid_argument("QuantileNetConfig: empty hidden layer");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("QuantileNetConfig: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("QuantileNetConfig: epochs must be >= 1");
    if (batch_size < 1)
      throw std::invalid_argument("QuantileNetConfig: batch_size must be >= 1");
    if (!(weight_decay >= 0.0))
      throw std::invalid_argument("QuantileNetConfig: weight_decay must be >= 0");
    for (std::size_t h = 0; h < 3; ++h) {
      const double q = quantile_levels[h];
      if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("QuantileNetConfig: quantile levels must lie in (0,1)");
      if (h > 0 && !(quantile_levels[h - 1] < q))
        throw std::invalid_argument(
            "QuantileNetConfig: quantile levels must be strictly increasing");
    }
  }

  friend bool operator==(const QuantileNetConfig&, const QuantileNetConfig&) = default;
};

// Fully connected ReLU network with three linear output heads. All weights
// and biases live in one flat parameter vector; layer l stores an
// out x in row-major weight block followed by `out` biases.
class QuantileModel {
 public:
  static constexpr std::size_t kHeads = 3;

  struct LayerView {
    std::span<double> weights;
    std::span<double> biases;
    std::size_t inputs;
    std::size_t outputs;
  };

  QuantileModel() = default;

  // Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  static QuantileModel initialize(std::size_t input_dimension, const QuantileNetConfig& cfg) {
    cfg.validate();
    if (input_dimension == 0) throw std::invalid_argument("QuantileModel: D must be >= 1");
    QuantileModel m;
    m.config_ = cfg;
    m.widths_.push_back(input_dimension);
    for (std::size_t units : cfg.hidden_layers) m.widths_.push_back(units);
    m.widths_.push_back(kHeads);
    m.layout();
    Rng rng(derive_seed(cfg.seed, streams::network));
    for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.widths_[l]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      auto layer = m.layer(l);
      for (double& w : layer.weights) w = dist(rng);
      for (double& b : layer.biases) b = dist(rng);
    }
    return m;
  }

  const QuantileNetConfig& config() const noexcept { return config_; }
  std::array<double, 3> quantile_levels() const noexcept { return config_.quantile_levels; }
  std::size_t input_dimension() const noexcept { return widths_.empty() ? 0 : widths_.front(); }
  std::size_t layer_count() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  LayerView layer(std::size_t l) {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    std::span<double> block(params_.data() + offsets_[l], in * out + out);
    return {block.first(in * out), block.subspan(in * out), in, out};
  }

  // Head outputs before monotone repair.
  std::array<double, 3> raw_outputs(std::span<const double> x) const {
    check_dimension(x.size());
    std::vector<double> a(x.begin(), x.end()), z;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      forward_layer(l, a, z);
      if (l + 1 < layer_count())
        for (double& v : z) v = std::max(v, 0.0);
      a.swap(z);
    }
    return {a[0], a[1], a[2]};
  }

  QuantilePrediction predict(std::span<const double> x) const {
    return monotone_repair(raw_outputs(x));
  }

  std::vector<QuantilePrediction> predict(const Matrix& x) const {
    std::vector<QuantilePrediction> out;
    out.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(predict(x.row(r)));
    return out;
  }

  double weight_penalty() const {
    double s = 0.0;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const std::size_t in = widths_[l], out = widths_[l + 1];
      for (std::size_t i = 0; i < in * out; ++i) {
        const double w = params_[offsets_[l] + i];
        s += w * w;
      }
    }
    return config_.weight_decay * s;
  }

  // Training objective on the given rows: the sum over heads of the mean
  // pinball loss at that head's level, plus weight_decay * sum(w^2) over all
  // weights (biases are not penalized). When `gradient` is non-empty it
  // receives d(objective)/d(parameters).
  double objective(const Matrix& x, std::span<const double> y,
                   std::span<const std::size_t> rows, std::span<double> gradient = {}) const {
    if (x.rows() != y.size())
      throw std::invalid_argument("QuantileModel::objective: X/y size mismatch");
    check_dimension(x.cols());
    const bool want_grad = !gradient.empty();
    if (want_grad) {
      if (gradient.size() != params_.size())
        throw std::invalid_argument("QuantileModel::objective: gradient size mismatch");
      std::fill(gradient.begin(), gradient.end(), 0.0);
    }
    const std::size_t layers = layer_count();
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    std::vector<std::vector<double>> act(layers + 1);
    std::vector<double> delta, prev_delta;
    double loss = 0.0;

    for (std::size_t row : rows) {
      const auto xr = x.row(row);
      act[0].assign(xr.begin(), xr.end());
      for (std::size_t l = 0; l < layers; ++l) {
        forward_layer(l, act[l], act[l + 1]);
        if (l + 1 < layers)
          for (double& v : act[l + 1]) v = std::max(v, 0.0);
      }
      const auto& out = act[layers];
      delta.assign(kHeads, 0.0);
      for (std::size_t h = 0; h < kHeads; ++h) {
        const double level = config_.quantile_levels[h];
        loss += pinball_loss(level, y[row], out[h]) * inv_n;
        delta[h] = pinball_gradient(level, y[row], out[h]) * inv_n;
      }
      if (!want_grad) continue;
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = widths_[l], outs = widths_[l + 1];
        const double* w = params_.data() + offsets_[l];
        double* gw = gradient.data() + offsets_[l];
        double* gb = gw + in * outs;
        const auto& a = act[l];
        for (std::size_t o = 0; o < outs; ++o) {
          const double d = delta[o];
          if (d == 0.0) continue;
          gb[o] += d;
          double* gw_row = gw + o * in;
          for (std::size_t i = 0; i < in; ++i) gw_row[i] += d * a[i];
        }
        if (l == 0) break;
        prev_delta.assign(in, 0.0);
        for (std::size_t o = 0; o < outs; ++o) {
          const double d = delta[o];
          if (d == 0.0) continue;
          const double* w_row = w + o * in;
          for (std::size_t i = 0; i < in; ++i) prev_delta[i] += w_row[i] * d;
        }
        // ReLU: hidden activations equal zero exactly when the unit is off.
        for (std::size_t i = 0; i < in; ++i)
          if (!(a[i] > 0.0)) prev_delta[i] = 0.0;
        delta.swap(prev_delta);
      }
    }

    loss += weight_penalty();
    if (want_grad && config_.weight_decay > 0.0) {
      for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n = widths_[l] * widths_[l + 1];
        for (std::size_t i = 0; i < n; ++i)
          gradient[offsets_[l] + i] += 2.0 * config_.weight_decay * params_[offsets_[l] + i];
      }
    }
    return loss;
  }

  double objective(const Matrix& x, std::span<const double> y) const {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return objective(x, y, rows);
  }

  // Versioned text serialization. Reals are written as hexadecimal floats so
  // that save followed by load reproduces every parameter bit for bit.
  void save(std::ostream& out) const {
    out << kMagic << ' ' << kVersion << '\n';
    out << "input_dimension " << input_dimension() << '\n';
    out << "hidden_layers " << config_.hidden_layers.size();
    for (std::size_t u : config_.hidden_layers) out << ' ' << u;
    out << '\n';
    out << "quantile_levels";
    for (double q : config_.quantile_levels) out << ' ' << hex(q);
    out << '\n';
    out << "learning_rate " << hex(config_.learning_rate) << '\n';
    out << "epochs " << config_.epochs << '\n';
    out << "batch_size " << config_.batch_size << '\n';
    out << "weight_decay " << hex(config_.weight_decay) << '\n';
    out << "seed " << config_.seed << '\n';
    out << "parameters " << params_.size() << '\n';
    for (double p : params_) out << hex(p) << '\n';
    if (!out) throw std::runtime_error("QuantileModel::save: write failed");
  }

  static QuantileModel load(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic) throw std::runtime_error("QuantileModel::load: not a model file");
    if (version != kVersion)
      throw std::runtime_error("QuantileModel::load: unsupported version " +
                               std::to_string(version));
    QuantileNetConfig cfg;
    std::size_t d = 0, count = 0;
    expect(in, "input_dimension");
    in >> d;
    expect(in, "hidden_layers");
    in >> count;
    cfg.hidden_layers.assign(count, 0);
    for (auto& u : cfg.hidden_layers) in >> u;
    expect(in, "quantile_levels");
    for (auto& q : cfg.quantile_levels) q = read_hex(in);
    expect(in, "learning_rate");
    cfg.learning_rate = read_hex(in);
    expect(in, "epochs");
    in >> cfg.epochs;
    expect(in, "batch_size");
    in >> cfg.batch_size;
    expect(in, "weight_decay");
    cfg.weight_decay = read_hex(in);
    expect(in, "seed");
    in >> cfg.seed;
    if (!in) throw std::runtime_error("QuantileModel::load: malformed header");
    QuantileModel m = initialize(d, cfg);
    expect(in, "parameters");
    in >> count;
    if (count != m.params_.size())
      throw std::runtime_error("QuantileModel::load: parameter count mismatch");
    for (double& p : m.params_) p = read_hex(in);
    return m;
  }

 private:
  static constexpr const char* kMagic = "icqr-quantile-net";
  static constexpr int kVersion = 1;

  void layout() {
    offsets_.clear();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      offsets_.push_back(total);
      total += widths_[l] * widths_[l + 1] + widths_[l + 1];
    }
    params_.assign(total, 0.0);
  }

  void forward_layer(std::size_t l, const std::vector<double>& a, std::vector<double>& z) const {
    const std::size_t in = widths_[l], out = widths_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    z.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      const double* w_row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) s += w_row[i] * a[i];
      z[o] = s;
    }
  }

  void check_dimension(std::size_t d) const {
    if (d != input_dimension())
      throw std::invalid_argument("QuantileModel: expected " +
                                  std::to_string(input_dimension()) + " features, got " +
                                  std::to_string(d));
  }

  static std::string hex(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
    return std::string(buf, ptr);
  }

  static double read_hex(std::istream& in) {
    std::string token;
    in >> token;
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      throw std::runtime_error("QuantileModel::load: bad real '" + token + "'");
    return v;
  }

  static void expect(std::istream& in, const char* key) {
    std::string token;
    in >> token;
    if (token != key)
      throw std::runtime_error(std::string("QuantileModel::load: expected '") + key +
                               "', found '" + token + "'");
  }

  QuantileNetConfig config_;
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Mini-batch SGD on the summed pinball objective. Deterministic for a given
// seed. If the final objective is worse than the initial one the initial
// parameters are returned.
inline QuantileModel train(const Dataset& train_set, const QuantileNetConfig& cfg) {
  cfg.validate();
  train_set.validate();
  if (train_set.size() < cfg.batch_size)
    throw std::invalid_argument("train: " + std::to_string(train_set.size()) +
                                " rows is fewer than batch_size " +
                                std::to_string(cfg.batch_size));
  QuantileModel model = QuantileModel::initialize(train_set.dimension(), cfg);
  const auto& x = train_set.features;
  const auto& y = train_set.response;

  const std::vector<double> initial_params(model.parameters().begin(),
                                           model.parameters().end());
  const double initial_loss = model.objective(x, y);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(model.parameters().size());
  Rng rng(derive_seed(cfg.seed, streams::network + 100));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const double loss = model.objective(x, y, batch, grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss in epoch " + std::to_string(epoch) +
                                 " (learning rate too large?)");
      auto params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
    }
  }

  const double final_loss = model.objective(x, y);
  if (!std::isfinite(final_loss)) throw std::runtime_error("train: non-finite final loss");
  if (final_loss > initial_loss)
    std::copy(initial_params.begin(), initial_params.end(), model.parameters().begin());
  return model;
}

}  // namespace icqr
