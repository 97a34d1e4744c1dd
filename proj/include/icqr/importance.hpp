#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icqr/dataset.hpp"
#include "icqr/quantile_net.hpp"
#include "icqr/random.hpp"

namespace icqr {

struct ImportanceConfig {
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (repetitions < 1) throw std::invalid_argument("ImportanceConfig: repetitions must be >= 1");
  }
};

struct ImportanceVector {
  std::vector<double> values;
  double baseline_error = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
};

// Mean pinball loss over the three heads, each at its own level. This is the
// performance measure degraded by column permutation.
template <QuantileRegressor Model>
double mean_pinball_error(const Model& model, const Matrix& x, std::span<const double> y) {
  const auto levels = model.quantile_levels();
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const QuantilePrediction p = model.predict(x.row(r));
    total += pinball_loss(levels[0], y[r], p.lower) + pinball_loss(levels[1], y[r], p.median) +
             pinball_loss(levels[2], y[r], p.upper);
  }
  return total / (3.0 * static_cast<double>(x.rows()));
}

// Default permutation source: a uniform shuffle driven by `rng`.
struct ShufflePermutation {
  void operator()(std::vector<std::size_t>& order, Rng& rng) const {
    std::shuffle(order.begin(), order.end(), rng);
  }
};

// Permutation importance of every feature column. For column j and repetition
// i the column is permuted, the error recomputed, and |E_b - E_perm| recorded;
// I_j is the mean over repetitions. Each column draws from its own sub-seed so
// the result does not depend on evaluation order. `eval_set` is not modified.
template <QuantileRegressor Model, class Permuter = ShufflePermutation>
ImportanceVector permutation_importance(const Model& model, const Dataset& eval_set,
                                        const ImportanceConfig& cfg, Permuter permute = {}) {
  cfg.validate();
  if (eval_set.dimension() != model.input_dimension())
    throw std::invalid_argument("permutation_importance: model expects " +
                                std::to_string(model.input_dimension()) +
                                " features, data has " + std::to_string(eval_set.dimension()));
  if (eval_set.size() < 2)
    throw std::invalid_argument("permutation_importance: need at least 2 rows");

  const std::size_t n = eval_set.size();
  ImportanceVector out;
  out.baseline_error = mean_pinball_error(model, eval_set.features, eval_set.response);
  out.values.assign(eval_set.dimension(), 0.0);

  Matrix work = eval_set.features;
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < eval_set.dimension(); ++j) {
    Rng rng(derive_seed(cfg.seed, j));
    const std::vector<double> original = eval_set.features.column(j);
    double sum = 0.0;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      permute(order, rng);
      for (std::size_t r = 0; r < n; ++r) work(r, j) = original[order[r]];
      const double permuted = mean_pinball_error(model, work, eval_set.response);
      sum += std::abs(out.baseline_error - permuted);
    }
    for (std::size_t r = 0; r < n; ++r) work(r, j) = original[r];
    out.values[j] = sum / static_cast<double>(cfg.repetitions);
  }
  return out;
}

inline void check_importance_dimension(std::size_t d, const ImportanceVector& iv) {
  if (d != iv.size())
    throw std::invalid_argument("importance weighting: " + std::to_string(iv.size()) +
                                " importances for " + std::to_string(d) + " features");
}

inline std::vector<double> weight_features(std::span<const double> x, const ImportanceVector& iv) {
  check_importance_dimension(x.size(), iv);
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] * iv.values[j];
  return out;
}

// Scales column j by I_j. Importances are used as-is, not normalized.
inline Matrix weight_features(const Matrix& x, const ImportanceVector& iv) {
  check_importance_dimension(x.cols(), iv);
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= iv.values[j];
  }
  return out;
}

inline Dataset weight_features(const Dataset& d, const ImportanceVector& iv) {
  Dataset out = d;
  out.features = weight_features(d.features, iv);
  return out;
}

}  // namespace icqr
