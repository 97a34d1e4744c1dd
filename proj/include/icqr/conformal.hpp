#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icqr/dataset.hpp"
#include "icqr/importance.hpp"
#include "icqr/kmeans.hpp"
#include "icqr/quantile_net.hpp"

namespace icqr {

enum class Method { naive, qr, cqr, icqr };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::qr: return "qr";
    case Method::cqr: return "cqr";
    case Method::icqr: return "icqr";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "naive") return Method::naive;
  if (name == "qr") return Method::qr;
  if (name == "cqr") return Method::cqr;
  if (name == "icqr") return Method::icqr;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

struct ConformalConfig {
  double miscoverage = 0.1;

  void validate() const {
    if (!(miscoverage > 0.0 && miscoverage < 1.0))
      throw std::invalid_argument("ConformalConfig: miscoverage must lie in (0,1)");
  }
};

// 1-based rank of the conformal quantile among n sorted scores:
// min(n, ceil((n + 1)(1 - alpha))). A relative slack of 1e-9 absorbs the
// rounding in (n + 1)(1 - alpha) when the exact product is an integer.
inline std::size_t conformal_rank(std::size_t n, double alpha) {
  if (n == 0) throw std::invalid_argument("conformal_rank: no scores");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("conformal_rank: alpha must lie in (0,1)");
  const double target = static_cast<double>(n + 1) * (1.0 - alpha);
  const double rank = std::ceil(target - 1e-9 * std::max(1.0, target));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, n);
}

// Finite-sample corrected empirical quantile: the order statistic at
// conformal_rank, with no interpolation between neighbours.
inline double corrected_quantile(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw std::invalid_argument("corrected_quantile: empty score set");
  std::vector<double> sorted(scores.begin(), scores.end());
  const std::size_t idx = conformal_rank(sorted.size(), alpha) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  return sorted[idx];
}

inline double naive_score(double prediction, double y) noexcept { return std::abs(y - prediction); }

// Negative inside the band, positive distance to the violated bound outside.
inline double cqr_score(const QuantilePrediction& p, double y) noexcept {
  return std::max(p.lower - y, y - p.upper);
}

struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<std::size_t> group;

  double width() const noexcept { return upper - lower; }
  bool contains(double y) const noexcept { return lower <= y && y <= upper; }

  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;
};

// [lower - q, upper + q]. A negative q that would invert the band collapses
// it to the band midpoint.
inline PredictionInterval adjust_band(const QuantilePrediction& p, double q_hat) noexcept {
  PredictionInterval out{p.lower - q_hat, p.upper + q_hat, std::nullopt};
  if (out.lower > out.upper) {
    const double mid = 0.5 * (p.lower + p.upper);
    out.lower = mid;
    out.upper = mid;
  }
  return out;
}

struct CalibrationResult {
  Method method = Method::cqr;
  double q_hat = 0.0;
  std::size_t n_cal = 0;
  double miscoverage = 0.1;
  std::vector<double> scores;
};

namespace detail {

template <QuantileRegressor Model, class ScoreFn>
CalibrationResult calibrate(const Model& model, const Dataset& cal, const ConformalConfig& cfg,
                            Method method, ScoreFn score) {
  cfg.validate();
  if (cal.size() == 0) throw std::invalid_argument("calibrate: empty calibration set");
  if (cal.dimension() != model.input_dimension())
    throw std::invalid_argument("calibrate: model/data dimension mismatch");
  CalibrationResult r;
  r.method = method;
  r.n_cal = cal.size();
  r.miscoverage = cfg.miscoverage;
  r.scores.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i)
    r.scores.push_back(score(model.predict(cal.features.row(i)), cal.response[i]));
  r.q_hat = corrected_quantile(r.scores, cfg.miscoverage);
  return r;
}

}  // namespace detail

// Absolute-residual calibration around the median head.
template <QuantileRegressor Model>
CalibrationResult calibrate_naive(const Model& model, const Dataset& cal, const ConformalConfig& cfg) {
  return detail::calibrate(model, cal, cfg, Method::naive, [](const QuantilePrediction& p, double y) {
    return naive_score(p.median, y);
  });
}

template <QuantileRegressor Model>
CalibrationResult calibrate_cqr(const Model& model, const Dataset& cal, const ConformalConfig& cfg) {
  return detail::calibrate(model, cal, cfg, Method::cqr, cqr_score);
}

// One conformal correction per cluster of the importance-weighted
// calibration features.
struct GroupCalibration {
  KSelection selection;
  ImportanceVector importance;
  std::vector<double> q_hats;
  std::vector<std::size_t> group_sizes;
  std::vector<std::vector<double>> group_scores;
  double miscoverage = 0.1;

  const ClusteringModel& clustering() const noexcept { return selection.model; }
  std::size_t k() const noexcept { return q_hats.size(); }

  std::size_t group_of(std::span<const double> x) const {
    return assign(clustering(), weight_features(x, importance));
  }
};

// Builds the per-cluster corrections from precomputed importances.
template <QuantileRegressor Model>
GroupCalibration calibrate_groups(const Model& model, const Dataset& cal, const ConformalConfig& cfg,
                                  const KSelectionConfig& ksel, ImportanceVector importance) {
  cfg.validate();
  if (cal.size() == 0) throw std::invalid_argument("calibrate_icqr: empty calibration set");
  GroupCalibration g;
  g.miscoverage = cfg.miscoverage;
  g.importance = std::move(importance);
  const Matrix weighted = weight_features(cal.features, g.importance);
  g.selection = select_k(weighted, ksel);

  const std::size_t k = g.selection.model.k();
  g.group_scores.assign(k, {});
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const std::size_t c = assign(g.selection.model, weighted.row(i));
    g.group_scores[c].push_back(cqr_score(model.predict(cal.features.row(i)), cal.response[i]));
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (g.group_scores[c].empty())
      throw std::runtime_error("calibrate_icqr: cluster " + std::to_string(c) +
                               " received no calibration points");
    g.group_sizes.push_back(g.group_scores[c].size());
    g.q_hats.push_back(corrected_quantile(g.group_scores[c], cfg.miscoverage));
  }
  return g;
}

// Permutation importance on the calibration set, importance-weighted
// clustering with automatic k, then a CQR correction per cluster. Small
// clusters fall back to their maximum score via the rank clamp.
template <QuantileRegressor Model>
GroupCalibration calibrate_icqr(const Model& model, const Dataset& cal, const ConformalConfig& cfg,
                                const KSelectionConfig& ksel, const ImportanceConfig& icfg) {
  return calibrate_groups(model, cal, cfg, ksel, permutation_importance(model, cal, icfg));
}

template <QuantileRegressor Model>
PredictionInterval interval_naive(const Model& model, std::span<const double> x,
                                  const CalibrationResult& r) {
  if (r.method != Method::naive)
    throw std::invalid_argument("interval_naive: calibration was not naive");
  const double m = model.predict(x).median;
  return {m - r.q_hat, m + r.q_hat, std::nullopt};
}

template <QuantileRegressor Model>
PredictionInterval interval_qr(const Model& model, std::span<const double> x) {
  const QuantilePrediction p = model.predict(x);
  return {p.lower, p.upper, std::nullopt};
}

template <QuantileRegressor Model>
PredictionInterval interval_cqr(const Model& model, std::span<const double> x,
                                const CalibrationResult& r) {
  if (r.method != Method::cqr) throw std::invalid_argument("interval_cqr: calibration was not cqr");
  return adjust_band(model.predict(x), r.q_hat);
}

// `x` is in the model's (normalized) input space; importance weighting for
// the cluster lookup happens here.
template <QuantileRegressor Model>
PredictionInterval interval_icqr(const Model& model, std::span<const double> x,
                                 const GroupCalibration& g) {
  if (x.size() != model.input_dimension())
    throw std::invalid_argument("interval_icqr: dimension mismatch");
  const std::size_t c = g.group_of(x);
  PredictionInterval out = adjust_band(model.predict(x), g.q_hats[c]);
  out.group = c;
  return out;
}

}  // namespace icqr
