#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icqr/dataset.hpp"
#include "icqr/random.hpp"

namespace icqr {

// One mixture component of a heteroscedastic regression law:
//   y = intercept + sum_j slopes[j] * x_j + noise_std * N(0, 1)
struct SyntheticGroup {
  double proportion = 1.0;
  double intercept = 0.0;
  std::vector<double> slopes;  // missing entries count as 0
  double noise_std = 1.0;
};

// Features x_1..x_p are i.i.d. uniform on [feature_low, feature_high]. Each
// row belongs to one group, drawn with the group proportions; when
// `group_feature` is set the group index is appended as a feature column.
struct SyntheticSpec {
  std::string name = "custom";
  std::size_t size = 4000;
  std::size_t continuous_features = 1;
  double feature_low = -1.0;
  double feature_high = 1.0;
  bool group_feature = true;
  std::vector<SyntheticGroup> groups;

  void validate() const {
    if (groups.empty()) throw std::invalid_argument("SyntheticSpec: no groups");
    if (size < 1) throw std::invalid_argument("SyntheticSpec: size must be >= 1");
    if (continuous_features == 0 && !group_feature)
      throw std::invalid_argument("SyntheticSpec: no feature columns");
    double total = 0.0;
    for (const auto& g : groups) {
      if (!(g.proportion > 0.0)) throw std::invalid_argument("SyntheticSpec: proportions must be > 0");
      if (!(g.noise_std >= 0.0)) throw std::invalid_argument("SyntheticSpec: noise_std must be >= 0");
      if (g.slopes.size() > continuous_features)
        throw std::invalid_argument("SyntheticSpec: more slopes than features");
      total += g.proportion;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticSpec: group proportions must sum to 1");
  }

  double mean_response(std::size_t group, std::span<const double> x) const {
    const auto& g = groups[group];
    double m = g.intercept;
    for (std::size_t j = 0; j < g.slopes.size(); ++j) m += g.slopes[j] * x[j];
    return m;
  }
};

struct SyntheticData {
  Dataset data;
  std::vector<std::size_t> groups;
  SyntheticSpec spec;
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, streams::synthetic));
  std::vector<double> weights;
  for (const auto& g : spec.groups) weights.push_back(g.proportion);
  std::discrete_distribution<std::size_t> pick_group(weights.begin(), weights.end());
  std::uniform_real_distribution<double> feature(spec.feature_low, spec.feature_high);
  std::normal_distribution<double> noise(0.0, 1.0);

  const std::size_t d = spec.continuous_features + (spec.group_feature ? 1 : 0);
  SyntheticData out;
  out.spec = spec;
  out.data.features = Matrix(spec.size, d);
  out.data.response.resize(spec.size);
  out.data.column_names = default_column_names(spec.continuous_features);
  if (spec.group_feature) out.data.column_names.push_back("group");
  out.groups.resize(spec.size);

  for (std::size_t r = 0; r < spec.size; ++r) {
    const std::size_t g = spec.groups.size() == 1 ? 0 : pick_group(rng);
    auto x = out.data.features.row(r);
    for (std::size_t j = 0; j < spec.continuous_features; ++j) x[j] = feature(rng);
    if (spec.group_feature) x[spec.continuous_features] = static_cast<double>(g);
    double y = spec.mean_response(g, x);
    if (spec.groups[g].noise_std > 0.0) y += spec.groups[g].noise_std * noise(rng);
    out.groups[r] = g;
    out.data.response[r] = y;
  }
  out.data.validate();
  return out;
}

// Built-in laws selectable by name from the command line.
//   two-group   two equally likely groups, noise std 1 and 5
//   four-group  proportions 0.5/0.4/0.05/0.05, noise std 1/1/10/10, the
//               rare groups sitting higher
//   linear      y = 10 x1 + 0 x2 + N(0,1), no group column
//   noise       y = N(0,1), independent of two uniform features
inline SyntheticSpec builtin_synthetic(std::string_view name, std::size_t size = 0) {
  SyntheticSpec s;
  s.name = std::string(name);
  if (name == "two-group") {
    s.size = 4000;
    s.continuous_features = 1;
    s.groups = {{0.5, 0.0, {3.0}, 1.0}, {0.5, 5.0, {3.0}, 5.0}};
  } else if (name == "four-group") {
    s.size = 4000;
    s.continuous_features = 1;
    s.groups = {{0.5, 0.0, {2.0}, 1.0},
                {0.4, 1.0, {2.0}, 1.0},
                {0.05, 8.0, {2.0}, 10.0},
                {0.05, 10.0, {2.0}, 10.0}};
  } else if (name == "linear") {
    s.size = 2000;
    s.continuous_features = 2;
    s.group_feature = false;
    s.groups = {{1.0, 0.0, {10.0, 0.0}, 1.0}};
  } else if (name == "noise") {
    s.size = 10000;
    s.continuous_features = 2;
    s.group_feature = false;
    s.groups = {{1.0, 0.0, {}, 1.0}};
  } else {
    throw std::invalid_argument("unknown synthetic dataset '" + std::string(name) +
                                "' (expected two-group, four-group, linear or noise)");
  }
  if (size > 0) s.size = size;
  return s;
}

}  // namespace icqr
