#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icqr/matrix.hpp"
#include "icqr/random.hpp"

namespace icqr {

struct KMeansConfig {
  std::size_t max_iterations = 300;
  std::uint64_t seed = 0;
  std::size_t restarts = 5;
  // 0 disables the minimum-size repair.
  std::size_t min_cluster_size = 0;

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("KMeansConfig: max_iterations must be >= 1");
    if (restarts < 1) throw std::invalid_argument("KMeansConfig: restarts must be >= 1");
  }
};

struct ClusteringModel {
  Matrix centroids;
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> cluster_sizes;
  std::vector<double> global_mean;
  double variance_explained = 0.0;
  double objective = 0.0;
  // Objective after every centroid update of the winning restart.
  std::vector<double> objective_trace;

  std::size_t k() const noexcept { return centroids.rows(); }
  std::size_t dimension() const noexcept { return centroids.cols(); }
};

// Index of the closest centroid; the lowest index wins ties.
inline std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::size_t assign(const ClusteringModel& model, std::span<const double> x) {
  if (x.size() != model.dimension())
    throw std::invalid_argument("assign: point has " + std::to_string(x.size()) +
                                " coordinates, centroids have " +
                                std::to_string(model.dimension()));
  return nearest_centroid(model.centroids, x);
}

inline std::vector<std::size_t> assign_all(const Matrix& centroids, const Matrix& points) {
  std::vector<std::size_t> out(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) out[r] = nearest_centroid(centroids, points.row(r));
  return out;
}

// Within-cluster sum of squared distances.
inline double kmeans_objective(const Matrix& points, const Matrix& centroids,
                               std::span<const std::size_t> assignments) {
  double l = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r)
    l += squared_distance(points.row(r), centroids.row(assignments[r]));
  return l;
}

// Between-cluster over total sum of squares. The numerator is accumulated
// point by point (each point contributes its centroid's squared offset from
// the mean), which equals sum_i n_i |c_i - mu|^2 and matches the
// denominator's summation order, so singleton clusters give exactly 1 and a
// single cluster exactly 0. All-identical points return 1.
inline double variance_explained(const Matrix& points, const Matrix& centroids,
                                 std::span<const std::size_t> assignments,
                                 std::span<const double> mean) {
  double between = 0.0, total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    between += squared_distance(centroids.row(assignments[r]), mean);
    total += squared_distance(points.row(r), mean);
  }
  if (total == 0.0) return 1.0;
  return std::clamp(between / total, 0.0, 1.0);
}

inline double variance_explained(const ClusteringModel& model, const Matrix& points) {
  if (points.rows() != model.assignments.size())
    throw std::invalid_argument("variance_explained: model was fitted on a different point set");
  return variance_explained(points, model.centroids, model.assignments, model.global_mean);
}

namespace detail {

// k-means++ seeding: the first centre is uniform, each further centre is
// drawn with probability proportional to its squared distance from the
// nearest centre chosen so far.
inline Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t first = pick(rng);
  std::copy_n(points.row(first).begin(), points.cols(), centroids.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t r = 0; r < n; ++r) d2[r] = squared_distance(points.row(r), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n;
      for (std::size_t r = 0; r < n; ++r) {
        if (d2[r] <= 0.0) continue;
        acc += d2[r];
        chosen = r;
        if (acc > target) break;
      }
    } else {
      chosen = pick(rng);
    }
    std::copy_n(points.row(chosen).begin(), points.cols(), centroids.row(c).begin());
    for (std::size_t r = 0; r < n; ++r)
      d2[r] = std::min(d2[r], squared_distance(points.row(r), centroids.row(c)));
  }
  return centroids;
}

inline std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> assignments, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes[a];
  return sizes;
}

inline void update_centroids(const Matrix& points, std::span<const std::size_t> assignments,
                             Matrix& centroids) {
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    bool any = false;
    const auto mean = mean_of_rows(points, [&](std::size_t r) {
      const bool hit = assignments[r] == c;
      any = any || hit;
      return hit;
    });
    if (any) std::copy(mean.begin(), mean.end(), centroids.row(c).begin());
  }
}

// Gives each empty cluster the point farthest from its current centroid,
// taken from clusters that can spare one.
inline void repair_empty_clusters(const Matrix& points, Matrix& centroids,
                                  std::vector<std::size_t>& assignments) {
  auto sizes = cluster_sizes(assignments, centroids.rows());
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t r = 0; r < points.rows(); ++r) {
      if (sizes[assignments[r]] < 2) continue;
      const double d = squared_distance(points.row(r), centroids.row(assignments[r]));
      if (d > far_d) {
        far_d = d;
        far = r;
      }
    }
    if (far == points.rows()) return;
    --sizes[assignments[far]];
    assignments[far] = c;
    ++sizes[c];
    std::copy_n(points.row(far).begin(), points.cols(), centroids.row(c).begin());
  }
}

struct LloydResult {
  Matrix centroids;
  std::vector<std::size_t> assignments;
  std::vector<double> trace;
};

// Alternates nearest-centroid assignment and mean updates until the
// assignment stops changing or `max_iterations` updates have been made.
inline LloydResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
  LloydResult res;
  res.assignments = assign_all(centroids, points);
  repair_empty_clusters(points, centroids, res.assignments);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    update_centroids(points, res.assignments, centroids);
    res.trace.push_back(kmeans_objective(points, centroids, res.assignments));
    auto next = assign_all(centroids, points);
    // Duplicate centroids tie to the lowest index, so repair before comparing.
    repair_empty_clusters(points, centroids, next);
    if (next == res.assignments) break;
    res.assignments = std::move(next);
  }
  res.centroids = std::move(centroids);
  return res;
}

// Merges clusters below `min_size` into their nearest neighbour (by centroid
// distance) and re-runs Lloyd with one fewer centre, until every cluster is
// large enough or a single cluster remains.
inline LloydResult enforce_min_size(const Matrix& points, LloydResult res, std::size_t min_size,
                                    std::size_t max_iterations) {
  while (res.centroids.rows() > 1) {
    const auto sizes = cluster_sizes(res.assignments, res.centroids.rows());
    const auto small = static_cast<std::size_t>(
        std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    if (sizes[small] >= min_size) break;

    std::size_t target = small == 0 ? 1 : 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < res.centroids.rows(); ++c) {
      if (c == small) continue;
      const double d = squared_distance(res.centroids.row(small), res.centroids.row(c));
      if (d < best) {
        best = d;
        target = c;
      }
    }
    Matrix merged(0, 0);
    std::vector<std::size_t> remap(res.centroids.rows());
    for (std::size_t c = 0, next = 0; c < res.centroids.rows(); ++c) {
      if (c == small) continue;
      remap[c] = next++;
      merged.append_row(res.centroids.row(c));
    }
    remap[small] = remap[target];
    for (auto& a : res.assignments) a = remap[a];
    update_centroids(points, res.assignments, merged);
    auto trace = std::move(res.trace);
    res = lloyd(points, std::move(merged), max_iterations);
    trace.insert(trace.end(), res.trace.begin(), res.trace.end());
    res.trace = std::move(trace);
  }
  return res;
}

}  // namespace detail

// Lloyd's k-means with k-means++ seeding. The best of `restarts` runs by
// objective is kept; equal objectives keep the earliest restart. Restart r
// is seeded with derive_seed(cfg.seed, r). When `restart_traces` is given it
// receives the objective trace of every restart.
inline ClusteringModel kmeans(const Matrix& points, std::size_t k, const KMeansConfig& cfg,
                              std::vector<std::vector<double>>* restart_traces = nullptr) {
  cfg.validate();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > points.rows())
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                                std::to_string(points.rows()));
  if (restart_traces) restart_traces->clear();

  detail::LloydResult best;
  double best_objective = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    auto res = detail::lloyd(points, detail::kmeanspp_init(points, k, rng), cfg.max_iterations);
    if (cfg.min_cluster_size > 0)
      res = detail::enforce_min_size(points, std::move(res), cfg.min_cluster_size,
                                     cfg.max_iterations);
    const double l = kmeans_objective(points, res.centroids, res.assignments);
    if (restart_traces) restart_traces->push_back(res.trace);
    if (l < best_objective) {
      best_objective = l;
      best = std::move(res);
    }
  }

  ClusteringModel model;
  model.centroids = std::move(best.centroids);
  model.assignments = std::move(best.assignments);
  model.objective_trace = std::move(best.trace);
  model.cluster_sizes = detail::cluster_sizes(model.assignments, model.k());
  model.global_mean = column_means(points);
  model.objective = kmeans_objective(points, model.centroids, model.assignments);
  model.variance_explained = variance_explained(model, points);
  return model;
}

struct KSelectionConfig {
  double variance_threshold = 0.9;
  std::size_t max_k = 10;
  // Smallest k tried. Setting 1 together with max_k = 1 forces one cluster.
  std::size_t min_k = 2;
  KMeansConfig kmeans;

  void validate() const {
    if (!(variance_threshold >= 0.0 && variance_threshold < 1.0))
      throw std::invalid_argument("KSelectionConfig: variance_threshold must lie in [0,1)");
    if (min_k < 1) throw std::invalid_argument("KSelectionConfig: min_k must be >= 1");
    if (max_k < min_k) throw std::invalid_argument("KSelectionConfig: max_k must be >= min_k");
    kmeans.validate();
  }
};

struct KCandidate {
  std::size_t k;
  double variance_explained;
  double objective;
};

struct KSelection {
  ClusteringModel model;
  // False when no k up to max_k exceeded the threshold; `model` is then the
  // last candidate tried.
  bool threshold_met = false;
  std::vector<KCandidate> candidates;
};

// Tries k = min_k, min_k + 1, ... and stops at the first model whose
// fraction of variance explained exceeds the threshold. The run for k uses
// seed derive_seed(cfg.kmeans.seed, k).
inline KSelection select_k(const Matrix& points, const KSelectionConfig& cfg) {
  cfg.validate();
  if (points.rows() < 2) throw std::invalid_argument("select_k: need at least 2 points");
  KSelection sel;
  const std::size_t last = std::min(cfg.max_k, points.rows());
  for (std::size_t k = std::min(cfg.min_k, last); k <= last; ++k) {
    KMeansConfig kc = cfg.kmeans;
    kc.seed = derive_seed(cfg.kmeans.seed, k);
    sel.model = kmeans(points, k, kc);
    sel.candidates.push_back({k, sel.model.variance_explained, sel.model.objective});
    if (sel.model.variance_explained > cfg.variance_threshold) {
      sel.threshold_met = true;
      break;
    }
  }
  return sel;
}

}  // namespace icqr
