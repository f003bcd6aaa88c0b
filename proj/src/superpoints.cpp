#include "roofseg/superpoints.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "roofseg/rng.hpp"

namespace roofseg {

void GrowthParams::validate() const {
  if (!(t_dist > 0.0)) throw ValidationError("t_dist must be positive");
  if (!(t_norm > 0.0 && t_norm <= 1.0)) throw ValidationError("t_norm must lie in (0, 1]");
  if (k_growth < 2) throw ValidationError("k_growth must be at least 2");
  if (min_region < 3) throw ValidationError("min_region must be at least 3");
  if (refit_period < 1) throw ValidationError("refit_period must be at least 1");
}

std::size_t SuperpointPartition::total_points() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

bool SuperpointPartition::is_noise_group(int gid) const {
  return std::find(noise_group_ids.begin(), noise_group_ids.end(), gid) != noise_group_ids.end();
}

namespace {

std::optional<PlaneModel> try_fit_plane(const PointCloud& cloud, std::span<const int> indices) {
  if (indices.size() < 3) return std::nullopt;
  try {
    return fit_plane(cloud, indices);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

}  // namespace

InstanceLabeling region_grow(const PointCloud& cloud, const NeighborIndex& index,
                             const std::vector<Vec3>& normals, const GrowthParams& params,
                             const std::vector<char>* candidate_mask) {
  params.validate();
  const std::size_t n = cloud.size();
  if (normals.size() != n) {
    throw ValidationError("region growing requires one normal per point");
  }
  if (candidate_mask != nullptr && candidate_mask->size() != n) {
    throw ValidationError("candidate mask length does not match cloud size");
  }
  auto is_candidate = [&](int i) {
    return candidate_mask == nullptr || (*candidate_mask)[i] != 0;
  };

  // Seed order: descending planarity, index tie-break.
  const GeometricFeatures feats = geometric_features(cloud, index, params.k_growth);
  std::vector<int> seed_order;
  seed_order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_candidate(static_cast<int>(i))) seed_order.push_back(static_cast<int>(i));
  }
  std::stable_sort(seed_order.begin(), seed_order.end(), [&](int a, int b) {
    return feats.planarity[a] > feats.planarity[b] || (feats.planarity[a] == feats.planarity[b] && a < b);
  });

  std::vector<int> assignment(n, kNoise);
  std::vector<char> visited(n, 0);  // consumed by some region, surviving or dissolved
  int next_label = 0;

  for (int seed : seed_order) {
    if (visited[seed]) continue;

    std::vector<int> members{seed};
    visited[seed] = 1;

    // Until enough members accumulate for a stable fit, the region plane is
    // the seed's own tangent plane.
    PlaneModel plane;
    plane.normal = normals[seed];
    plane.offset = -plane.normal.dot(cloud.points[seed]);

    std::deque<int> frontier{seed};
    int admissions_since_refit = 0;
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop_front();
      for (int q : index.knn(p, params.k_growth)) {
        if (visited[q] || !is_candidate(q)) continue;
        const double d = plane.distance_to(cloud.points[q]);
        const double nd = plane.normal_distance_to(normals[q]);
        if (d <= params.t_dist && nd <= params.t_norm) {
          visited[q] = 1;
          members.push_back(q);
          frontier.push_back(q);
          if (++admissions_since_refit >= params.refit_period) {
            admissions_since_refit = 0;
            if (auto refit = try_fit_plane(cloud, members)) {
              plane = std::move(*refit);
            }
          }
        }
      }
    }

    if (static_cast<int>(members.size()) >= params.min_region) {
      for (int m : members) assignment[m] = next_label;
      ++next_label;
    }
    // Dissolved members stay NOISE and are not revisited.
  }

  return InstanceLabeling(std::move(assignment));
}

namespace {

// One synchronous refinement pass against planes fitted from the given
// labeling. Only points whose k_b neighborhood holds a different non-noise
// label are reassigned.
InstanceLabeling refine_pass(const PointCloud& cloud, const NeighborIndex& index,
                             const std::vector<Vec3>& normals, const InstanceLabeling& labeling,
                             double lambda, int k_b) {
  const std::map<int, PlaneModel> planes = fit_planes_per_instance(cloud, labeling, &normals);

  InstanceLabeling out = labeling;
  std::vector<int> candidates;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    const int own = labeling[static_cast<int>(i)];
    if (own == kNoise) continue;

    const std::vector<int> nb = index.knn(static_cast<int>(i), k_b);
    candidates.clear();
    bool boundary = false;
    for (int j : nb) {
      const int lj = labeling[j];
      if (lj == kNoise) continue;
      if (lj != own) boundary = true;
      candidates.push_back(lj);
    }
    if (!boundary) continue;

    candidates.push_back(own);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const auto own_it = planes.find(own);
    if (own_it == planes.end()) continue;  // degenerate home instance: leave as is

    int best = own;
    double best_dist = composite_distance(own_it->second.distance_to(cloud.points[i]),
                                          own_it->second.normal_distance_to(normals[i]), lambda);
    for (int cand : candidates) {
      if (cand == own) continue;
      const auto it = planes.find(cand);
      if (it == planes.end()) continue;
      const double dist = composite_distance(it->second.distance_to(cloud.points[i]),
                                             it->second.normal_distance_to(normals[i]), lambda);
      if (dist < best_dist || (dist == best_dist && cand < best && best != own)) {
        best = cand;
        best_dist = dist;
      }
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

InstanceLabeling refine_boundaries_local(const PointCloud& cloud, const NeighborIndex& index,
                                         const std::vector<Vec3>& normals,
                                         const InstanceLabeling& labeling, double lambda, int k_b,
                                         int iters) {
  if (labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }
  if (k_b < 1) throw ValidationError("k_b must be at least 1");
  if (iters < 1) throw ValidationError("refinement iteration count must be at least 1");

  InstanceLabeling current = labeling;
  for (int it = 0; it < iters; ++it) {
    InstanceLabeling next = refine_pass(cloud, index, normals, current, lambda, k_b);
    const bool converged = next == current;
    current = std::move(next);
    if (converged) break;
  }
  return current;
}

SuperpointPartition make_coarse(const PointCloud& cloud, const NeighborIndex& index,
                                const std::vector<Vec3>& normals, const GrowthParams& params,
                                double lambda, int k_b, int refine_iters) {
  InstanceLabeling grown = region_grow(cloud, index, normals, params);
  bool any_instance = false;
  for (int l : grown.labels) any_instance |= (l != kNoise);
  if (any_instance) {
    grown = refine_boundaries_local(cloud, index, normals, grown, lambda, k_b, refine_iters);
  }
  return partition_from_labeling(grown, SuperpointPartition::Stage::kCoarse);
}

SuperpointPartition partition_from_labeling(const InstanceLabeling& labeling,
                                            SuperpointPartition::Stage stage) {
  std::map<int, std::vector<int>> by_label;
  std::vector<int> noise;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    if (labeling[i] == kNoise) {
      noise.push_back(static_cast<int>(i));
    } else {
      by_label[labeling[i]].push_back(static_cast<int>(i));
    }
  }
  SuperpointPartition partition;
  partition.stage = stage;
  for (auto& [label, members] : by_label) {
    partition.groups.push_back(std::move(members));
  }
  if (!noise.empty()) {
    partition.noise_group_ids.push_back(static_cast<int>(partition.groups.size()));
    partition.groups.push_back(std::move(noise));
  }
  return partition;
}

std::vector<int> group_ids_per_point(const SuperpointPartition& partition) {
  std::vector<int> ids(partition.total_points(), -1);
  for (std::size_t g = 0; g < partition.groups.size(); ++g) {
    for (int idx : partition.groups[g]) {
      if (idx < 0 || idx >= static_cast<int>(ids.size()) || ids[idx] != -1) {
        throw std::logic_error("partition is not a disjoint cover of point indices");
      }
      ids[idx] = static_cast<int>(g);
    }
  }
  return ids;
}

std::vector<std::vector<int>> kmeans_split(const PointCloud& cloud,
                                           std::span<const int> point_indices, int k,
                                           std::uint64_t seed) {
  const int m = static_cast<int>(point_indices.size());
  if (k < 1) throw ValidationError("kmeans cluster count must be at least 1");
  if (k > m) {
    throw ValidationError("kmeans cluster count " + std::to_string(k) + " exceeds point count " +
                          std::to_string(m));
  }
  if (k == 1) {
    return {std::vector<int>(point_indices.begin(), point_indices.end())};
  }

  std::mt19937_64 gen(seed);
  auto point = [&](int local) -> const Vec3& { return cloud.points[point_indices[local]]; };

  // k-means++ seeding with deterministic draws.
  std::vector<Vec3> centers;
  centers.reserve(k);
  std::vector<char> chosen(m, 0);
  {
    const int first = static_cast<int>(uniform_index(gen, m));
    centers.push_back(point(first));
    chosen[first] = 1;
    std::vector<double> d2(m);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& center : centers) {
          best = std::min(best, (point(i) - center).squaredNorm());
        }
        d2[i] = chosen[i] ? 0.0 : best;
        total += d2[i];
      }
      int pick = -1;
      if (total > 0.0) {
        const double target = uniform01(gen) * total;
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
          acc += d2[i];
          if (acc > target) {
            pick = i;
            break;
          }
        }
        if (pick < 0) {  // numeric edge at target ~ total
          for (int i = m - 1; i >= 0; --i) {
            if (d2[i] > 0.0) {
              pick = i;
              break;
            }
          }
        }
      }
      if (pick < 0) {  // all remaining points coincide with chosen centers
        for (int i = 0; i < m; ++i) {
          if (!chosen[i]) {
            pick = i;
            break;
          }
        }
      }
      centers.push_back(point(pick));
      chosen[pick] = 1;
    }
  }

  std::vector<int> assign(m, -1);
  std::vector<int> sizes(k, 0);
  constexpr int kMaxIters = 100;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    bool changed = false;
    std::fill(sizes.begin(), sizes.end(), 0);
    for (int i = 0; i < m; ++i) {
      int best = 0;
      double best_d2 = (point(i) - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (point(i) - centers[c]).squaredNorm();
        if (d2 < best_d2) {
          best = c;
          best_d2 = d2;
        }
      }
      changed |= (assign[i] != best);
      assign[i] = best;
      ++sizes[best];
    }

    // Repair empty clusters: peel the farthest point off the largest cluster.
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) -
                                     sizes.begin());
      int move = -1;
      double worst = -1.0;
      for (int i = 0; i < m; ++i) {
        if (assign[i] != largest) continue;
        const double d2 = (point(i) - centers[largest]).squaredNorm();
        if (d2 > worst) {
          worst = d2;
          move = i;
        }
      }
      assign[move] = c;
      --sizes[largest];
      ++sizes[c];
      centers[c] = point(move);
      changed = true;
    }

    if (!changed && iter > 0) break;

    for (int c = 0; c < k; ++c) centers[c] = Vec3::Zero();
    for (int i = 0; i < m; ++i) centers[assign[i]] += point(i);
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) centers[c] /= static_cast<double>(sizes[c]);
    }
  }

  std::vector<std::vector<int>> clusters(k);
  for (int i = 0; i < m; ++i) {
    clusters[assign[i]].push_back(point_indices[i]);
  }
  return clusters;
}

SuperpointPartition make_fine(const PointCloud& cloud, const SuperpointPartition& coarse, int n,
                              std::uint64_t seed) {
  if (n < 2) throw ValidationError("target superpoint size n_target must be at least 2");

  SuperpointPartition fine;
  fine.stage = SuperpointPartition::Stage::kFine;

  for (std::size_t g = 0; g < coarse.groups.size(); ++g) {
    const auto& group = coarse.groups[g];
    const int m = static_cast<int>(group.size());
    if (m == 0) continue;
    const bool is_noise = coarse.is_noise_group(static_cast<int>(g));

    int k = 0;
    if (is_noise) {
      // NOISE splits at twice the cluster count so each piece is smaller and
      // less likely to mix plane remnants with true noise.
      const int k_prime = (m + n - 1) / n;
      k = std::min(m, 2 * k_prime);
    } else if (m > n) {
      k = (m + n - 1) / n;
    } else {
      k = (m + 1) / 2;
    }
    k = std::max(1, k);

    auto clusters = kmeans_split(cloud, group, k, derive_seed(seed, g));
    for (auto& cluster : clusters) {
      if (is_noise) {
        fine.noise_group_ids.push_back(static_cast<int>(fine.groups.size()));
      }
      fine.groups.push_back(std::move(cluster));
    }
  }
  return fine;
}

QualityReport superpoint_quality(const PointCloud& cloud, const SuperpointPartition& partition,
                                 const InstanceLabeling& gt) {
  if (gt.size() != cloud.size()) {
    throw ValidationError("ground-truth labeling length does not match cloud size");
  }
  QualityReport report;
  if (partition.groups.empty()) return report;

  double weighted_purity = 0.0;
  std::size_t total = 0;
  for (const auto& group : partition.groups) {
    std::map<int, int> counts;
    for (int idx : group) ++counts[gt[idx]];
    int dominant = 0;
    for (const auto& [label, c] : counts) dominant = std::max(dominant, c);
    weighted_purity += static_cast<double>(dominant);
    total += group.size();
  }
  report.boundary_purity = weighted_purity / static_cast<double>(total);

  double mean = 0.0;
  for (const auto& group : partition.groups) mean += static_cast<double>(group.size());
  mean /= static_cast<double>(partition.groups.size());
  double var = 0.0;
  for (const auto& group : partition.groups) {
    const double d = static_cast<double>(group.size()) - mean;
    var += d * d;
  }
  var /= static_cast<double>(partition.groups.size());
  report.size_cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;

  std::vector<double> finite;
  for (const auto& group : partition.groups) {
    Vec3 centroid = Vec3::Zero();
    for (int idx : group) centroid += cloud.points[idx];
    centroid /= static_cast<double>(group.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int idx : group) {
      const Vec3 d = cloud.points[idx] - centroid;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(group.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const double l1 = solver.eigenvalues()[2];
    const double l2 = solver.eigenvalues()[1];
    // groups that are numerically rank-1 (or single points) count as
    // degenerate rather than polluting the stats with 1e15-scale ratios
    const double elong = l2 > 1e-12 * std::max(l1, 1e-300)
                             ? l1 / l2
                             : std::numeric_limits<double>::infinity();
    report.shape.elongation.push_back(elong);
    if (std::isfinite(elong)) finite.push_back(elong);
  }
  if (!finite.empty()) {
    report.shape.mean = std::accumulate(finite.begin(), finite.end(), 0.0) /
                        static_cast<double>(finite.size());
    std::sort(finite.begin(), finite.end());
    report.shape.median = finite[finite.size() / 2];
  }
  return report;
}

}  // namespace roofseg
