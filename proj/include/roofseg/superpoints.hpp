#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roofseg/features.hpp"
#include "roofseg/geometry.hpp"

namespace roofseg {

/// Admission thresholds and mechanics for plane region growing.
struct GrowthParams {
  double t_dist = 0.05;   // max perpendicular distance to the region plane, meters
  double t_norm = 0.1;    // max normal cosine distance to the region plane
  int k_growth = 16;      // expansion neighborhood size
  int min_region = 10;    // regions smaller than this dissolve to NOISE
  int refit_period = 32;  // plane refit cadence, in admissions

  void validate() const;
};

/// Disjoint cover of all point indices by superpoints.
struct SuperpointPartition {
  enum class Stage { kCoarse, kFine };

  std::vector<std::vector<int>> groups;  // pairwise disjoint, no empties, full cover
  std::vector<int> noise_group_ids;      // indices of groups originating from NOISE
  Stage stage = Stage::kCoarse;

  std::size_t total_points() const;
  bool is_noise_group(int gid) const;
};

/// Sequential plane segmentation. Seeds are taken in descending planarity
/// order (index tie-break); regions expand breadth-first over the k_growth
/// neighborhood, admitting a point iff its perpendicular distance to the
/// current region plane is <= t_dist and its normal cosine distance is
/// <= t_norm. The plane is refitted every refit_period admissions. Regions
/// below min_region dissolve to NOISE. When candidate_mask is given, only
/// masked points seed or join regions; everything else stays NOISE.
InstanceLabeling region_grow(const PointCloud& cloud, const NeighborIndex& index,
                             const std::vector<Vec3>& normals, const GrowthParams& params,
                             const std::vector<char>* candidate_mask = nullptr);

/// Iterative local boundary refinement. A non-noise point is a boundary point
/// iff its k_b neighborhood contains a different non-noise label; each
/// boundary point moves to the candidate label (its own included) whose fitted
/// plane minimizes the composite distance. Planes are refitted from the
/// updated labeling between iterations. Noise points and non-boundary points
/// never change.
InstanceLabeling refine_boundaries_local(const PointCloud& cloud, const NeighborIndex& index,
                                         const std::vector<Vec3>& normals,
                                         const InstanceLabeling& labeling, double lambda, int k_b,
                                         int iters);

/// Stage 1: region growing plus local boundary refinement. Each surviving
/// region becomes one coarse group; NOISE points are collected into a single
/// designated noise group.
SuperpointPartition make_coarse(const PointCloud& cloud, const NeighborIndex& index,
                                const std::vector<Vec3>& normals, const GrowthParams& params,
                                double lambda, int k_b, int refine_iters);

/// Lloyd k-means over the 3D coordinates of the given points with
/// deterministic k-means++ seeding. Empty clusters are repaired by splitting
/// the largest cluster; exactly k non-empty clusters come back (as index sets
/// into the cloud). Throws when k < 1 or k > |points|.
std::vector<std::vector<int>> kmeans_split(const PointCloud& cloud,
                                           std::span<const int> point_indices, int k,
                                           std::uint64_t seed);

/// Stage 2: size equalization. Each non-noise coarse group of size m is split
/// into ceil(m / n) clusters when m > n, otherwise into ceil(m / 2) clusters;
/// the noise group is split into 2 * ceil(|NOISE| / n) clusters (capped at its
/// size). The result refines the coarse partition.
SuperpointPartition make_fine(const PointCloud& cloud, const SuperpointPartition& coarse, int n,
                              std::uint64_t seed);

struct ShapeStats {
  std::vector<double> elongation;  // per-group l1/l2, +inf for degenerate groups
  double mean = 0.0;               // over finite values
  double median = 0.0;
};

struct QualityReport {
  double boundary_purity = 0.0;  // size-weighted mean of each group's dominant label share
  double size_cv = 0.0;          // coefficient of variation of group sizes
  ShapeStats shape;
};

/// Quality metrics operationalizing the two superpoint criteria: label purity
/// for "accurate boundaries", size CV and PCA elongation for "consistent size
/// and shape". Ground-truth NOISE counts as its own category.
QualityReport superpoint_quality(const PointCloud& cloud, const SuperpointPartition& partition,
                                 const InstanceLabeling& gt);

/// Groups a labeling into a partition: one group per instance id (ascending)
/// plus, when present, one trailing noise group.
SuperpointPartition partition_from_labeling(const InstanceLabeling& labeling,
                                            SuperpointPartition::Stage stage);

/// Group id per point, the export format of a partition.
std::vector<int> group_ids_per_point(const SuperpointPartition& partition);

}  // namespace roofseg
