#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roofseg/config.hpp"
#include "roofseg/superpoints.hpp"

namespace roofseg {

/// Geometric mean of the IoU-aware score and the mask confidence. Ranking by
/// the fused score is the only instance filter; no non-maximum suppression.
double fuse_scores(double s, double ms);

struct ScoredInstance {
  int id = 0;
  double s = 1.0;
  double ms = 1.0;
  double fused = 1.0;
};

/// Sidecar format: one "id S mS" triple per line.
std::vector<ScoredInstance> load_score_sidecar(const std::filesystem::path& path);
void save_score_sidecar(std::span<const ScoredInstance> scores,
                        const std::filesystem::path& path);

/// Descending fused score; equal scores order by ascending id.
std::vector<ScoredInstance> rank_by_fused(std::vector<ScoredInstance> scores);

struct InferenceFloors {
  double t_dist = 0.01;
  double t_norm = 0.02;
};

/// Infers region-growing thresholds from the already-segmented instances:
/// fits each instance and takes the maximum member perpendicular distance and
/// the maximum member normal cosine distance across instances, clamped up to
/// the floors. k_growth / min_region carry over from `base`. Throws when no
/// instance with >= 3 non-degenerate members exists.
GrowthParams infer_growth_params(const PointCloud& cloud, const std::vector<Vec3>& normals,
                                 const InstanceLabeling& labeling, const GrowthParams& base,
                                 const InferenceFloors& floors = {});

struct CompletionResult {
  InstanceLabeling labeling;
  bool completed = false;  // false when parameter inference failed
  std::string warning;     // set when completed is false
  GrowthParams inferred;   // meaningful when completed
  int new_instances = 0;
};

/// Plane completion: dissolves instances below min_points, infers growth
/// parameters from the survivors, region-grows over the remaining NOISE
/// points, and appends recovered regions under fresh instance ids. Surviving
/// instance memberships are never modified. If inference fails the input
/// labeling comes back unchanged with a warning.
CompletionResult complete_planes(const PointCloud& cloud, const NeighborIndex& index,
                                 const std::vector<Vec3>& normals,
                                 const InstanceLabeling& labeling, int min_points,
                                 const GrowthParams& base, const InferenceFloors& floors = {});

/// Single-pass boundary refinement: planes are fitted once from the input
/// labeling and boundary points move to the candidate plane minimizing the
/// composite distance. Suited to labelings whose plane main bodies are
/// already well segmented.
InstanceLabeling refine_boundaries_fast(const PointCloud& cloud, const NeighborIndex& index,
                                        const std::vector<Vec3>& normals,
                                        const InstanceLabeling& labeling, double lambda, int k_b);

struct PipelineResult {
  InstanceLabeling raw;        // built-in segmenter output or ingested labels
  InstanceLabeling completed;  // after plane completion
  InstanceLabeling refined;    // after fast boundary refinement (final)
  std::vector<std::string> warnings;
};

/// Full postprocessing pipeline: built-in coarse segmenter (or externally
/// supplied labels), then plane completion, then fast boundary refinement.
PipelineResult run_pipeline(const PointCloud& cloud, const RunConfig& config,
                            const std::optional<InstanceLabeling>& external_labels = {});

}  // namespace roofseg
