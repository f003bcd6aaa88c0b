#include "roofseg/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "roofseg/io.hpp"

namespace roofseg {

double fuse_scores(double s, double ms) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ValidationError("IoU-aware score S must lie in [0, 1]");
  }
  if (!(ms >= 0.0 && ms <= 1.0)) {
    throw ValidationError("mask confidence mS must lie in [0, 1]");
  }
  return std::sqrt(s * ms);
}

std::vector<ScoredInstance> load_score_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open score sidecar " + path.string());
  }
  std::vector<ScoredInstance> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    ScoredInstance entry;
    if (!(ls >> entry.id >> entry.s >> entry.ms)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected 'id S mS' triple");
    }
    entry.fused = fuse_scores(entry.s, entry.ms);
    scores.push_back(entry);
  }
  return scores;
}

void save_score_sidecar(std::span<const ScoredInstance> scores,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write score sidecar " + path.string());
  }
  for (const ScoredInstance& entry : scores) {
    out << entry.id << ' ' << format_double(entry.s) << ' ' << format_double(entry.ms) << '\n';
  }
}

std::vector<ScoredInstance> rank_by_fused(std::vector<ScoredInstance> scores) {
  std::sort(scores.begin(), scores.end(), [](const ScoredInstance& a, const ScoredInstance& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    return a.id < b.id;
  });
  return scores;
}

GrowthParams infer_growth_params(const PointCloud& cloud, const std::vector<Vec3>& normals,
                                 const InstanceLabeling& labeling, const GrowthParams& base,
                                 const InferenceFloors& floors) {
  const std::map<int, PlaneModel> planes = fit_planes_per_instance(cloud, labeling, &normals);
  if (planes.empty()) {
    throw ValidationError("cannot infer parameters: no instance with enough non-degenerate points");
  }

  double t_dist = 0.0;
  double t_norm = 0.0;
  for (const auto& [label, plane] : planes) {
    t_dist = std::max(t_dist, plane.t_dist);
    if (plane.t_norm.has_value()) t_norm = std::max(t_norm, *plane.t_norm);
  }

  GrowthParams inferred = base;
  inferred.t_dist = std::max(t_dist, floors.t_dist);
  inferred.t_norm = std::max(t_norm, floors.t_norm);
  return inferred;
}

CompletionResult complete_planes(const PointCloud& cloud, const NeighborIndex& index,
                                 const std::vector<Vec3>& normals,
                                 const InstanceLabeling& labeling, int min_points,
                                 const GrowthParams& base, const InferenceFloors& floors) {
  if (labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }
  if (min_points < 1) {
    throw ValidationError("min_points must be at least 1");
  }

  // Likely false detections: dissolve instances with too few points.
  std::map<int, int> counts;
  for (int l : labeling.labels) {
    if (l != kNoise) ++counts[l];
  }
  InstanceLabeling pruned = labeling;
  for (int& l : pruned.labels) {
    if (l != kNoise && counts[l] < min_points) l = kNoise;
  }

  CompletionResult result;
  try {
    result.inferred = infer_growth_params(cloud, normals, pruned, base, floors);
  } catch (const ValidationError& err) {
    result.labeling = labeling;
    result.completed = false;
    result.warning = std::string("plane completion skipped: ") + err.what();
    return result;
  }

  std::vector<char> candidate(cloud.size(), 0);
  for (std::size_t i = 0; i < pruned.size(); ++i) {
    candidate[i] = pruned[i] == kNoise ? 1 : 0;
  }
  const InstanceLabeling grown = region_grow(cloud, index, normals, result.inferred, &candidate);

  // fresh ids sit above every existing id and never collide with kNoise,
  // even for external labelings with ids below -1
  int fresh = 0;
  for (int l : pruned.labels) {
    if (l != kNoise) fresh = std::max(fresh, l + 1);
  }

  result.labeling = pruned;
  int max_new = -1;
  for (std::size_t i = 0; i < grown.size(); ++i) {
    if (grown[i] != kNoise) {
      result.labeling[i] = fresh + grown[i];
      max_new = std::max(max_new, grown[i]);
    }
  }
  result.new_instances = max_new + 1;
  result.completed = true;
  return result;
}

InstanceLabeling refine_boundaries_fast(const PointCloud& cloud, const NeighborIndex& index,
                                        const std::vector<Vec3>& normals,
                                        const InstanceLabeling& labeling, double lambda,
                                        int k_b) {
  // The fast variant is the shared refinement routine run for exactly one
  // pass: planes are fitted once from the input labeling and never refitted.
  return refine_boundaries_local(cloud, index, normals, labeling, lambda, k_b, 1);
}

PipelineResult run_pipeline(const PointCloud& cloud, const RunConfig& config,
                            const std::optional<InstanceLabeling>& external_labels) {
  config.validate();
  if (cloud.empty()) {
    throw ValidationError("pipeline input cloud is empty");
  }
  if (external_labels.has_value() && external_labels->size() != cloud.size()) {
    throw ValidationError("external labeling length " + std::to_string(external_labels->size()) +
                          " does not match cloud size " + std::to_string(cloud.size()));
  }

  const NeighborIndex index(cloud);
  std::vector<Vec3> normals;
  if (cloud.has_normals()) {
    normals = cloud.normals;
  } else {
    normals = estimate_normals(cloud, index, config.normals_k).normals;
  }

  GrowthParams params{config.t_dist, config.t_norm, config.k_growth, config.min_region,
                      config.refit_period};

  PipelineResult result;
  if (external_labels.has_value()) {
    result.raw = *external_labels;
  } else {
    const InstanceLabeling grown = region_grow(cloud, index, normals, params);
    bool any_instance = false;
    for (int l : grown.labels) any_instance |= (l != kNoise);
    result.raw = any_instance
                     ? refine_boundaries_local(cloud, index, normals, grown, config.lambda,
                                               config.k_b, config.local_refine_iters)
                     : grown;
  }

  CompletionResult completion =
      complete_planes(cloud, index, normals, result.raw, config.min_points, params,
                      {config.t_dist_floor, config.t_norm_floor});
  result.completed = std::move(completion.labeling);
  if (!completion.completed) {
    result.warnings.push_back(completion.warning);
  }

  bool any_instance = false;
  for (int l : result.completed.labels) any_instance |= (l != kNoise);
  result.refined = any_instance
                       ? refine_boundaries_fast(cloud, index, normals, result.completed,
                                                config.lambda, config.k_b)
                       : result.completed;
  return result;
}

}  // namespace roofseg
