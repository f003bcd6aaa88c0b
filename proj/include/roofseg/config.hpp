#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "roofseg/types.hpp"

namespace roofseg {

/// Every pipeline tunable with its default. Loads from "key = value" files
/// ('#' starts a comment); unknown keys are rejected and every value is
/// range-checked with the offending field named in the error.
struct RunConfig {
  // neighborhood sizes
  int normals_k = 16;   // normal estimation, >= 3
  int features_k = 16;  // PCA features, >= 3
  int contour_k = 16;   // contour gap, >= 4
  double tau = 1.5707963267948966;  // contour threshold, radians, in (0, 2*pi)

  // region growing
  double t_dist = 0.05;
  double t_norm = 0.1;
  int k_growth = 16;
  int min_region = 10;
  int refit_period = 32;

  // boundary refinement
  double lambda = 20.0;  // perpendicular-distance weight, > 1
  int k_b = 16;
  int local_refine_iters = 3;

  // fine superpoints
  int n_target = 100;  // desired mean points per superpoint, >= 2

  // plane completion
  int min_points = 10;        // instances below this dissolve before completion
  double t_dist_floor = 0.01;
  double t_norm_floor = 0.02;

  // evaluation
  double iou_threshold = 0.5;

  // degradation operators
  double keep_fraction = 0.5;
  double spacing = 1.0;
  double max_shift = 0.4;
  double max_offset = 0.5;
  double swap_radius = 0.5;

  // fourier-kan
  int kan_grid = 5;

  // runtime
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads

  static RunConfig load(const std::filesystem::path& path);

  /// Applies one "key = value" override; throws on unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Range-checks every field; throws ValidationError naming the field.
  void validate() const;

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;
};

}  // namespace roofseg
