#pragma once

#include <cstdint>
#include <map>

#include "roofseg/geometry.hpp"
#include "roofseg/neighbor_index.hpp"
#include "roofseg/types.hpp"

namespace roofseg {

// Dataset degradation operators for robustness studies. Every operator is a
// pure function of (inputs, seed): downsample and corrupt_boundaries never
// alter coordinates; density_variation and precision_reduction never alter
// labels or point count.

struct DownsampleResult {
  PointCloud cloud;
  InstanceLabeling labeling;  // empty when the input labeling was empty
};

/// Keeps a uniformly random subset of exactly ceil(keep_fraction * N) points,
/// carrying labels along and preserving point order.
DownsampleResult downsample(const PointCloud& cloud, const InstanceLabeling& labeling,
                            double keep_fraction, std::uint64_t seed);

/// Concentrates points toward evenly spaced center planes parallel to the YZ
/// plane (spacing along x, first center at x_min + spacing / 2). Each point
/// moves toward its nearest center plane by a uniform draw from
/// [0, max_shift]; for labeled points the shift is projected onto their
/// ground-truth plane first, so perpendicular residuals are untouched. NOISE
/// points shift along x only.
PointCloud density_variation(const PointCloud& cloud, const InstanceLabeling& labeling,
                             const std::map<int, PlaneModel>& gt_planes, double spacing,
                             double max_shift, std::uint64_t seed);

/// Perturbs every coordinate of every point by an independent uniform
/// magnitude in [0, max_offset] with an independent random sign.
PointCloud precision_reduction(const PointCloud& cloud, double max_offset, std::uint64_t seed);

/// Swaps the labels of a random maximal set of disjoint pairs of points that
/// carry distinct non-noise labels and lie strictly closer than radius.
/// Per-label point counts are preserved exactly.
InstanceLabeling corrupt_boundaries(const PointCloud& cloud, const NeighborIndex& index,
                                    const InstanceLabeling& labeling, double radius,
                                    std::uint64_t seed);

}  // namespace roofseg
