#pragma once

#include <vector>

#include "roofseg/geometry.hpp"

namespace roofseg {

/// Per-point dimensionality features from the sorted covariance eigenvalues
/// l1 >= l2 >= l3 of the k-neighborhood:
///   linearity  = (l1 - l2) / l1
///   planarity  = (l2 - l3) / l1
///   scattering = l3 / l1
/// plus verticality = 1 - |n_z| of the neighborhood normal. The three
/// dimensionality values sum to 1; coincident neighborhoods yield all zeros.
struct GeometricFeatures {
  std::vector<double> linearity;
  std::vector<double> planarity;
  std::vector<double> scattering;
  std::vector<double> verticality;
};

GeometricFeatures geometric_features(const PointCloud& cloud, const NeighborIndex& index, int k);

/// Per-point maximum circular angular gap between tangent-plane-projected
/// neighbor directions. The gap sequence is circular (includes wrap-around),
/// so the gaps always sum to 2*pi. Points with fewer than 2 usable projected
/// vectors get max_gap_angle = 2*pi and count as contour.
struct ContourFeature {
  std::vector<double> max_gap_angle;  // alpha, in [0, 2*pi]
  std::vector<char> is_contour;       // alpha > tau
};

ContourFeature contour_feature(const PointCloud& cloud, const NeighborIndex& index, int k,
                               double tau);

/// One row per point: linearity, planarity, scattering, verticality,
/// alpha / (2*pi), contour flag. This is the exported feature table layout.
std::vector<std::array<double, 6>> feature_table(const PointCloud& cloud,
                                                 const NeighborIndex& index, int k,
                                                 int contour_k, double tau);

}  // namespace roofseg
