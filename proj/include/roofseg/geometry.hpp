#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "roofseg/neighbor_index.hpp"
#include "roofseg/types.hpp"

namespace roofseg {

/// Plane {p : normal.dot(p) + offset = 0} together with the member set it was
/// fitted from and the thresholds those members realize: t_dist is the largest
/// member perpendicular distance, t_norm the largest member normal cosine
/// distance (unset when no normals were available).
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::vector<int> support;
  double t_dist = 0.0;
  std::optional<double> t_norm;

  double distance_to(const Vec3& p) const { return std::abs(normal.dot(p) + offset); }

  /// Orientation-free cosine distance 1 - |n . normal|, in [0, 1].
  double normal_distance_to(const Vec3& unit_normal) const {
    return 1.0 - std::min(1.0, std::abs(normal.dot(unit_normal)));
  }
};

struct NormalField {
  std::vector<Vec3> normals;   // unit length, sign-canonicalized
  std::vector<char> reliable;  // 0 where the neighborhood covariance had rank < 2
};

/// Flips the sign so z is nonnegative; ties fall back to y, then x.
Vec3 canonical_normal_sign(const Vec3& n);

/// Per-point normal from the smallest covariance eigenvector of the k nearest
/// neighbors. Degenerate neighborhoods are flagged unreliable but still get
/// the solver's canonicalized eigenvector.
NormalField estimate_normals(const PointCloud& cloud, const NeighborIndex& index, int k);

/// Total-least-squares plane over the given member indices, via eigen
/// decomposition of the member covariance. Throws on fewer than 3 members or
/// a collinear/coincident member set. When `normals` is null, the cloud's own
/// normals are used for t_norm if present.
PlaneModel fit_plane(const PointCloud& cloud, std::span<const int> indices,
                     const std::vector<Vec3>* normals = nullptr);

/// lambda * point_to_plane + normal_to_normal. lambda must be positive;
/// values > 1 weight the (more robust) perpendicular term up.
double composite_distance(double point_to_plane, double normal_to_normal, double lambda);

/// Least-squares plane of every non-noise instance with >= 3 members, keyed
/// by instance id. Instances with degenerate member sets are omitted.
std::map<int, PlaneModel> fit_planes_per_instance(const PointCloud& cloud,
                                                  const InstanceLabeling& labeling,
                                                  const std::vector<Vec3>* normals = nullptr);

}  // namespace roofseg
