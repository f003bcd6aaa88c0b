#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace roofseg {

using Vec3 = Eigen::Vector3d;

/// Sentinel instance id for points not assigned to any plane.
inline constexpr int kNoise = -1;

/// Bad argument values, malformed configuration, or violated preconditions.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem and parse failures. The CLI maps this to exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Set of 3D points in meters with optional per-point unit normals.
/// Instances are immutable once loaded/built and safe to share across threads.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit vector per point
  std::string id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

/// Per-point instance assignment; kNoise marks unassigned points.
/// Ids are semantics-free: any bijective relabeling denotes the same
/// segmentation.
struct InstanceLabeling {
  std::vector<int> labels;

  InstanceLabeling() = default;
  explicit InstanceLabeling(std::vector<int> l) : labels(std::move(l)) {}

  std::size_t size() const { return labels.size(); }
  int operator[](std::size_t i) const { return labels[i]; }
  int& operator[](std::size_t i) { return labels[i]; }
  bool operator==(const InstanceLabeling&) const = default;
};

}  // namespace roofseg
