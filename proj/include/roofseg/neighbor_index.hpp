#pragma once

#include <vector>

#include "roofseg/types.hpp"

namespace roofseg {

/// Static kd-tree over a point cloud with exact k-nearest and radius queries.
/// Immutable after construction; concurrent read queries are safe.
///
/// Ties at equal distance resolve to the lower point index, except that the
/// by-index k-NN overload ranks the query point itself first, so the self
/// point is always a member of its own k-NN for k >= 1.
class NeighborIndex {
 public:
  explicit NeighborIndex(const PointCloud& cloud);

  std::size_t size() const { return points_.size(); }

  /// k nearest neighbors of an arbitrary position, nearest first.
  /// Returns min(k, size()) indices.
  std::vector<int> knn(const Vec3& query, int k) const;

  /// k nearest neighbors of point i (contains i itself).
  std::vector<int> knn(int i, int k) const;

  /// All points within distance <= r of the query, nearest first.
  std::vector<int> radius(const Vec3& query, double r) const;

 private:
  struct Node {
    Vec3 lo = Vec3::Zero();  // bounding box of the points below this node
    Vec3 hi = Vec3::Zero();
    int axis = -1;           // -1 marks a leaf
    int left = -1;
    int right = -1;
    int begin = 0;           // leaf range into order_
    int end = 0;
  };

  int build(int begin, int end);
  std::vector<int> knn_impl(const Vec3& query, int k, int self) const;
  static double box_distance2(const Node& node, const Vec3& query);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace roofseg
