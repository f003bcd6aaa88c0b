#include "roofseg/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace roofseg {

namespace {

constexpr int kLeafSize = 8;

// Candidate ordering: (squared distance, tie rank). The tie rank is the point
// index, remapped to -1 for the self point so it wins exact-distance ties.
struct Candidate {
  double d2;
  int rank;
  int index;

  bool operator<(const Candidate& other) const {
    return d2 < other.d2 || (d2 == other.d2 && rank < other.rank);
  }
};

}  // namespace

NeighborIndex::NeighborIndex(const PointCloud& cloud) : points_(cloud.points) {
  if (cloud.empty()) {
    throw ValidationError("cannot build a neighbor index over an empty cloud");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(order_.size()));
}

int NeighborIndex::build(int begin, int end) {
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  nodes_[node_id].lo = lo;
  nodes_[node_id].hi = hi;

  const Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;

  // extent zero means all points coincide; keep them in one leaf.
  if (end - begin <= kLeafSize || extent[axis] <= 0.0) {
    nodes_[node_id].begin = begin;
    nodes_[node_id].end = end;
    return node_id;
  }

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });

  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[node_id];
  node.axis = axis;
  node.left = left;
  node.right = right;
  return node_id;
}

double NeighborIndex::box_distance2(const Node& node, const Vec3& query) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (query[a] < node.lo[a]) {
      const double d = node.lo[a] - query[a];
      d2 += d * d;
    } else if (query[a] > node.hi[a]) {
      const double d = query[a] - node.hi[a];
      d2 += d * d;
    }
  }
  return d2;
}

std::vector<int> NeighborIndex::knn_impl(const Vec3& query, int k, int self) const {
  const int want = std::min<int>(k, static_cast<int>(points_.size()));
  if (want <= 0) return {};

  // Max-heap of the current best candidates; top is the worst kept.
  std::priority_queue<Candidate> heap;

  auto offer = [&](int idx) {
    const double d2 = (points_[idx] - query).squaredNorm();
    const Candidate c{d2, idx == self ? -1 : idx, idx};
    if (static_cast<int>(heap.size()) < want) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int node_id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[node_id];
    // Equality is not pruned: an equally distant subtree may hold a point
    // that wins the index tie-break.
    if (static_cast<int>(heap.size()) == want && box_distance2(node, query) > heap.top().d2) {
      continue;
    }
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) offer(order_[i]);
      continue;
    }
    const double dl = box_distance2(nodes_[node.left], query);
    const double dr = box_distance2(nodes_[node.right], query);
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }

  std::vector<Candidate> found;
  found.reserve(heap.size());
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  std::sort(found.begin(), found.end());
  std::vector<int> result;
  result.reserve(found.size());
  for (const Candidate& c : found) result.push_back(c.index);
  return result;
}

std::vector<int> NeighborIndex::knn(const Vec3& query, int k) const {
  if (k < 1) {
    throw ValidationError("knn requires k >= 1");
  }
  return knn_impl(query, k, -1);
}

std::vector<int> NeighborIndex::knn(int i, int k) const {
  if (i < 0 || i >= static_cast<int>(points_.size())) {
    throw ValidationError("knn point index out of range");
  }
  if (k < 1) {
    throw ValidationError("knn requires k >= 1");
  }
  return knn_impl(points_[i], k, i);
}

std::vector<int> NeighborIndex::radius(const Vec3& query, double r) const {
  if (!(r >= 0.0)) {
    throw ValidationError("radius query requires r >= 0");
  }
  const double r2 = r * r;
  std::vector<Candidate> found;

  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int node_id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[node_id];
    if (box_distance2(node, query) > r2) continue;
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 <= r2) found.push_back({d2, idx, idx});
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }

  std::sort(found.begin(), found.end());
  std::vector<int> result;
  result.reserve(found.size());
  for (const Candidate& c : found) result.push_back(c.index);
  return result;
}

}  // namespace roofseg
