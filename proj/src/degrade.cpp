#include "roofseg/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "roofseg/rng.hpp"

namespace roofseg {

DownsampleResult downsample(const PointCloud& cloud, const InstanceLabeling& labeling,
                            double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ValidationError("keep_fraction must lie in (0, 1]");
  }
  const bool has_labels = labeling.size() > 0;
  if (has_labels && labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }

  const std::size_t n = cloud.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(n)) + 0.5);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(seed);
  deterministic_shuffle(order, gen);
  order.resize(std::min(keep, n));
  std::sort(order.begin(), order.end());  // preserve original point order

  DownsampleResult out;
  out.cloud.id = cloud.id;
  out.cloud.points.reserve(order.size());
  for (int idx : order) {
    out.cloud.points.push_back(cloud.points[idx]);
    if (cloud.has_normals()) out.cloud.normals.push_back(cloud.normals[idx]);
    if (has_labels) out.labeling.labels.push_back(labeling[idx]);
  }
  return out;
}

PointCloud density_variation(const PointCloud& cloud, const InstanceLabeling& labeling,
                             const std::map<int, PlaneModel>& gt_planes, double spacing,
                             double max_shift, std::uint64_t seed) {
  if (!(spacing > 0.0)) {
    throw ValidationError("spacing must be positive");
  }
  if (!(max_shift >= 0.0 && max_shift < spacing / 2.0)) {
    throw ValidationError("max_shift must lie in [0, spacing / 2)");
  }
  const bool has_labels = labeling.size() > 0;
  if (has_labels && labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }
  if (cloud.empty()) return cloud;

  double x_min = cloud.points.front().x();
  double x_max = x_min;
  for (const Vec3& p : cloud.points) {
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
  }
  const int plane_count =
      std::max(1, static_cast<int>(std::ceil((x_max - x_min) / spacing)));

  std::mt19937_64 gen(seed);
  PointCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double delta = uniform_real(gen, 0.0, max_shift);
    const double x = cloud.points[i].x();

    // Nearest center plane; equidistant points resolve to the lower index.
    int nearest = static_cast<int>(std::floor((x - x_min) / spacing));
    nearest = std::clamp(nearest, 0, plane_count - 1);
    double best = std::abs(x - (x_min + (nearest + 0.5) * spacing));
    for (int cand : {nearest - 1, nearest + 1}) {
      if (cand < 0 || cand >= plane_count) continue;
      const double d = std::abs(x - (x_min + (cand + 0.5) * spacing));
      if (d < best || (d == best && cand < nearest)) {
        nearest = cand;
        best = d;
      }
    }
    const double center = x_min + (nearest + 0.5) * spacing;
    const double dir = center > x ? 1.0 : (center < x ? -1.0 : 0.0);

    Vec3 shift(dir * delta, 0.0, 0.0);
    const int label = has_labels ? labeling[i] : kNoise;
    if (label != kNoise) {
      const auto it = gt_planes.find(label);
      if (it != gt_planes.end()) {
        const Vec3& n = it->second.normal;
        shift -= shift.dot(n) * n;  // keep the perpendicular residual unchanged
      }
    }
    out.points[i] += shift;
  }
  return out;
}

PointCloud precision_reduction(const PointCloud& cloud, double max_offset, std::uint64_t seed) {
  if (!(max_offset >= 0.0)) {
    throw ValidationError("max_offset must be nonnegative");
  }
  std::mt19937_64 gen(seed);
  PointCloud out = cloud;
  for (Vec3& p : out.points) {
    for (int a = 0; a < 3; ++a) {
      const double magnitude = uniform_real(gen, 0.0, max_offset);
      const double sign = (gen() & 1u) ? 1.0 : -1.0;
      p[a] += sign * magnitude;
    }
  }
  return out;
}

InstanceLabeling corrupt_boundaries(const PointCloud& cloud, const NeighborIndex& index,
                                    const InstanceLabeling& labeling, double radius,
                                    std::uint64_t seed) {
  if (!(radius > 0.0)) {
    throw ValidationError("radius must be positive");
  }
  if (labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }

  // All unordered cross-plane pairs strictly closer than radius.
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labeling[i] == kNoise) continue;
    for (int j : index.radius(cloud.points[i], radius)) {
      if (j <= static_cast<int>(i)) continue;
      if (labeling[j] == kNoise || labeling[j] == labeling[i]) continue;
      if ((cloud.points[j] - cloud.points[i]).norm() >= radius) continue;
      pairs.emplace_back(static_cast<int>(i), j);
    }
  }

  std::mt19937_64 gen(seed);
  deterministic_shuffle(pairs, gen);

  // Random maximal matching: greedily keep pairs whose endpoints are unused.
  InstanceLabeling out = labeling;
  std::vector<char> used(cloud.size(), 0);
  for (const auto& [i, j] : pairs) {
    if (used[i] || used[j]) continue;
    used[i] = used[j] = 1;
    std::swap(out[i], out[j]);
  }
  return out;
}

}  // namespace roofseg
