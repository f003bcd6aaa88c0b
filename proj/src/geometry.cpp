#include "roofseg/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace roofseg {

namespace {

constexpr double kSignTie = 1e-12;

Eigen::Matrix3d neighborhood_covariance(const PointCloud& cloud, std::span<const int> indices) {
  Vec3 centroid = Vec3::Zero();
  for (int idx : indices) centroid += cloud.points[idx];
  centroid /= static_cast<double>(indices.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int idx : indices) {
    const Vec3 d = cloud.points[idx] - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(indices.size());
  return cov;
}

}  // namespace

Vec3 canonical_normal_sign(const Vec3& n) {
  if (n.z() > kSignTie) return n;
  if (n.z() < -kSignTie) return -n;
  if (n.y() > kSignTie) return n;
  if (n.y() < -kSignTie) return -n;
  return n.x() < 0.0 ? Vec3(-n) : n;
}

NormalField estimate_normals(const PointCloud& cloud, const NeighborIndex& index, int k) {
  if (k < 3) {
    throw ValidationError("normal estimation requires k >= 3");
  }
  const std::size_t n = cloud.size();
  NormalField field;
  field.normals.resize(n);
  field.reliable.assign(n, 1);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int> nb = index.knn(static_cast<int>(i), k);
    const Eigen::Matrix3d cov = neighborhood_covariance(cloud, nb);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 ev = solver.eigenvalues();  // ascending
    Vec3 normal = solver.eigenvectors().col(0);
    if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300)) || !(ev[2] > 0.0)) {
      field.reliable[i] = 0;
    }
    field.normals[i] = canonical_normal_sign(normal.normalized());
  }
  return field;
}

PlaneModel fit_plane(const PointCloud& cloud, std::span<const int> indices,
                     const std::vector<Vec3>* normals) {
  if (indices.size() < 3) {
    throw ValidationError("plane fit requires at least 3 points, got " +
                          std::to_string(indices.size()));
  }
  const Eigen::Matrix3d cov = neighborhood_covariance(cloud, indices);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Vec3 ev = solver.eigenvalues();
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
    throw ValidationError("plane fit is degenerate: member points are collinear or coincident");
  }

  Vec3 centroid = Vec3::Zero();
  for (int idx : indices) centroid += cloud.points[idx];
  centroid /= static_cast<double>(indices.size());

  PlaneModel plane;
  plane.normal = canonical_normal_sign(Vec3(solver.eigenvectors().col(0)).normalized());
  plane.offset = -plane.normal.dot(centroid);
  plane.support.assign(indices.begin(), indices.end());
  std::sort(plane.support.begin(), plane.support.end());

  double max_dist = 0.0;
  for (int idx : indices) {
    max_dist = std::max(max_dist, plane.distance_to(cloud.points[idx]));
  }
  plane.t_dist = max_dist;

  const std::vector<Vec3>* src = normals != nullptr ? normals
                                 : cloud.has_normals() ? &cloud.normals
                                                       : nullptr;
  if (src != nullptr) {
    double max_norm = 0.0;
    for (int idx : indices) {
      max_norm = std::max(max_norm, plane.normal_distance_to((*src)[idx]));
    }
    plane.t_norm = max_norm;
  }
  return plane;
}

double composite_distance(double point_to_plane, double normal_to_normal, double lambda) {
  if (!(lambda > 0.0)) {
    throw ValidationError("composite distance weight lambda must be positive");
  }
  return lambda * point_to_plane + normal_to_normal;
}

std::map<int, PlaneModel> fit_planes_per_instance(const PointCloud& cloud,
                                                  const InstanceLabeling& labeling,
                                                  const std::vector<Vec3>* normals) {
  if (labeling.size() != cloud.size()) {
    throw ValidationError("labeling length does not match cloud size");
  }
  std::map<int, std::vector<int>> members;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    if (labeling[i] != kNoise) {
      members[labeling[i]].push_back(static_cast<int>(i));
    }
  }
  std::map<int, PlaneModel> planes;
  for (const auto& [label, idx] : members) {
    if (idx.size() < 3) continue;
    try {
      planes.emplace(label, fit_plane(cloud, idx, normals));
    } catch (const ValidationError&) {
      // degenerate instance; leave it without a plane
    }
  }
  return planes;
}

}  // namespace roofseg
