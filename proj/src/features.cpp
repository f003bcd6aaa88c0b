#include "roofseg/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace roofseg {

GeometricFeatures geometric_features(const PointCloud& cloud, const NeighborIndex& index, int k) {
  if (k < 3) {
    throw ValidationError("geometric features require k >= 3");
  }
  const std::size_t n = cloud.size();
  GeometricFeatures out;
  out.linearity.resize(n);
  out.planarity.resize(n);
  out.scattering.resize(n);
  out.verticality.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int> nb = index.knn(static_cast<int>(i), k);
    Vec3 centroid = Vec3::Zero();
    for (int idx : nb) centroid += cloud.points[idx];
    centroid /= static_cast<double>(nb.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int idx : nb) {
      const Vec3 d = cloud.points[idx] - centroid;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nb.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 ev = solver.eigenvalues();  // ascending
    const double l1 = std::max(0.0, ev[2]);
    const double l2 = std::max(0.0, ev[1]);
    const double l3 = std::max(0.0, ev[0]);
    if (l1 <= 0.0) {
      out.linearity[i] = out.planarity[i] = out.scattering[i] = 0.0;
      out.verticality[i] = 0.0;
      continue;
    }
    out.linearity[i] = (l1 - l2) / l1;
    out.planarity[i] = (l2 - l3) / l1;
    out.scattering[i] = l3 / l1;
    const Vec3 normal = Vec3(solver.eigenvectors().col(0)).normalized();
    out.verticality[i] = 1.0 - std::min(1.0, std::abs(normal.z()));
  }
  return out;
}

ContourFeature contour_feature(const PointCloud& cloud, const NeighborIndex& index, int k,
                               double tau) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (k < 4) {
    throw ValidationError("contour feature requires k >= 4");
  }
  if (!(tau > 0.0 && tau < kTwoPi)) {
    throw ValidationError("contour threshold tau must lie in (0, 2*pi)");
  }

  const std::size_t n = cloud.size();
  ContourFeature out;
  out.max_gap_angle.resize(n);
  out.is_contour.resize(n);

  std::vector<double> angles;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = cloud.points[i];
    const std::vector<int> nb = index.knn(static_cast<int>(i), k);

    // Tangent plane through p with the neighborhood covariance normal.
    Vec3 centroid = Vec3::Zero();
    for (int idx : nb) centroid += cloud.points[idx];
    centroid /= static_cast<double>(nb.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int idx : nb) {
      const Vec3 d = cloud.points[idx] - centroid;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 normal = Vec3(solver.eigenvectors().col(0)).normalized();

    // In-plane reference frame. The choice of e1 does not affect the gap
    // multiset, only where the circular sequence is cut.
    const Vec3 pick = std::abs(normal.x()) <= std::abs(normal.y())
                          ? (std::abs(normal.x()) <= std::abs(normal.z()) ? Vec3::UnitX()
                                                                          : Vec3::UnitZ())
                          : (std::abs(normal.y()) <= std::abs(normal.z()) ? Vec3::UnitY()
                                                                          : Vec3::UnitZ());
    const Vec3 e1 = normal.cross(pick).normalized();
    const Vec3 e2 = normal.cross(e1);

    angles.clear();
    for (int idx : nb) {
      if (idx == static_cast<int>(i)) continue;
      const Vec3 d = cloud.points[idx] - p;
      const Vec3 v = d - d.dot(normal) * normal;  // projection onto the tangent plane
      if (v.squaredNorm() < 1e-24) continue;      // neighbor projects onto p itself
      angles.push_back(std::atan2(v.dot(e2), v.dot(e1)));
    }

    if (angles.size() < 2) {
      out.max_gap_angle[i] = kTwoPi;
      out.is_contour[i] = 1;
      continue;
    }
    std::sort(angles.begin(), angles.end());
    double max_gap = angles.front() + kTwoPi - angles.back();  // wrap-around gap
    for (std::size_t j = 1; j < angles.size(); ++j) {
      max_gap = std::max(max_gap, angles[j] - angles[j - 1]);
    }
    out.max_gap_angle[i] = max_gap;
    out.is_contour[i] = max_gap > tau ? 1 : 0;
  }
  return out;
}

std::vector<std::array<double, 6>> feature_table(const PointCloud& cloud,
                                                 const NeighborIndex& index, int k,
                                                 int contour_k, double tau) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const GeometricFeatures geo = geometric_features(cloud, index, k);
  const ContourFeature contour = contour_feature(cloud, index, contour_k, tau);

  std::vector<std::array<double, 6>> table(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    table[i] = {geo.linearity[i],          geo.planarity[i],
                geo.scattering[i],         geo.verticality[i],
                contour.max_gap_angle[i] / kTwoPi,
                contour.is_contour[i] ? 1.0 : 0.0};
  }
  return table;
}

}  // namespace roofseg
