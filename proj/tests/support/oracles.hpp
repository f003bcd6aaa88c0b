#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "roofseg/types.hpp"

// Independent brute-force reference implementations used to freeze expected
// values. Nothing here shares code with the library implementations.

namespace roofseg::oracles {

inline std::vector<int> brute_knn(const std::vector<Vec3>& points, const Vec3& query, int k) {
  std::vector<std::pair<double, int>> all;
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.emplace_back((points[i] - query).squaredNorm(), static_cast<int>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<int> out;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(all.size())); ++i) {
    out.push_back(all[i].second);
  }
  return out;
}

inline std::vector<int> brute_radius(const std::vector<Vec3>& points, const Vec3& query,
                                     double r) {
  std::vector<std::pair<double, int>> all;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - query).squaredNorm();
    if (d2 <= r * r) all.emplace_back(d2, static_cast<int>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<int> out;
  for (const auto& [d2, i] : all) out.push_back(i);
  return out;
}

/// Eigenvalues of a symmetric 3x3 matrix via the closed-form trigonometric
/// solution of the characteristic cubic, descending order.
inline std::array<double, 3> symmetric_eigenvalues(const Eigen::Matrix3d& m) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  const double q = m.trace() / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> diag{m(0, 0), m(1, 1), m(2, 2)};
    std::sort(diag.begin(), diag.end(), std::greater<>());
    return diag;
  }
  const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                    (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Eigen::Matrix3d b = (m - q * Eigen::Matrix3d::Identity()) / p;
  double r = b.determinant() / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double e2 = 3.0 * q - e1 - e3;
  return {e1, e2, e3};
}

// ---- metric oracles (set arithmetic by exhaustive scan) --------------------

inline std::vector<std::vector<int>> oracle_instances(const InstanceLabeling& labeling) {
  std::set<int> ids;
  for (int l : labeling.labels) {
    if (l != kNoise) ids.insert(l);
  }
  std::vector<std::vector<int>> instances;
  for (int id : ids) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labeling.size(); ++i) {
      if (labeling[i] == id) members.push_back(static_cast<int>(i));
    }
    instances.push_back(members);
  }
  return instances;
}

inline int oracle_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  int inter = 0;
  for (int x : a) {
    for (int y : b) {
      if (x == y) ++inter;
    }
  }
  return inter;
}

inline double oracle_iou(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 0.0;
  const int inter = oracle_intersection(a, b);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline std::pair<double, double> oracle_coverage(const InstanceLabeling& gt,
                                                 const InstanceLabeling& pred) {
  const auto gt_sets = oracle_instances(gt);
  const auto pred_sets = oracle_instances(pred);
  if (gt_sets.empty()) return {0.0, 0.0};
  double total = 0.0;
  for (const auto& g : gt_sets) total += static_cast<double>(g.size());
  double cov = 0.0, wcov = 0.0;
  for (const auto& g : gt_sets) {
    double best = 0.0;
    for (const auto& p : pred_sets) best = std::max(best, oracle_iou(g, p));
    cov += best / static_cast<double>(gt_sets.size());
    wcov += (static_cast<double>(g.size()) / total) * best;
  }
  return {cov, wcov};
}

/// Greedy descending-IoU one-to-one matching, realized by repeated full scans
/// instead of sorting. Returns (gt index, pred index) pairs.
inline std::vector<std::pair<int, int>> oracle_greedy_match(
    const std::vector<std::vector<int>>& gt_sets, const std::vector<std::vector<int>>& pred_sets,
    double min_iou) {
  std::vector<char> gt_used(gt_sets.size(), 0), pred_used(pred_sets.size(), 0);
  std::vector<std::pair<int, int>> matches;
  while (true) {
    double best = 0.0;
    int bg = -1, bp = -1;
    for (std::size_t g = 0; g < gt_sets.size(); ++g) {
      if (gt_used[g]) continue;
      for (std::size_t p = 0; p < pred_sets.size(); ++p) {
        if (pred_used[p]) continue;
        const double v = oracle_iou(gt_sets[g], pred_sets[p]);
        if (v > 0.0 && v >= min_iou && v > best) {
          best = v;
          bg = static_cast<int>(g);
          bp = static_cast<int>(p);
        }
      }
    }
    if (bg < 0) break;
    gt_used[bg] = 1;
    pred_used[bp] = 1;
    matches.emplace_back(bg, bp);
  }
  return matches;
}

struct OraclePrf {
  double precision, recall, f1;
};

inline OraclePrf oracle_prf(const InstanceLabeling& gt, const InstanceLabeling& pred,
                            double threshold) {
  const auto gt_sets = oracle_instances(gt);
  const auto pred_sets = oracle_instances(pred);
  const auto matches = oracle_greedy_match(gt_sets, pred_sets, threshold);
  const double m = static_cast<double>(matches.size());
  const double precision = pred_sets.empty() ? 0.0 : m / static_cast<double>(pred_sets.size());
  const double recall = gt_sets.empty() ? 0.0 : m / static_cast<double>(gt_sets.size());
  const double f1 =
      precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return {precision, recall, f1};
}

inline double oracle_accuracy(const InstanceLabeling& gt, const InstanceLabeling& pred) {
  const auto gt_sets = oracle_instances(gt);
  const auto pred_sets = oracle_instances(pred);
  const auto matches = oracle_greedy_match(gt_sets, pred_sets, 0.0);
  int correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kNoise && pred[i] == kNoise) {
      ++correct;
      continue;
    }
    for (const auto& [g, p] : matches) {
      const bool in_g = std::find(gt_sets[g].begin(), gt_sets[g].end(), static_cast<int>(i)) !=
                        gt_sets[g].end();
      const bool in_p = std::find(pred_sets[p].begin(), pred_sets[p].end(),
                                  static_cast<int>(i)) != pred_sets[p].end();
      if (in_g && in_p) {
        ++correct;
        break;
      }
    }
  }
  return gt.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(gt.size());
}

/// Best achievable point accuracy over every one-to-one instance
/// correspondence; upper-bounds the greedy protocol.
inline double oracle_accuracy_best_bijection(const InstanceLabeling& gt,
                                             const InstanceLabeling& pred) {
  const auto gt_sets = oracle_instances(gt);
  const auto pred_sets = oracle_instances(pred);

  int base = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kNoise && pred[i] == kNoise) ++base;
  }

  int best_inter = 0;
  std::vector<char> pred_used(pred_sets.size(), 0);
  std::vector<int> stack;
  // Depth-first over all partial injections gt -> pred.
  std::function<void(std::size_t, int)> recurse = [&](std::size_t g, int acc) {
    best_inter = std::max(best_inter, acc);
    if (g >= gt_sets.size()) return;
    recurse(g + 1, acc);  // leave this gt instance unmatched
    for (std::size_t p = 0; p < pred_sets.size(); ++p) {
      if (pred_used[p]) continue;
      pred_used[p] = 1;
      recurse(g + 1, acc + oracle_intersection(gt_sets[g], pred_sets[p]));
      pred_used[p] = 0;
    }
  };
  recurse(0, 0);
  return gt.size() == 0 ? 0.0
                        : static_cast<double>(base + best_inter) / static_cast<double>(gt.size());
}

/// Max circular gap between 2D directions, computed without sorting: for each
/// vector, find the smallest positive counterclockwise angle to any other
/// vector; the largest such step is the max gap.
inline double oracle_max_gap(const std::vector<std::pair<double, double>>& vectors) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (vectors.size() < 2) return kTwoPi;
  std::vector<double> angles;
  for (const auto& [x, y] : vectors) angles.push_back(std::atan2(y, x));
  double max_gap = 0.0;
  for (double from : angles) {
    double smallest = kTwoPi;  // a vector's step to itself normalizes to 2*pi
    for (double to : angles) {
      double step = to - from;
      while (step <= 0.0) step += kTwoPi;
      while (step > kTwoPi) step -= kTwoPi;
      if (step < smallest) smallest = step;
    }
    max_gap = std::max(max_gap, smallest);
  }
  return max_gap;
}

}  // namespace roofseg::oracles
