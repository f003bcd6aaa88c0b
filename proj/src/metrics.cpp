#include "roofseg/metrics.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"

namespace roofseg {

double iou(std::span<const int> set_a, std::span<const int> set_b) {
  if (set_a.empty() && set_b.empty()) return 0.0;
  std::size_t inter = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < set_a.size() && ib < set_b.size()) {
    if (set_a[ia] < set_b[ib]) {
      ++ia;
    } else if (set_b[ib] < set_a[ia]) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = set_a.size() + set_b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<InstanceSet> instance_sets(const InstanceLabeling& labeling) {
  std::map<int, std::vector<int>> by_label;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    if (labeling[i] != kNoise) by_label[labeling[i]].push_back(static_cast<int>(i));
  }
  std::vector<InstanceSet> sets;
  sets.reserve(by_label.size());
  for (auto& [label, points] : by_label) {
    sets.push_back({label, std::move(points)});  // indices are already sorted
  }
  return sets;
}

namespace {

void require_same_length(const InstanceLabeling& gt, const InstanceLabeling& pred) {
  if (gt.size() != pred.size()) {
    throw ValidationError("labelings have different lengths: " + std::to_string(gt.size()) +
                          " vs " + std::to_string(pred.size()));
  }
}

// Greedy one-to-one matching over descending IoU with deterministic
// (gt, pred) id tie-breaks. Only pairs with IoU >= min_iou and IoU > 0 are
// eligible.
std::vector<MatchedPair> greedy_match(const std::vector<InstanceSet>& gt,
                                      const std::vector<InstanceSet>& pred, double min_iou) {
  struct Pair {
    double iou;
    int gi;
    int pi;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const double v = iou(gt[g].points, pred[p].points);
      if (v > 0.0 && v >= min_iou) {
        pairs.push_back({v, static_cast<int>(g), static_cast<int>(p)});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gi != b.gi) return a.gi < b.gi;
    return a.pi < b.pi;
  });

  std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
  std::vector<MatchedPair> matches;
  for (const Pair& pair : pairs) {
    if (gt_used[pair.gi] || pred_used[pair.pi]) continue;
    gt_used[pair.gi] = 1;
    pred_used[pair.pi] = 1;
    matches.push_back({gt[pair.gi].label, pred[pair.pi].label, pair.iou});
  }
  return matches;
}

}  // namespace

CoverageResult coverage(const InstanceLabeling& gt, const InstanceLabeling& pred) {
  require_same_length(gt, pred);
  const auto gt_sets = instance_sets(gt);
  const auto pred_sets = instance_sets(pred);

  CoverageResult result;
  if (gt_sets.empty()) return result;

  double total_size = 0.0;
  for (const auto& g : gt_sets) total_size += static_cast<double>(g.points.size());

  for (const auto& g : gt_sets) {
    double best = 0.0;
    for (const auto& p : pred_sets) {
      best = std::max(best, iou(g.points, p.points));
    }
    result.cov += best / static_cast<double>(gt_sets.size());
    result.wcov += (static_cast<double>(g.points.size()) / total_size) * best;
  }
  return result;
}

PrfResult instance_prf(const InstanceLabeling& gt, const InstanceLabeling& pred,
                       double iou_threshold) {
  require_same_length(gt, pred);
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("iou_threshold must lie in (0, 1]");
  }
  const auto gt_sets = instance_sets(gt);
  const auto pred_sets = instance_sets(pred);

  PrfResult result;
  result.matches = greedy_match(gt_sets, pred_sets, iou_threshold);
  const double m = static_cast<double>(result.matches.size());
  result.precision = pred_sets.empty() ? 0.0 : m / static_cast<double>(pred_sets.size());
  result.recall = gt_sets.empty() ? 0.0 : m / static_cast<double>(gt_sets.size());
  const double denom = result.precision + result.recall;
  result.f1 = denom > 0.0 ? 2.0 * result.precision * result.recall / denom : 0.0;
  return result;
}

double point_accuracy(const InstanceLabeling& gt, const InstanceLabeling& pred) {
  require_same_length(gt, pred);
  if (gt.size() == 0) return 0.0;
  const auto gt_sets = instance_sets(gt);
  const auto pred_sets = instance_sets(pred);
  const auto matches = greedy_match(gt_sets, pred_sets, 0.0);

  std::map<int, int> pred_to_gt;
  for (const auto& m : matches) pred_to_gt[m.pred_label] = m.gt_label;

  std::size_t correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == kNoise && pred[i] == kNoise) {
      ++correct;
    } else if (pred[i] != kNoise) {
      const auto it = pred_to_gt.find(pred[i]);
      if (it != pred_to_gt.end() && it->second == gt[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(gt.size());
}

EvalReport evaluate_sample(const std::string& sample_id, const InstanceLabeling& gt,
                           const InstanceLabeling& pred, double iou_threshold) {
  EvalReport report;
  report.sample_id = sample_id;
  const CoverageResult cov = coverage(gt, pred);
  report.cov = cov.cov;
  report.wcov = cov.wcov;
  PrfResult prf = instance_prf(gt, pred, iou_threshold);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;
  report.matches = std::move(prf.matches);
  report.accuracy = point_accuracy(gt, pred);
  return report;
}

EvalReport aggregate_reports(std::span<const EvalReport> reports) {
  EvalReport agg;
  agg.sample_id = "aggregate";
  if (reports.empty()) return agg;
  const double n = static_cast<double>(reports.size());
  for (const EvalReport& r : reports) {
    agg.cov += r.cov / n;
    agg.wcov += r.wcov / n;
    agg.precision += r.precision / n;
    agg.recall += r.recall / n;
    agg.f1 += r.f1 / n;
    agg.accuracy += r.accuracy / n;
  }
  return agg;
}

namespace {

nlohmann::json report_to_json(const EvalReport& r, bool with_matches) {
  nlohmann::json j{{"sample_id", r.sample_id}, {"cov", r.cov},
                   {"wcov", r.wcov},           {"precision", r.precision},
                   {"recall", r.recall},       {"f1", r.f1},
                   {"accuracy", r.accuracy}};
  if (with_matches) {
    nlohmann::json matches = nlohmann::json::array();
    for (const MatchedPair& m : r.matches) {
      matches.push_back({{"gt", m.gt_label}, {"pred", m.pred_label}, {"iou", m.iou}});
    }
    j["matches"] = std::move(matches);
  }
  return j;
}

}  // namespace

std::string eval_report_json(std::span<const EvalReport> samples, const EvalReport& aggregate,
                             std::span<const std::string> missing) {
  nlohmann::json j;
  j["samples"] = nlohmann::json::array();
  for (const EvalReport& r : samples) {
    j["samples"].push_back(report_to_json(r, true));
  }
  j["aggregate"] = report_to_json(aggregate, false);
  j["missing"] = nlohmann::json::array();
  for (const std::string& id : missing) j["missing"].push_back(id);
  return j.dump(2) + "\n";
}

}  // namespace roofseg
