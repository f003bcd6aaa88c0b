#pragma once

#include <span>
#include <string>
#include <vector>

#include "roofseg/types.hpp"

namespace roofseg {

/// |A intersect B| / |A union B| over sorted index sets; 0 when both empty.
double iou(std::span<const int> set_a, std::span<const int> set_b);

/// Non-noise instances of a labeling, ordered by ascending instance id.
struct InstanceSet {
  int label;
  std::vector<int> points;  // sorted point indices
};
std::vector<InstanceSet> instance_sets(const InstanceLabeling& labeling);

struct CoverageResult {
  double cov = 0.0;   // mean over gt instances of the best IoU against predictions
  double wcov = 0.0;  // same, weighted by gt instance size
};
CoverageResult coverage(const InstanceLabeling& gt, const InstanceLabeling& pred);

struct MatchedPair {
  int gt_label;
  int pred_label;
  double iou;
};

struct PrfResult {
  double precision = 0.0;  // matches / |pred instances|, 0 when no predictions
  double recall = 0.0;     // matches / |gt instances|
  double f1 = 0.0;
  std::vector<MatchedPair> matches;
};

/// Greedy one-to-one matching in descending IoU order (ties: ascending gt
/// then pred id); a pair matches iff IoU >= iou_threshold.
PrfResult instance_prf(const InstanceLabeling& gt, const InstanceLabeling& pred,
                       double iou_threshold);

/// Point-level accuracy under greedy IoU instance correspondence (all pairs
/// with IoU > 0 are eligible). A point is correct iff its predicted instance
/// is matched to its ground-truth instance, or both labels are NOISE.
double point_accuracy(const InstanceLabeling& gt, const InstanceLabeling& pred);

struct EvalReport {
  std::string sample_id;
  double cov = 0.0;
  double wcov = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::vector<MatchedPair> matches;
};

EvalReport evaluate_sample(const std::string& sample_id, const InstanceLabeling& gt,
                           const InstanceLabeling& pred, double iou_threshold);

/// Mean of each metric over the given per-sample reports.
EvalReport aggregate_reports(std::span<const EvalReport> reports);

/// Serialized batch report: {"samples": [...], "aggregate": {...},
/// "missing": [...]} with the fixed per-sample field names.
std::string eval_report_json(std::span<const EvalReport> samples, const EvalReport& aggregate,
                             std::span<const std::string> missing);

}  // namespace roofseg
