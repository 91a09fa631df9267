#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bla::eval {

/// Scores in [0, 1] with binary labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<double> labels;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t positives() const;
  /// Throws MetricError on length mismatch, an empty set or a non-binary label.
  void validate() const;
};

/// Swaps the roles of the classes: labels y -> 1 - y, scores s -> 1 - s.
ScoredSet flip_classes(const ScoredSet& set);

/// P(score+ > score-) + P(tie)/2 via the mid-rank statistic. MetricError unless both classes occur.
double roc_auc(const ScoredSet& set);

/// Average precision: sum over distinct descending thresholds of
/// (recall step) * precision. MetricError without positives.
double pr_auc(const ScoredSet& set);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Predicts 1 iff score >= threshold; threshold must lie in [0, 1].
ConfusionCounts confusion_at(const ScoredSet& set, double threshold);

/// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1(const ConfusionCounts& cc);
/// Matthews correlation; 0 when any marginal is 0.
double mcc(const ConfusionCounts& cc);

struct CurvePoint {
  double threshold;
  double x;  // FPR for ROC, recall for PR
  double y;  // TPR for ROC, precision for PR
};
/// One point per distinct score, thresholds descending; ROC starts at (0, 0).
std::vector<CurvePoint> roc_curve(const ScoredSet& set);
std::vector<CurvePoint> pr_curve(const ScoredSet& set);

struct MetricReport {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double threshold = 0.5;
  ConfusionCounts counts;
  std::size_t users = 0;
  std::size_t positives = 0;

  /// (metric, value) rows in a fixed order.
  std::vector<std::pair<std::string, double>> rows() const;
};

/// All metrics at `threshold`. With `minority_positive` F1, PR-AUC and the
/// confusion counts treat the rarer class as positive.
MetricReport evaluate(const ScoredSet& set, double threshold = 0.5, bool minority_positive = false);

/// `metric,value`
void write_metrics(const MetricReport& report, const std::filesystem::path& path);
/// `threshold,fpr,tpr` and `threshold,recall,precision`
void write_roc_curve(std::span<const CurvePoint> curve, const std::filesystem::path& path);
void write_pr_curve(std::span<const CurvePoint> curve, const std::filesystem::path& path);

}  // namespace bla::eval
