#include "bla/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bla/datapipe/csv.hpp"
#include "bla/error.hpp"

namespace bla::eval {
namespace {

// Indices sorted by descending score; ties keep input order.
std::vector<std::size_t> descending(const ScoredSet& set) {
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return set.scores[a] > set.scores[b]; });
  return idx;
}

// Cumulative (tp, fp) after each group of tied scores, walking thresholds downwards.
struct Step {
  double threshold;
  std::size_t tp, fp;
};

std::vector<Step> sweep(const ScoredSet& set) {
  const std::vector<std::size_t> idx = descending(set);
  std::vector<Step> steps;
  std::size_t tp = 0, fp = 0;
  for (std::size_t r = 0; r < idx.size();) {
    const double s = set.scores[idx[r]];
    for (; r < idx.size() && set.scores[idx[r]] == s; ++r) {
      if (set.labels[idx[r]] == 1.0) {
        ++tp;
      } else {
        ++fp;
      }
    }
    steps.push_back({s, tp, fp});
  }
  return steps;
}

void write_curve(std::span<const CurvePoint> curve, const std::filesystem::path& path, const char* header) {
  std::ofstream out = data::open_output(path);
  out << header << '\n';
  for (const CurvePoint& p : curve) {
    out << data::format_real(p.threshold) << ',' << data::format_real(p.x) << ',' << data::format_real(p.y) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1.0));
}

void ScoredSet::validate() const {
  if (scores.size() != labels.size()) {
    throw MetricError("scores and labels differ in length: " + std::to_string(scores.size()) + " vs " +
                      std::to_string(labels.size()));
  }
  if (scores.empty()) throw MetricError("empty scored set");
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw MetricError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw MetricError("non-finite score");
  }
}

ScoredSet flip_classes(const ScoredSet& set) {
  ScoredSet out = set;
  for (double& s : out.scores) s = 1.0 - s;
  for (double& y : out.labels) y = 1.0 - y;
  return out;
}

double roc_auc(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives(), neg = set.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("AUC@ROC is undefined for single-class labels");

  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return set.scores[a] < set.scores[b]; });
  // Twice the positive rank sum, with mid-ranks for ties, stays integral.
  std::size_t twice_rank_sum = 0;
  for (std::size_t r = 0; r < idx.size();) {
    std::size_t end = r;
    while (end < idx.size() && set.scores[idx[end]] == set.scores[idx[r]]) ++end;
    const std::size_t twice_mid = r + 1 + end;  // 2 * mean of ranks r+1 .. end
    for (std::size_t q = r; q < end; ++q) {
      if (set.labels[idx[q]] == 1.0) twice_rank_sum += twice_mid;
    }
    r = end;
  }
  const double twice_pairs = static_cast<double>(twice_rank_sum - pos * (pos + 1));
  return twice_pairs / 2.0 / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives();
  if (pos == 0) throw MetricError("AUC@PR is undefined without positive labels");
  double ap = 0.0, prev_recall = 0.0;
  for (const Step& s : sweep(set)) {
    const double recall = static_cast<double>(s.tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

ConfusionCounts confusion_at(const ScoredSet& set, double threshold) {
  set.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw RangeError("threshold must lie in [0, 1]");
  ConfusionCounts cc;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool predicted = set.scores[i] >= threshold;
    const bool actual = set.labels[i] == 1.0;
    if (predicted && actual) {
      ++cc.tp;
    } else if (predicted) {
      ++cc.fp;
    } else if (actual) {
      ++cc.fn;
    } else {
      ++cc.tn;
    }
  }
  return cc;
}

double f1(const ConfusionCounts& cc) {
  const std::size_t denom = 2 * cc.tp + cc.fp + cc.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(cc.tp) / static_cast<double>(denom);
}

double mcc(const ConfusionCounts& cc) {
  const double tp = static_cast<double>(cc.tp), fp = static_cast<double>(cc.fp);
  const double tn = static_cast<double>(cc.tn), fn = static_cast<double>(cc.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  return denom == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(denom);
}

std::vector<CurvePoint> roc_curve(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives(), neg = set.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("ROC curve is undefined for single-class labels");
  std::vector<CurvePoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  for (const Step& s : sweep(set)) {
    curve.push_back({s.threshold, static_cast<double>(s.fp) / static_cast<double>(neg),
                     static_cast<double>(s.tp) / static_cast<double>(pos)});
  }
  return curve;
}

std::vector<CurvePoint> pr_curve(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives();
  if (pos == 0) throw MetricError("PR curve is undefined without positive labels");
  std::vector<CurvePoint> curve;
  for (const Step& s : sweep(set)) {
    curve.push_back({s.threshold, static_cast<double>(s.tp) / static_cast<double>(pos),
                     static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp)});
  }
  return curve;
}

std::vector<std::pair<std::string, double>> MetricReport::rows() const {
  return {{"auc_roc", roc_auc},
          {"auc_pr", pr_auc},
          {"f1", f1},
          {"mcc", mcc},
          {"threshold", threshold},
          {"tp", static_cast<double>(counts.tp)},
          {"fp", static_cast<double>(counts.fp)},
          {"tn", static_cast<double>(counts.tn)},
          {"fn", static_cast<double>(counts.fn)},
          {"users", static_cast<double>(users)},
          {"positives", static_cast<double>(positives)}};
}

MetricReport evaluate(const ScoredSet& set, double threshold, bool minority_positive) {
  set.validate();
  MetricReport r;
  r.threshold = threshold;
  r.users = set.size();
  r.roc_auc = eval::roc_auc(set);
  const bool flip = minority_positive && 2 * set.positives() > set.size();
  const ScoredSet view = flip ? flip_classes(set) : set;
  const ConfusionCounts cc = confusion_at(set, threshold);
  r.counts = flip ? ConfusionCounts{cc.tn, cc.fn, cc.tp, cc.fp} : cc;
  r.positives = view.positives();
  r.pr_auc = eval::pr_auc(view);
  r.f1 = eval::f1(r.counts);
  r.mcc = eval::mcc(r.counts);
  return r;
}

void write_metrics(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out = data::open_output(path);
  out << "metric,value\n";
  for (const auto& [name, value] : report.rows()) out << name << ',' << data::format_real(value) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_roc_curve(std::span<const CurvePoint> curve, const std::filesystem::path& path) {
  write_curve(curve, path, "threshold,fpr,tpr");
}

void write_pr_curve(std::span<const CurvePoint> curve, const std::filesystem::path& path) {
  write_curve(curve, path, "threshold,recall,precision");
}

}  // namespace bla::eval
