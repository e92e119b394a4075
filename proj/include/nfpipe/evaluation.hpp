#pragma once

#include <map>
#include <string>
#include <vector>

#include "nfpipe/anatomy.hpp"
#include "nfpipe/components.hpp"
#include "nfpipe/volume.hpp"

namespace nfpipe {

struct OverlapMetrics {
  double dsc = 0.0;
  double voe = 0.0;
  double arvd = 0.0;
};

/// DSC, volume overlap error (1 - Jaccard) and absolute relative volume
/// difference between two binary masks of identical geometry. Conventions:
/// both empty -> (1, 0, 0); gt empty with pred non-empty -> arvd = +inf.
OverlapMetrics overlap_metrics(const LabelVolume& pred, const LabelVolume& gt);

/// Instance-level matching: a ground-truth component is a TP iff it shares at
/// least one voxel with any predicted component; otherwise an FN. A predicted
/// component overlapping no ground truth is an FP.
struct InstanceMatch {
  struct TpPair {
    int gt_id = 0;
    std::vector<int> pred_ids;  // every predicted component overlapping gt_id
  };
  std::vector<TpPair> tp_pairs;
  std::vector<int> fn_gt_ids;
  std::vector<int> fp_pred_ids;

  int tp() const { return static_cast<int>(tp_pairs.size()); }
  int fn() const { return static_cast<int>(fn_gt_ids.size()); }
  int fp() const { return static_cast<int>(fp_pred_ids.size()); }
};

InstanceMatch match_instances(const ComponentLabeling& gt_components,
                              const ComponentLabeling& pred_components);

/// DSC per correctly detected tumor: each TP ground-truth component against
/// the union of all predicted components overlapping it. One entry per TP, in
/// tp_pairs order.
std::vector<double> per_tumor_dsc(const InstanceMatch& match,
                                  const ComponentLabeling& gt_components,
                                  const ComponentLabeling& pred_components);

struct DetectionF1 {
  double overall = 0.0;
  /// Regions with at least one gt or predicted instance (by voxel centroid);
  /// empty regions are absent.
  std::map<AnatomicalRegion, double> per_region;
};

/// f1 = 2TP/(2TP+FP+FN); an entirely empty scan scores 1. Instances are
/// assigned to regions by their voxel centroid.
DetectionF1 detection_f1(const InstanceMatch& match, const ComponentLabeling& gt_components,
                         const ComponentLabeling& pred_components,
                         const BodyRegionPartition& partition);

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, t-distribution with n-2 df
};

/// Sample Pearson correlation; requires equal lengths >= 3 and non-constant
/// inputs.
PearsonResult pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct WilcoxonResult {
  double p_raw = 1.0;
  double p_bonferroni = 1.0;
  double w_statistic = 0.0;  // rank sum of positive differences
  int n_effective = 0;       // pairs remaining after zero differences drop
  bool exact_mode = false;
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped
/// and tied |differences| take average ranks. n <= 25 uses the exact null
/// distribution (p = min(1, 2 min(P(W<=w), P(W>=w)))); larger n uses the
/// normal approximation with continuity and tie corrections. All differences
/// zero -> p_raw = 1. p_bonferroni = min(1, p_raw * n_comparisons).
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b, int n_comparisons);

/// Per-scan metric bundle (Stage-agnostic evaluation protocol output).
struct ScanMetrics {
  double dsc = 0.0;
  double voe = 0.0;
  double arvd = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double f1 = 0.0;
  std::vector<double> per_tumor_dsc;
  std::vector<double> per_tumor_gt_volume_mm3;  // aligned with per_tumor_dsc
  std::map<AnatomicalRegion, double> per_region_f1;
};

ScanMetrics evaluate_scan(const LabelVolume& pred, const LabelVolume& gt,
                          const BodyRegionPartition& partition);

/// Study-level aggregation across methods and scans.
struct StudyScan {
  std::string scan_id;
  ScanMetrics metrics;
  double tumor_burden_mm3 = 0.0;  // total gt volume
};

struct StudyMethod {
  std::string method;
  std::vector<StudyScan> scans;
};

struct MethodAggregate {
  std::string method;
  double dsc_mean = 0.0, dsc_std = 0.0;
  double per_tumor_dsc_mean = 0.0, per_tumor_dsc_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double voe_mean = 0.0, voe_std = 0.0;
  double arvd_mean = 0.0, arvd_std = 0.0;
  // Pearson correlations (NaN when not computable): per-scan DSC vs tumor
  // burden, and pooled per-tumor DSC vs tumor volume.
  double r_scan_dsc_burden = 0.0, p_scan_dsc_burden = 1.0;
  double r_tumor_dsc_volume = 0.0, p_tumor_dsc_volume = 1.0;
};

struct MethodComparison {
  std::string method_a;
  std::string method_b;
  double p_raw = 1.0;
  double p_bonferroni = 1.0;
};

struct StudyReport {
  std::vector<StudyMethod> methods;
  std::vector<MethodAggregate> aggregates;
  std::vector<MethodComparison> comparisons;  // Wilcoxon on paired per-scan DSC
};

/// Aggregates are recomputable from the rows; comparisons pair every method
/// with every other (Bonferroni n = number of pairs) on scans present in both.
StudyReport build_study_report(const std::vector<StudyMethod>& methods);

std::string study_report_table(const StudyReport& report);
std::string scan_metrics_table(const ScanMetrics& metrics);
std::string study_report_json(const StudyReport& report);
std::string scan_metrics_json(const ScanMetrics& metrics);

}  // namespace nfpipe
