#include "nfpipe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nfpipe/kernels.hpp"

namespace nfpipe {

namespace {

void require_same_geometry(const VolumeGeometry& a, const VolumeGeometry& b) {
  if (a != b) throw std::invalid_argument("volume geometry mismatch");
}

struct OverlapStats {
  std::vector<std::int64_t> gt_size;    // indexed by component id
  std::vector<std::int64_t> pred_size;
  std::map<std::pair<int, int>, std::int64_t> pair_count;  // (gt, pred) -> voxels
};

OverlapStats compute_overlap_stats(const ComponentLabeling& gt,
                                   const ComponentLabeling& pred) {
  require_same_geometry(gt.labels.geometry, pred.labels.geometry);
  OverlapStats stats;
  stats.gt_size.assign(static_cast<std::size_t>(gt.count) + 1, 0);
  stats.pred_size.assign(static_cast<std::size_t>(pred.count) + 1, 0);
  const std::size_t n = gt.labels.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t g = gt.labels.data[i];
    const std::int32_t p = pred.labels.data[i];
    if (g > 0) ++stats.gt_size[static_cast<std::size_t>(g)];
    if (p > 0) ++stats.pred_size[static_cast<std::size_t>(p)];
    if (g > 0 && p > 0) ++stats.pair_count[{g, p}];
  }
  return stats;
}

double safe_f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const std::int64_t denom = 2 * tp + fp + fn;
  // an empty scan (nothing to find, nothing predicted) counts as perfect
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

// Regularized incomplete beta via continued fraction (for the Student-t
// two-sided p-value).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta_reg(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

OverlapMetrics overlap_metrics(const LabelVolume& pred, const LabelVolume& gt) {
  require_same_geometry(pred.geometry, gt.geometry);
  const auto counts = kernels::active().overlap_counts(
      pred.data.data(), gt.data.data(), pred.data.size());
  const auto np = counts.count_a;
  const auto ng = counts.count_b;
  const auto inter = counts.count_inter;
  const auto uni = counts.count_union;

  OverlapMetrics m;
  if (np == 0 && ng == 0) {
    m.dsc = 1.0;
    m.voe = 0.0;
    m.arvd = 0.0;
    return m;
  }
  m.dsc = 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
  m.voe = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  if (ng == 0) {
    m.arvd = std::numeric_limits<double>::infinity();
  } else {
    const auto diff = np > ng ? np - ng : ng - np;
    m.arvd = static_cast<double>(diff) / static_cast<double>(ng);
  }
  return m;
}

InstanceMatch match_instances(const ComponentLabeling& gt_components,
                              const ComponentLabeling& pred_components) {
  const OverlapStats stats = compute_overlap_stats(gt_components, pred_components);

  std::vector<std::vector<int>> gt_overlaps(static_cast<std::size_t>(gt_components.count) + 1);
  std::vector<bool> pred_matched(static_cast<std::size_t>(pred_components.count) + 1, false);
  for (const auto& [pair, _] : stats.pair_count) {
    gt_overlaps[static_cast<std::size_t>(pair.first)].push_back(pair.second);
    pred_matched[static_cast<std::size_t>(pair.second)] = true;
  }

  InstanceMatch match;
  for (int g = 1; g <= gt_components.count; ++g) {
    auto& overlaps = gt_overlaps[static_cast<std::size_t>(g)];
    if (overlaps.empty()) {
      match.fn_gt_ids.push_back(g);
    } else {
      std::sort(overlaps.begin(), overlaps.end());
      match.tp_pairs.push_back({g, std::move(overlaps)});
    }
  }
  for (int p = 1; p <= pred_components.count; ++p)
    if (!pred_matched[static_cast<std::size_t>(p)]) match.fp_pred_ids.push_back(p);
  return match;
}

std::vector<double> per_tumor_dsc(const InstanceMatch& match,
                                  const ComponentLabeling& gt_components,
                                  const ComponentLabeling& pred_components) {
  const OverlapStats stats = compute_overlap_stats(gt_components, pred_components);
  std::vector<double> result;
  result.reserve(match.tp_pairs.size());
  for (const auto& pair : match.tp_pairs) {
    const std::int64_t g_size = stats.gt_size[static_cast<std::size_t>(pair.gt_id)];
    std::int64_t union_size = 0;
    std::int64_t inter = 0;
    for (int p : pair.pred_ids) {
      union_size += stats.pred_size[static_cast<std::size_t>(p)];
      const auto it = stats.pair_count.find({pair.gt_id, p});
      inter += it == stats.pair_count.end() ? 0 : it->second;
    }
    result.push_back(2.0 * static_cast<double>(inter) /
                     static_cast<double>(g_size + union_size));
  }
  return result;
}

namespace {

std::vector<int> component_region(const ComponentLabeling& components,
                                  const BodyRegionPartition& partition) {
  // region of each component's voxel centroid, indexed by component id
  std::vector<double> sum_z(static_cast<std::size_t>(components.count) + 1, 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(components.count) + 1, 0);
  const auto& g = components.labels.geometry;
  std::size_t idx = 0;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k, ++idx) {
        const std::int32_t id = components.labels.data[idx];
        if (id == 0) continue;
        sum_z[static_cast<std::size_t>(id)] += j;
        ++count[static_cast<std::size_t>(id)];
      }
  std::vector<int> region(static_cast<std::size_t>(components.count) + 1, -1);
  for (int c = 1; c <= components.count; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) continue;
    const double centroid = sum_z[static_cast<std::size_t>(c)] /
                            static_cast<double>(count[static_cast<std::size_t>(c)]);
    const int z = static_cast<int>(std::floor(centroid + 0.5));
    region[static_cast<std::size_t>(c)] = static_cast<int>(region_of(z, partition));
  }
  return region;
}

}  // namespace

DetectionF1 detection_f1(const InstanceMatch& match, const ComponentLabeling& gt_components,
                         const ComponentLabeling& pred_components,
                         const BodyRegionPartition& partition) {
  partition.validate();
  DetectionF1 result;
  result.overall = safe_f1(match.tp(), match.fp(), match.fn());

  const std::vector<int> gt_region = component_region(gt_components, partition);
  const std::vector<int> pred_region = component_region(pred_components, partition);

  std::array<std::int64_t, 4> tp{}, fp{}, fn{};
  std::array<bool, 4> present{};
  for (const auto& pair : match.tp_pairs) {
    ++tp[static_cast<std::size_t>(gt_region[static_cast<std::size_t>(pair.gt_id)])];
    present[static_cast<std::size_t>(gt_region[static_cast<std::size_t>(pair.gt_id)])] = true;
    for (int p : pair.pred_ids)
      present[static_cast<std::size_t>(pred_region[static_cast<std::size_t>(p)])] = true;
  }
  for (int g : match.fn_gt_ids) {
    ++fn[static_cast<std::size_t>(gt_region[static_cast<std::size_t>(g)])];
    present[static_cast<std::size_t>(gt_region[static_cast<std::size_t>(g)])] = true;
  }
  for (int p : match.fp_pred_ids) {
    ++fp[static_cast<std::size_t>(pred_region[static_cast<std::size_t>(p)])];
    present[static_cast<std::size_t>(pred_region[static_cast<std::size_t>(p)])] = true;
  }

  for (std::size_t r = 0; r < 4; ++r) {
    if (!present[r]) continue;
    result.per_region[static_cast<AnatomicalRegion>(r)] = safe_f1(tp[r], fp[r], fn[r]);
  }
  return result;
}

PearsonResult pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson inputs must have equal length");
  if (x.size() < 3) throw std::invalid_argument("pearson requires at least 3 samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson requires non-constant inputs");

  PearsonResult result;
  result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2.0;
  const double r2 = result.r * result.r;
  if (r2 >= 1.0) {
    result.p_value = 0.0;
  } else {
    const double t2 = r2 * df / (1.0 - r2);
    result.p_value = ibeta_reg(df / 2.0, 0.5, df / (df + t2));
  }
  return result;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b, int n_comparisons) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon inputs must be paired (equal length)");
  if (n_comparisons < 1) throw std::invalid_argument("n_comparisons must be >= 1");

  std::vector<double> abs_diff;
  std::vector<int> sign;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0.0) continue;  // zero differences are dropped
    abs_diff.push_back(std::fabs(d));
    sign.push_back(d > 0.0 ? 1 : -1);
  }

  WilcoxonResult result;
  result.n_effective = static_cast<int>(abs_diff.size());
  if (abs_diff.empty()) {
    result.p_raw = 1.0;
    result.p_bonferroni = 1.0;
    return result;
  }

  const std::vector<double> ranks = average_ranks(abs_diff);
  // Ranks with average ties are multiples of 1/2; doubled they are exact ints.
  std::vector<std::int64_t> doubled(ranks.size());
  std::int64_t total_doubled = 0;
  std::int64_t w_doubled = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = static_cast<std::int64_t>(std::llround(2.0 * ranks[i]));
    total_doubled += doubled[i];
    if (sign[i] > 0) w_doubled += doubled[i];
  }
  result.w_statistic = static_cast<double>(w_doubled) / 2.0;

  const int n = result.n_effective;
  if (n <= 25) {
    result.exact_mode = true;
    std::vector<std::uint64_t> count(static_cast<std::size_t>(total_doubled) + 1, 0);
    count[0] = 1;
    for (std::int64_t r : doubled)
      for (std::int64_t s = total_doubled; s >= r; --s)
        count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
    const double denom = std::pow(2.0, n);
    std::uint64_t le = 0, ge = 0;
    for (std::int64_t s = 0; s <= total_doubled; ++s) {
      if (s <= w_doubled) le += count[static_cast<std::size_t>(s)];
      if (s >= w_doubled) ge += count[static_cast<std::size_t>(s)];
    }
    const double p_two =
        2.0 * std::min(static_cast<double>(le), static_cast<double>(ge)) / denom;
    result.p_raw = std::min(1.0, p_two);
  } else {
    const double nd = static_cast<double>(n);
    const double mu = nd * (nd + 1.0) / 4.0;
    double sigma2 = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
    // tie correction over groups of equal |difference|
    std::vector<double> sorted = abs_diff;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      sigma2 -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    if (sigma2 <= 0.0) {
      result.p_raw = 1.0;
    } else {
      const double w = result.w_statistic;
      double z = w - mu;
      z -= z > 0 ? 0.5 : (z < 0 ? -0.5 : 0.0);  // continuity correction
      result.p_raw = std::erfc(std::fabs(z) / std::sqrt(2.0 * sigma2));
    }
  }
  result.p_bonferroni = std::min(1.0, result.p_raw * static_cast<double>(n_comparisons));
  return result;
}

ScanMetrics evaluate_scan(const LabelVolume& pred, const LabelVolume& gt,
                          const BodyRegionPartition& partition) {
  const OverlapMetrics overlap = overlap_metrics(pred, gt);
  const ComponentLabeling gt_comp = label_components(gt);
  const ComponentLabeling pred_comp = label_components(pred);
  const InstanceMatch match = match_instances(gt_comp, pred_comp);
  const DetectionF1 f1 = detection_f1(match, gt_comp, pred_comp, partition);

  ScanMetrics m;
  m.dsc = overlap.dsc;
  m.voe = overlap.voe;
  m.arvd = overlap.arvd;
  m.tp = match.tp();
  m.fp = match.fp();
  m.fn = match.fn();
  m.f1 = f1.overall;
  m.per_region_f1 = f1.per_region;
  m.per_tumor_dsc = per_tumor_dsc(match, gt_comp, pred_comp);

  std::vector<std::int64_t> gt_sizes(static_cast<std::size_t>(gt_comp.count) + 1, 0);
  for (std::int32_t v : gt_comp.labels.data)
    if (v > 0) ++gt_sizes[static_cast<std::size_t>(v)];
  const double voxvol = gt.geometry.voxel_volume_mm3();
  for (const auto& pair : match.tp_pairs)
    m.per_tumor_gt_volume_mm3.push_back(
        static_cast<double>(gt_sizes[static_cast<std::size_t>(pair.gt_id)]) * voxvol);
  return m;
}

StudyReport build_study_report(const std::vector<StudyMethod>& methods) {
  StudyReport report;
  report.methods = methods;

  for (const auto& method : methods) {
    MethodAggregate agg;
    agg.method = method.method;
    std::vector<double> dsc, f1, voe, arvd, burden;
    std::vector<double> tumor_dsc, tumor_volume;
    for (const auto& scan : method.scans) {
      dsc.push_back(scan.metrics.dsc);
      f1.push_back(scan.metrics.f1);
      voe.push_back(scan.metrics.voe);
      arvd.push_back(scan.metrics.arvd);
      burden.push_back(scan.tumor_burden_mm3);
      for (std::size_t t = 0; t < scan.metrics.per_tumor_dsc.size(); ++t) {
        tumor_dsc.push_back(scan.metrics.per_tumor_dsc[t]);
        tumor_volume.push_back(scan.metrics.per_tumor_gt_volume_mm3[t]);
      }
    }
    agg.dsc_mean = mean_of(dsc);
    agg.dsc_std = std_of(dsc);
    agg.f1_mean = mean_of(f1);
    agg.f1_std = std_of(f1);
    agg.voe_mean = mean_of(voe);
    agg.voe_std = std_of(voe);
    agg.arvd_mean = mean_of(arvd);
    agg.arvd_std = std_of(arvd);
    agg.per_tumor_dsc_mean = mean_of(tumor_dsc);
    agg.per_tumor_dsc_std = std_of(tumor_dsc);
    const auto correlate = [](const std::vector<double>& x, const std::vector<double>& y,
                              double& r, double& p) {
      try {
        const PearsonResult res = pearson_r(x, y);
        r = res.r;
        p = res.p_value;
      } catch (const std::invalid_argument&) {
        r = std::numeric_limits<double>::quiet_NaN();
        p = std::numeric_limits<double>::quiet_NaN();
      }
    };
    correlate(dsc, burden, agg.r_scan_dsc_burden, agg.p_scan_dsc_burden);
    correlate(tumor_dsc, tumor_volume, agg.r_tumor_dsc_volume, agg.p_tumor_dsc_volume);
    report.aggregates.push_back(std::move(agg));
  }

  const std::size_t k = methods.size();
  const int n_pairs = static_cast<int>(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      // pair scans by id
      std::map<std::string, double> dsc_a;
      for (const auto& scan : methods[i].scans) dsc_a[scan.scan_id] = scan.metrics.dsc;
      std::vector<double> a, b;
      for (const auto& scan : methods[j].scans) {
        const auto it = dsc_a.find(scan.scan_id);
        if (it == dsc_a.end()) continue;
        a.push_back(it->second);
        b.push_back(scan.metrics.dsc);
      }
      MethodComparison cmp;
      cmp.method_a = methods[i].method;
      cmp.method_b = methods[j].method;
      if (!a.empty()) {
        const WilcoxonResult w = wilcoxon_signed_rank(a, b, std::max(1, n_pairs));
        cmp.p_raw = w.p_raw;
        cmp.p_bonferroni = w.p_bonferroni;
      }
      report.comparisons.push_back(std::move(cmp));
    }
  }
  return report;
}

std::string scan_metrics_table(const ScanMetrics& m) {
  std::ostringstream out;
  out << "metric              value\n";
  out << "dsc                 " << m.dsc << "\n";
  out << "voe                 " << m.voe << "\n";
  out << "arvd                " << m.arvd << "\n";
  out << "tp/fp/fn            " << m.tp << "/" << m.fp << "/" << m.fn << "\n";
  out << "f1                  " << m.f1 << "\n";
  double tumor_mean = 0.0;
  for (double d : m.per_tumor_dsc) tumor_mean += d;
  if (!m.per_tumor_dsc.empty()) tumor_mean /= static_cast<double>(m.per_tumor_dsc.size());
  out << "per-tumor dsc mean  " << tumor_mean << " (n=" << m.per_tumor_dsc.size() << ")\n";
  for (const auto& [region, f1] : m.per_region_f1)
    out << "f1[" << region_name(region) << "]" << std::string(std::max<int>(1, 17 - static_cast<int>(region_name(region).size())), ' ')
        << f1 << "\n";
  return out.str();
}

namespace {

nlohmann::json metrics_to_json(const ScanMetrics& m) {
  nlohmann::json per_region = nlohmann::json::object();
  for (const auto& [region, f1] : m.per_region_f1) per_region[region_name(region)] = f1;
  return nlohmann::json{
      {"dsc", m.dsc},
      {"voe", m.voe},
      {"arvd", std::isfinite(m.arvd) ? nlohmann::json(m.arvd) : nlohmann::json("inf")},
      {"tp", m.tp},
      {"fp", m.fp},
      {"fn", m.fn},
      {"f1", m.f1},
      {"per_tumor_dsc", m.per_tumor_dsc},
      {"per_tumor_gt_volume_mm3", m.per_tumor_gt_volume_mm3},
      {"per_region_f1", per_region},
  };
}

nlohmann::json nan_safe(double v) {
  if (std::isnan(v)) return nlohmann::json();
  if (std::isinf(v)) return nlohmann::json(v > 0 ? "inf" : "-inf");
  return nlohmann::json(v);
}

}  // namespace

std::string scan_metrics_json(const ScanMetrics& metrics) {
  return metrics_to_json(metrics).dump(2);
}

std::string study_report_json(const StudyReport& report) {
  nlohmann::json j;
  j["methods"] = nlohmann::json::array();
  for (const auto& method : report.methods) {
    nlohmann::json scans = nlohmann::json::array();
    for (const auto& scan : method.scans)
      scans.push_back({{"scan_id", scan.scan_id},
                       {"tumor_burden_mm3", scan.tumor_burden_mm3},
                       {"metrics", metrics_to_json(scan.metrics)}});
    j["methods"].push_back({{"method", method.method}, {"scans", std::move(scans)}});
  }
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates) {
    j["aggregates"].push_back({
        {"method", a.method},
        {"dsc_mean", a.dsc_mean},
        {"dsc_std", a.dsc_std},
        {"per_tumor_dsc_mean", a.per_tumor_dsc_mean},
        {"per_tumor_dsc_std", a.per_tumor_dsc_std},
        {"f1_mean", a.f1_mean},
        {"f1_std", a.f1_std},
        {"voe_mean", a.voe_mean},
        {"voe_std", a.voe_std},
        {"arvd_mean", nan_safe(a.arvd_mean)},
        {"arvd_std", nan_safe(a.arvd_std)},
        {"pearson_scan_dsc_vs_burden", {{"r", nan_safe(a.r_scan_dsc_burden)}, {"p", nan_safe(a.p_scan_dsc_burden)}}},
        {"pearson_tumor_dsc_vs_volume", {{"r", nan_safe(a.r_tumor_dsc_volume)}, {"p", nan_safe(a.p_tumor_dsc_volume)}}},
    });
  }
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : report.comparisons)
    j["comparisons"].push_back({{"method_a", c.method_a},
                                {"method_b", c.method_b},
                                {"p_raw", c.p_raw},
                                {"p_bonferroni", c.p_bonferroni}});
  return j.dump(2);
}

std::string study_report_table(const StudyReport& report) {
  std::ostringstream out;
  out << "method                 scanDSC(mean+/-sd)  tumorDSC(mean+/-sd)  F1      VOE     ARVD\n";
  for (const auto& a : report.aggregates) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-22s %.3f +/- %.3f     %.3f +/- %.3f      %.3f   %.3f   %.3f\n",
                  a.method.c_str(), a.dsc_mean, a.dsc_std, a.per_tumor_dsc_mean,
                  a.per_tumor_dsc_std, a.f1_mean, a.voe_mean, a.arvd_mean);
    out << line;
  }
  if (!report.comparisons.empty()) {
    out << "\npairwise Wilcoxon (per-scan DSC), Bonferroni-adjusted:\n";
    for (const auto& c : report.comparisons) {
      char line[256];
      std::snprintf(line, sizeof(line), "%s vs %s: p_raw=%.4g p_adj=%.4g\n",
                    c.method_a.c_str(), c.method_b.c_str(), c.p_raw, c.p_bonferroni);
      out << line;
    }
  }
  return out.str();
}

}  // namespace nfpipe
