// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nfpipe/evaluation.hpp"
#include "nfpipe/nifti_io.hpp"
#include "nfpipe/pipeline.hpp"
#include "nfpipe/rng.hpp"
#include "oracles/flood_fill.hpp"
#include "oracles/radiomics_oracles.hpp"
#include "oracles/stats_oracles.hpp"

using namespace nfpipe;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
};

LabelVolume binary_volume(std::array<int, 3> dims) {
  LabelVolume v;
  v.geometry.dims = dims;
  v.allocate(0);
  v.label_dictionary = {{0, "background"}, {1, "tumor"}};
  return v;
}

LabelVolume random_mask(std::array<int, 3> dims, std::uint64_t seed, double density) {
  LabelVolume v = binary_volume(dims);
  Rng rng(seed);
  for (auto& x : v.data) x = rng.uniform() < density ? 1 : 0;
  return v;
}

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "nfpipe_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---------------------------------------------------------------------------
// shared phantom -> candidate -> feature chain (in-memory, mirrors run_pipeline)
// ---------------------------------------------------------------------------

PhantomConfig acceptance_phantom(std::uint64_t seed, int fp_blobs) {
  PhantomConfig c;
  c.seed = seed;
  c.dims = {32, 128, 64};
  c.spacing = {4.0, 1.25, 1.25};
  c.fp_blob_count = fp_blobs;
  return c;
}

struct ChainOutput {
  BodyRegionPartition partition;
  std::vector<TumorCandidate> candidates;
  FeatureMatrix features;
  LabelVolume candidate_mask;  // union of candidates (pre-classification)
};

ChainOutput run_chain(const PhantomBundle& bundle, double tau, const std::string& scan_id) {
  ChainOutput out;
  const RefineResult refined =
      refine_anatomy_mask(bundle.anatomy_raw, LabelMappingConfig::mrsegmentator_default());
  const LabelVolume with_zone = build_high_risk_zone(refined.refined, 10.0);
  out.partition = extract_landmarks(with_zone);

  const ConfidenceVolume fused = fuse_ensemble(bundle.ensemble);
  const LabelVolume mask = binarize(fused, ThresholdPolicy::custom(tau));
  const ComponentLabeling components = label_components(mask);
  out.candidates = build_candidates(components, fused, out.partition, 3);

  out.candidate_mask = make_binary_volume(mask.geometry, "tumor");
  for (const auto& c : out.candidates)
    for (const auto& [i, j, k] : c.voxels) out.candidate_mask.at(i, j, k) = 1;

  for (const auto& candidate : out.candidates) {
    RowKey key;
    key.scan_id = scan_id;
    key.candidate_id = candidate.id;
    key.region = candidate.region;
    key.label = candidate_training_label(candidate, bundle.gt_tumors);
    out.features.add_row(key, candidate_feature_row(candidate, bundle.image, 32, 1));
  }
  if (out.features.columns.empty()) out.features.columns = feature_catalog();
  return out;
}

fs::path g_bundle_path;  // trained by criterion 8, reused by criterion 10

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

Check criterion_1_metric_identities() {
  Check check;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed * 11 + 1);
    const double da = seed % 50 == 0 ? 0.0 : 0.05 + 0.4 * rng.uniform();
    const double db = seed % 70 == 0 ? 0.0 : 0.05 + 0.4 * rng.uniform();
    const LabelVolume a = random_mask({16, 16, 16}, 2 * seed, da);
    const LabelVolume b = random_mask({16, 16, 16}, 2 * seed + 1, db);
    const OverlapMetrics ab = overlap_metrics(a, b);
    const OverlapMetrics ba = overlap_metrics(b, a);
    check.require(ab.dsc == ba.dsc, "dsc must be symmetric");
    check.require(std::fabs(ab.voe - (1.0 - ab.dsc / (2.0 - ab.dsc))) <= 1e-12,
                  "voe identity violated beyond 1e-12");
  }
  const OverlapMetrics empty =
      overlap_metrics(binary_volume({16, 16, 16}), binary_volume({16, 16, 16}));
  check.require(empty.dsc == 1.0 && empty.voe == 0.0 && empty.arvd == 0.0,
                "empty-empty convention violated");
  LabelVolume pred = binary_volume({16, 16, 16});
  pred.at(0, 0, 0) = 1;
  check.require(std::isinf(overlap_metrics(pred, binary_volume({16, 16, 16})).arvd),
                "empty-gt arvd must be +inf");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.require(elapsed < 5.0, "runtime budget exceeded (5 s)");
  std::ostringstream detail;
  detail << "1000 mask pairs in " << elapsed << " s";
  if (check.ok) check.detail = detail.str();
  return check;
}

Check criterion_2_component_oracle() {
  Check check;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(7000 + seed);
    const LabelVolume mask = random_mask({16, 16, 16}, 9000 + seed, 0.05 + 0.6 * rng.uniform());
    const ComponentLabeling ours = label_components(mask);
    const ComponentLabeling oracle = oracles::flood_fill_components(mask);
    check.require(ours.count == oracle.count, "component count mismatch");
    check.require(ours.labels.data == oracle.labels.data, "component ids mismatch");
    if (!check.ok) break;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.require(elapsed < 10.0, "runtime budget exceeded (10 s)");
  std::ostringstream detail;
  detail << "500 masks, exact match, " << elapsed << " s";
  if (check.ok) check.detail = detail.str();
  return check;
}

Check criterion_3_radiomics_oracles() {
  Check check;

  // digital ball r=8, unit spacing: sphericity within [0.9, 1.1] of the oracle
  std::vector<std::array<int, 3>> ball;
  for (int i = -8; i <= 8; ++i)
    for (int j = -8; j <= 8; ++j)
      for (int k = -8; k <= 8; ++k)
        if (i * i + j * j + k * k <= 64) ball.push_back({i + 9, j + 9, k + 9});
  TumorCandidate ball_candidate;
  ball_candidate.id = 1;
  ball_candidate.voxels = ball;
  ball_candidate.bbox.lo = {1, 1, 1};
  ball_candidate.bbox.hi = {17, 17, 17};
  VolumeGeometry ball_geometry;
  ball_geometry.dims = {19, 19, 19};
  const FeatureVector ball_shape = shape_features(ball_candidate, ball_geometry);
  const auto oracle = oracles::shape_oracle(ball, ball_geometry.spacing);
  check.require(close_rel(ball_shape.value("volume_mm3"), oracle.volume_mm3, 1e-12),
                "ball volume differs from brute-force oracle");
  check.require(close_rel(ball_shape.value("surface_area_mm2"), oracle.surface_area_mm2, 1e-12),
                "ball surface differs from brute-force oracle");
  const double ratio = ball_shape.value("sphericity") / oracle.sphericity;
  check.require(ratio >= 0.9 && ratio <= 1.1, "ball sphericity outside [0.9, 1.1] of oracle");

  // constant-region GLCM: exact degenerate values
  ImageVolume flat;
  flat.geometry.dims = {5, 5, 5};
  flat.allocate(2.5f);
  TumorCandidate cube;
  cube.id = 2;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      for (int k = 1; k <= 3; ++k) cube.voxels.push_back({i, j, k});
  cube.bbox.lo = {1, 1, 1};
  cube.bbox.hi = {3, 3, 3};
  const FeatureVector glcm = glcm_features(cube, flat, 32, 1);
  check.require(glcm.value("glcm_joint_energy") == 1.0, "constant glcm joint_energy != 1");
  check.require(glcm.value("glcm_contrast") == 0.0, "constant glcm contrast != 0");
  check.require(glcm.value("glcm_joint_entropy") == 0.0, "constant glcm entropy != 0");

  // first-order dual-implementation oracle on 100 seeded candidates
  Rng rng(123);
  for (int trial = 0; trial < 100 && check.ok; ++trial) {
    ImageVolume image;
    image.geometry.dims = {10, 10, 10};
    image.geometry.spacing = {2.0, 0.5, 0.5};
    image.allocate();
    std::set<std::array<int, 3>> used;
    TumorCandidate c;
    c.id = trial;
    std::vector<double> values;
    const int n = 5 + static_cast<int>(rng.uniform_int(150));
    while (static_cast<int>(c.voxels.size()) < n) {
      std::array<int, 3> v = {rng.uniform_index(10), rng.uniform_index(10),
                              rng.uniform_index(10)};
      if (!used.insert(v).second) continue;
      c.voxels.push_back(v);
      const float x = static_cast<float>(rng.normal(0.4, 0.25));
      image.at(v[0], v[1], v[2]) = x;
      values.push_back(static_cast<double>(x));
    }
    c.bbox.lo = c.bbox.hi = c.voxels.front();
    for (const auto& v : c.voxels)
      for (int a = 0; a < 3; ++a) {
        c.bbox.lo[a] = std::min(c.bbox.lo[a], v[a]);
        c.bbox.hi[a] = std::max(c.bbox.hi[a], v[a]);
      }
    const FeatureVector fo = first_order_features(c, image);
    const auto dual = oracles::first_order_oracle(values, image.geometry.voxel_volume_mm3());
    const std::vector<std::pair<std::string, double>> expected = {
        {"mean", dual.mean}, {"median", dual.median}, {"minimum", dual.minimum},
        {"maximum", dual.maximum}, {"range", dual.range}, {"variance", dual.variance},
        {"std_dev", dual.std_dev}, {"skewness", dual.skewness}, {"kurtosis", dual.kurtosis},
        {"energy", dual.energy}, {"total_energy", dual.total_energy},
        {"root_mean_square", dual.root_mean_square},
        {"mean_absolute_deviation", dual.mean_absolute_deviation},
        {"interquartile_range", dual.interquartile_range},
        {"percentile_10", dual.percentile_10}, {"percentile_90", dual.percentile_90},
        {"entropy", dual.entropy}, {"uniformity", dual.uniformity}};
    for (const auto& [name, value] : expected)
      check.require(close_rel(fo.value(name), value, 1e-9),
                    "first-order feature '" + name + "' beyond 1e-9 of the dual oracle");
  }
  if (check.ok)
    check.detail = "ball ratio " + std::to_string(ratio) + ", 100 dual-oracle candidates";
  return check;
}

Check criterion_4_selection_workflow() {
  Check check;
  const auto start = std::chrono::steady_clock::now();

  // duplicated and constant columns always dropped (randomized trials)
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix m;
    m.columns = {"a", "constant", "b", "dup_of_a"};
    const int rows = 10 + static_cast<int>(rng.uniform_int(40));
    for (int r = 0; r < rows; ++r) {
      RowKey key;
      key.scan_id = "t";
      key.candidate_id = r;
      m.rows.push_back(key);
      const double a = rng.normal(0.0, 1.0);
      m.values.push_back(a);
      m.values.push_back(7.5);
      m.values.push_back(rng.normal(0.0, 1.0));
      m.values.push_back(a);
    }
    const PruneResult pruned = prune_features(m, 1e-8, 0.90);
    const auto& dropped_var = pruned.report.dropped_near_zero_variance;
    check.require(std::find(dropped_var.begin(), dropped_var.end(), "constant") !=
                      dropped_var.end(),
                  "constant column not dropped");
    bool dup_dropped = false;
    for (const auto& d : pruned.report.dropped_correlated)
      dup_dropped = dup_dropped || d.dropped == "dup_of_a";
    check.require(dup_dropped, "duplicated column not dropped");
  }

  // RFE recovers the 3 informative features for 10 of 10 seeds
  for (std::uint64_t seed = 0; seed < 10 && check.ok; ++seed) {
    Rng gen(9100 + seed);
    FeatureMatrix m;
    for (int c = 0; c < 3; ++c) m.columns.push_back("informative_" + std::to_string(c));
    for (int c = 0; c < 20; ++c) m.columns.push_back("noise_" + std::to_string(c));
    for (int r = 0; r < 200; ++r) {
      const int label = r % 2;
      RowKey key;
      key.scan_id = "synthetic";
      key.candidate_id = r;
      key.label = label;
      m.rows.push_back(key);
      for (int c = 0; c < 3; ++c) m.values.push_back(gen.normal(label == 1 ? 3.0 : 0.0, 1.0));
      for (int c = 0; c < 20; ++c) m.values.push_back(gen.normal(0.0, 1.0));
    }
    ForestParams params;
    params.n_trees = 100;
    const FeatureSelectionReport report = rfe_select(m, 10, params, seed);
    for (const char* name : {"informative_0", "informative_1", "informative_2"})
      check.require(std::find(report.selected_top_k.begin(), report.selected_top_k.end(),
                              std::string(name)) != report.selected_top_k.end(),
                    std::string("seed ") + std::to_string(seed) + " lost " + name);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.require(elapsed < 60.0, "runtime budget exceeded (60 s)");
  std::ostringstream detail;
  detail << "20 prune trials + 10/10 RFE seeds in " << elapsed << " s";
  if (check.ok) check.detail = detail.str();
  return check;
}

Check criterion_5_forest_quality() {
  Check check;
  Rng rng(66);
  FeatureMatrix m;
  m.columns = {"feature_0", "noise_0", "noise_1", "noise_2"};
  for (int r = 0; r < 200; ++r) {
    const int label = r % 2;
    RowKey key;
    key.scan_id = "sep";
    key.candidate_id = r;
    key.label = label;
    m.rows.push_back(key);
    m.values.push_back(label == 1 ? rng.uniform(2.0, 3.0) : rng.uniform(0.0, 1.0));
    for (int c = 0; c < 3; ++c) m.values.push_back(rng.normal(0.0, 1.0));
  }
  ForestParams params;
  params.n_trees = 200;
  params.seed = 99;
  RandomForestModel model = train_forest(m, params);
  check.require(model.meta.oob_accuracy >= 0.95,
                "oob accuracy " + std::to_string(model.meta.oob_accuracy) + " < 0.95");

  // seed-fixed retrain reproducibility
  const RandomForestModel retrain = train_forest(m, params);
  bool identical = retrain.trees.size() == model.trees.size();
  for (std::size_t t = 0; identical && t < model.trees.size(); ++t) {
    identical = model.trees[t].nodes.size() == retrain.trees[t].nodes.size();
    for (std::size_t n = 0; identical && n < model.trees[t].nodes.size(); ++n) {
      const auto& x = model.trees[t].nodes[n];
      const auto& y = retrain.trees[t].nodes[n];
      identical = x.feature == y.feature && x.threshold == y.threshold &&
                  x.left == y.left && x.right == y.right && x.count0 == y.count0 &&
                  x.count1 == y.count1;
    }
  }
  check.require(identical, "seed-fixed retrain is not bit-identical");

  // save/load/predict round trip is bit-exact
  model.region = AnatomicalRegion::abdomen;
  RegionClassifierBundle bundle;
  bundle.models[AnatomicalRegion::abdomen] = model;
  const fs::path path = work_dir() / "criterion5_bundle.json";
  save_model(bundle, path);
  const RegionClassifierBundle loaded = load_model(path);
  const auto& restored = loaded.models.at(AnatomicalRegion::abdomen);
  Rng probe(661);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> values(m.n_cols());
    for (auto& v : values) v = probe.uniform(-1.0, 4.0);
    check.require(predict_proba_values(model, values.data()) ==
                      predict_proba_values(restored, values.data()),
                  "round-tripped prediction differs bitwise");
  }
  if (check.ok)
    check.detail = "oob=" + std::to_string(model.meta.oob_accuracy) + ", round trip exact";
  return check;
}

Check criterion_6_wilcoxon_exactness() {
  Check check;
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(10));  // n <= 12
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      // coarse values provoke ties and zero differences
      a[static_cast<std::size_t>(i)] = std::round(rng.uniform(-4.0, 4.0));
      b[static_cast<std::size_t>(i)] = std::round(rng.uniform(-4.0, 4.0));
    }
    const WilcoxonResult ours = wilcoxon_signed_rank(a, b, 1);
    const double oracle = oracles::wilcoxon_enumeration(a, b);
    check.require(ours.p_raw == oracle,
                  "exact p mismatch at trial " + std::to_string(trial) + ": " +
                      std::to_string(ours.p_raw) + " vs " + std::to_string(oracle));
    if (!check.ok) break;
  }
  if (check.ok) check.detail = "100 seeded cases, exact equality";
  return check;
}

Check criterion_7_noiseless_identity() {
  Check check;
  PhantomConfig phantom = acceptance_phantom(501, 0);
  phantom.noise_sigma = 0.0;
  phantom.blur_sigma_mm = 0.0;
  const PhantomBundle bundle = generate_phantom(phantom);

  const fs::path data = work_dir() / "criterion7_data";
  fs::create_directories(data / "ensemble");
  write_volume(bundle.image, data / "image.nii.gz");
  write_volume(bundle.anatomy_raw, data / "anatomy_raw.nii.gz");
  write_volume(bundle.gt_tumors, data / "gt_tumors.nii.gz");
  for (std::size_t m = 0; m < bundle.ensemble.size(); ++m)
    write_volume(bundle.ensemble[m],
                 data / "ensemble" / ("member_" + std::to_string(m) + ".nii.gz"));

  PipelineConfig config;
  config.paths.image = data / "image.nii.gz";
  config.paths.anatomy_raw = data / "anatomy_raw.nii.gz";
  config.paths.ensemble_dir = data / "ensemble";
  config.paths.gt = data / "gt_tumors.nii.gz";
  config.paths.output_dir = work_dir() / "criterion7_out";
  config.classify = false;
  const RunResult result = run_pipeline(config);

  const ScanMetrics metrics =
      evaluate_run(result.final_mask, bundle.gt_tumors, result.partition);
  check.require(metrics.dsc == 1.0, "noiseless per-scan DSC != 1.0 exactly");
  check.require(result.partition.z_lung_top == bundle.manifest.landmarks.z_lung_top &&
                    result.partition.z_lung_bottom == bundle.manifest.landmarks.z_lung_bottom &&
                    result.partition.z_hip_bottom == bundle.manifest.landmarks.z_hip_bottom,
                "landmarks differ from phantom construction");

  // the high-risk zone matches a brute-force physical-ball dilation on a
  // smaller phantom (exhaustive distance checks)
  PhantomConfig small = phantom;
  small.dims = {16, 64, 32};
  small.seed = 502;
  const PhantomBundle small_bundle = generate_phantom(small);
  const RefineResult refined = refine_anatomy_mask(small_bundle.anatomy_raw,
                                                   LabelMappingConfig::mrsegmentator_default());
  const LabelVolume zone = build_high_risk_zone(refined.refined, 10.0);
  const auto& g = zone.geometry;
  std::vector<std::array<int, 3>> seeds;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const std::int32_t lbl = refined.refined.at(i, j, k);
        if (lbl == 2 || lbl == 7) seeds.push_back({i, j, k});
      }
  bool zone_ok = true;
  std::size_t zone_voxels = 0;
  for (int i = 0; i < g.dims[0] && zone_ok; ++i)
    for (int j = 0; j < g.dims[1] && zone_ok; ++j)
      for (int k = 0; k < g.dims[2] && zone_ok; ++k) {
        const bool in_zone = zone.at(i, j, k) == 12;
        if (refined.refined.at(i, j, k) != 0) {
          zone_ok = !in_zone;  // organs never overwritten
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : seeds) {
          const double dx = (i - s[0]) * g.spacing[0];
          const double dy = (j - s[1]) * g.spacing[1];
          const double dz = (k - s[2]) * g.spacing[2];
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        zone_ok = in_zone == (best <= 100.0);
        zone_voxels += in_zone;
      }
  check.require(zone_ok, "high-risk zone differs from the 10mm physical ball dilation");
  check.require(zone_voxels > 0, "high-risk zone is empty");
  if (check.ok)
    check.detail = "dsc=1.0 exact, landmarks match, zone verified on " +
                   std::to_string(zone_voxels) + " voxels";
  return check;
}

Check criterion_8_classifier_efficacy() {
  Check check;

  // train region forests on 10 phantoms with textured FP blobs
  std::vector<FeatureMatrix> training;
  for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
    const PhantomBundle bundle = generate_phantom(acceptance_phantom(seed, 5));
    training.push_back(run_chain(bundle, 0.5, "train_" + std::to_string(seed)).features);
  }
  FeatureMatrix all_rows = concat_rows(training);
  const PruneResult pruned = prune_features(all_rows, 1e-8, 0.90);
  ForestParams rfe_params;
  rfe_params.n_trees = 100;
  const FeatureSelectionReport selection = rfe_select(pruned.matrix, 10, rfe_params, 7);
  const FeatureMatrix selected = all_rows.select_columns(selection.selected_top_k);

  RegionClassifierBundle bundle;
  ForestParams params;
  params.n_trees = 200;
  params.seed = 11;
  for (AnatomicalRegion region : kAllRegions) {
    FeatureMatrix sub;
    sub.columns = selected.columns;
    for (std::size_t r = 0; r < selected.n_rows(); ++r) {
      if (selected.rows[r].region != region) continue;
      sub.rows.push_back(selected.rows[r]);
      for (std::size_t c = 0; c < selected.n_cols(); ++c) sub.values.push_back(selected.at(r, c));
    }
    int pos = 0, neg = 0;
    for (const auto& row : sub.rows) (row.label == 1 ? pos : neg)++;
    if (sub.n_rows() < 2 || pos == 0 || neg == 0) continue;
    RandomForestModel model = train_forest(sub, params);
    model.region = region;
    bundle.models[region] = std::move(model);
  }
  check.require(!bundle.models.empty(), "no region model was trainable");
  g_bundle_path = work_dir() / "criterion8_bundle.json";
  save_model(bundle, g_bundle_path);

  // evaluate on 20 held-out phantoms
  std::int64_t fp_before = 0, fp_after = 0, tp_before = 0, tp_after = 0;
  double f1_before = 0.0, f1_after = 0.0;
  for (std::uint64_t seed = 2000; seed < 2020; ++seed) {
    const PhantomBundle phantom = generate_phantom(acceptance_phantom(seed, 5));
    const ChainOutput chain = run_chain(phantom, 0.5, "eval_" + std::to_string(seed));
    const ComponentLabeling gt = label_components(phantom.gt_tumors);

    const ComponentLabeling base = label_components(chain.candidate_mask);
    const InstanceMatch base_match = match_instances(gt, base);
    fp_before += base_match.fp();
    tp_before += base_match.tp();
    f1_before += detection_f1(base_match, gt, base, chain.partition).overall;

    const ClassificationResult cls =
        classify_candidates(chain.candidates, chain.features, bundle, 0.5,
                            chain.candidate_mask.geometry);
    const ComponentLabeling final_comp = label_components(cls.final_mask);
    const InstanceMatch final_match = match_instances(gt, final_comp);
    fp_after += final_match.fp();
    tp_after += final_match.tp();
    f1_after += detection_f1(final_match, gt, final_comp, chain.partition).overall;
  }
  f1_before /= 20.0;
  f1_after /= 20.0;
  const double fp_removed =
      fp_before > 0 ? 1.0 - static_cast<double>(fp_after) / static_cast<double>(fp_before) : 1.0;
  const double tp_retained =
      tp_before > 0 ? static_cast<double>(tp_after) / static_cast<double>(tp_before) : 1.0;

  check.require(fp_removed >= 0.80, "removed only " + std::to_string(100 * fp_removed) +
                                        "% of FP instances (need >= 80%)");
  check.require(tp_retained >= 0.95, "retained only " + std::to_string(100 * tp_retained) +
                                         "% of TP instances (need >= 95%)");
  check.require(f1_after - f1_before >= 0.15,
                "F1 gain " + std::to_string(f1_after - f1_before) + " < 0.15");
  std::ostringstream detail;
  detail << "fp removed " << 100 * fp_removed << "%, tp retained " << 100 * tp_retained
         << "%, F1 " << f1_before << " -> " << f1_after;
  if (check.ok) check.detail = detail.str();
  return check;
}

Check criterion_9_threshold_monotonicity() {
  Check check;
  for (std::uint64_t seed = 3100; seed < 3105; ++seed) {
    const PhantomBundle bundle = generate_phantom(acceptance_phantom(seed, 4));
    const ConfidenceVolume fused = fuse_ensemble(bundle.ensemble);
    const LabelVolume high = binarize(fused, ThresholdPolicy::high());
    const LabelVolume low = binarize(fused, ThresholdPolicy::low());
    for (std::size_t i = 0; i < high.data.size(); ++i) {
      if (high.data[i] != 0 && low.data[i] == 0) {
        check.require(false, "foreground(0.5) escaped foreground(0.25)");
        break;
      }
    }
    if (!check.ok) break;
  }
  if (check.ok) check.detail = "mask(0.5) subset of mask(0.25) on 5 noisy phantoms";
  return check;
}

Check criterion_10_determinism() {
  Check check;
  PhantomConfig phantom = acceptance_phantom(3000, 3);
  const PhantomBundle bundle = generate_phantom(phantom);
  const fs::path data = work_dir() / "criterion10_data";
  fs::create_directories(data / "ensemble");
  write_volume(bundle.image, data / "image.nii.gz");
  write_volume(bundle.anatomy_raw, data / "anatomy_raw.nii.gz");
  write_volume(bundle.gt_tumors, data / "gt_tumors.nii.gz");
  for (std::size_t m = 0; m < bundle.ensemble.size(); ++m)
    write_volume(bundle.ensemble[m],
                 data / "ensemble" / ("member_" + std::to_string(m) + ".nii.gz"));

  PipelineConfig config;
  config.paths.image = data / "image.nii.gz";
  config.paths.anatomy_raw = data / "anatomy_raw.nii.gz";
  config.paths.ensemble_dir = data / "ensemble";
  config.paths.gt = data / "gt_tumors.nii.gz";
  config.seed = 4242;
  if (!g_bundle_path.empty() && fs::exists(g_bundle_path)) {
    config.paths.model_bundle = g_bundle_path;
    config.classify = true;
  } else {
    config.classify = false;
  }

  config.paths.output_dir = work_dir() / "criterion10_a";
  const RunResult run_a = run_pipeline(config);
  config.paths.output_dir = work_dir() / "criterion10_b";
  const RunResult run_b = run_pipeline(config);

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(work_dir() / "criterion10_a")) {
    if (entry.path().filename() == "manifest.json") continue;  // carries timings
    const fs::path other = work_dir() / "criterion10_b" / entry.path().filename();
    check.require(fs::exists(other), "missing artifact " + entry.path().filename().string());
    if (!check.ok) break;
    check.require(fnv1a64_file(entry.path()) == fnv1a64_file(other),
                  "artifact differs: " + entry.path().filename().string());
    ++compared;
  }
  check.require(compared >= 8, "too few artifacts compared");
  check.require(run_a.manifest.output_hashes == run_b.manifest.output_hashes,
                "manifest output hashes differ between runs");
  if (check.ok)
    check.detail = std::to_string(compared) + " artifacts byte-identical (classify=" +
                   (config.classify ? std::string("on") : std::string("off")) + ")";
  return check;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Check()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "metric-identities", criterion_1_metric_identities},
      {2, "component-labeling-oracle", criterion_2_component_oracle},
      {3, "radiomics-oracles", criterion_3_radiomics_oracles},
      {4, "selection-workflow", criterion_4_selection_workflow},
      {5, "forest-quality", criterion_5_forest_quality},
      {6, "wilcoxon-exactness", criterion_6_wilcoxon_exactness},
      {7, "end-to-end-noiseless-identity", criterion_7_noiseless_identity},
      {8, "end-to-end-classifier-efficacy", criterion_8_classifier_efficacy},
      {9, "threshold-monotonicity", criterion_9_threshold_monotonicity},
      {10, "determinism", criterion_10_determinism},
  };

  const auto suite_start = std::chrono::steady_clock::now();
  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check check;
    try {
      check = criterion.body();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %-32s (%.2f s)%s%s\n", check.ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, elapsed, check.detail.empty() ? "" : " - ",
                check.detail.c_str());
    std::fflush(stdout);
    failures += check.ok ? 0 : 1;
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
  const bool on_budget = total < 600.0;
  std::printf("[%s] total runtime %.1f s (budget 600 s); %d of %zu criteria failed\n",
              on_budget ? "PASS" : "FAIL", total, failures, criteria.size());
  return failures == 0 && on_budget ? 0 : 1;
}
