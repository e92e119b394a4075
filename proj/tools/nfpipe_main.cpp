// nfpipe CLI: every pipeline stage as a subcommand plus the full `run` chain.
// Exit codes: 0 success, 2 config error, 3 data error, 4 stage failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nfpipe/concurrency.hpp"
#include "nfpipe/logging.hpp"
#include "nfpipe/nifti_io.hpp"
#include "nfpipe/pipeline.hpp"
#include "nfpipe/resample.hpp"

namespace fs = std::filesystem;
using namespace nfpipe;

namespace {

ThresholdPolicy resolve_threshold(const std::string& name, bool have_tau, double tau) {
  if (name == "high") {
    if (have_tau && tau != 0.5) throw ConfigError("threshold policy 'high' pins tau at 0.5");
    return ThresholdPolicy::high();
  }
  if (name == "low") return have_tau ? ThresholdPolicy::low(tau) : ThresholdPolicy::low();
  if (name == "custom") {
    if (!have_tau) throw ConfigError("threshold policy 'custom' requires --tau");
    return ThresholdPolicy::custom(tau);
  }
  throw ConfigError("unknown threshold policy: " + name);
}

ComponentLabeling read_components(const fs::path& path) {
  ComponentLabeling components;
  components.labels = read_label_volume(path);
  for (std::int32_t v : components.labels.data)
    components.count = std::max(components.count, v);
  return components;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw ConfigError("cannot create output directory: " + dir.string());
}

struct SimulateOpts {
  std::string output;
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int fp_blobs = -1;
  int members = -1;
};

void cmd_simulate(const SimulateOpts& opt) {
  PhantomConfig config =
      opt.config_path.empty() ? PhantomConfig{} : PhantomConfig::load(opt.config_path);
  if (opt.seed_set) config.seed = opt.seed;
  if (opt.fp_blobs >= 0) config.fp_blob_count = opt.fp_blobs;
  if (opt.members > 0) config.ensemble_members = opt.members;

  const PhantomBundle bundle = generate_phantom(config);
  const fs::path dir = opt.output;
  ensure_dir(dir);
  ensure_dir(dir / "ensemble");
  write_volume(bundle.image, dir / "image.nii.gz");
  write_volume(bundle.anatomy_raw, dir / "anatomy_raw.nii.gz");
  write_volume(bundle.gt_tumors, dir / "gt_tumors.nii.gz");
  for (std::size_t m = 0; m < bundle.ensemble.size(); ++m) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%02zu.nii.gz", m);
    write_volume(bundle.ensemble[m], dir / "ensemble" / name);
  }
  bundle.manifest.save(dir / "phantom_manifest.json");
  config.save(dir / "phantom_config.json");
  std::printf("phantom written to %s (%zu tumors, %zu fp blobs, %zu members)\n",
              dir.string().c_str(), bundle.manifest.tumors.size(),
              bundle.manifest.fp_blobs.size(), bundle.ensemble.size());
}

struct RefineOpts {
  std::string input;
  std::string output;
  std::string mapping;
  double zone_radius_mm = 10.0;
};

void cmd_refine(const RefineOpts& opt) {
  const LabelVolume raw = read_label_volume(opt.input);
  const LabelMappingConfig mapping = opt.mapping.empty()
                                         ? LabelMappingConfig::mrsegmentator_default()
                                         : LabelMappingConfig::load(opt.mapping);
  RefineResult refined = refine_anatomy_mask(raw, mapping);
  for (const auto& name : refined.unknown_sources)
    log::warn("anatomy mapping: unknown source label '" + name + "' sent to background");
  const LabelVolume with_zone = build_high_risk_zone(refined.refined, opt.zone_radius_mm);
  const BodyRegionPartition partition = extract_landmarks(with_zone);

  ensure_dir(opt.output);
  write_volume(with_zone, fs::path(opt.output) / "refined_anatomy.nii.gz");
  write_landmarks_json(partition, fs::path(opt.output) / "landmarks.json");
  std::printf("refined anatomy written to %s (landmarks: top=%d bottom=%d hips=%d)\n",
              opt.output.c_str(), partition.z_lung_top, partition.z_lung_bottom,
              partition.z_hip_bottom);
}

struct ExtractOpts {
  std::string ensemble_dir;
  std::string landmarks;
  std::string output;
  std::string threshold = "high";
  double tau = 0.0;
  bool tau_set = false;
  int min_voxels = 3;
};

void cmd_extract(const ExtractOpts& opt) {
  const ThresholdPolicy policy = resolve_threshold(opt.threshold, opt.tau_set, opt.tau);
  const BodyRegionPartition partition = read_landmarks_json(opt.landmarks);
  std::vector<ConfidenceVolume> members;
  for (const auto& file : list_ensemble_dir(opt.ensemble_dir))
    members.push_back(read_confidence_volume(file));
  const ConfidenceVolume fused = fuse_ensemble(members);
  const LabelVolume binary = binarize(fused, policy);
  const ComponentLabeling components = label_components(binary);
  const auto candidates = build_candidates(components, fused, partition, opt.min_voxels);

  ensure_dir(opt.output);
  const fs::path dir = opt.output;
  write_volume(fused, dir / "fused_confidence.nii.gz");
  write_volume(binary, dir / "binary_mask.nii.gz");
  write_volume(components.labels, dir / "components.nii.gz");
  write_candidates_json(candidates, dir / "candidates.json");
  std::printf("%d components, %zu candidates (tau=%g, min_voxels=%d) -> %s\n",
              components.count, candidates.size(), policy.tau, opt.min_voxels,
              opt.output.c_str());
}

struct FeaturesOpts {
  std::string image;
  std::string candidates_dir;
  std::string landmarks;
  std::string output;
  std::string gt;
  std::string scan_id = "scan";
  int min_voxels = 3;
  int bins = 32;
  int distance = 1;
};

void cmd_features(const FeaturesOpts& opt) {
  const ImageVolume image = read_image_volume(opt.image);
  const fs::path dir = opt.candidates_dir;
  const ComponentLabeling components = read_components(dir / "components.nii.gz");
  const ConfidenceVolume fused = read_confidence_volume(dir / "fused_confidence.nii.gz");
  const BodyRegionPartition partition = read_landmarks_json(opt.landmarks);
  const auto candidates = build_candidates(components, fused, partition, opt.min_voxels);

  LabelVolume gt;
  const bool have_gt = !opt.gt.empty();
  if (have_gt) gt = read_label_volume(opt.gt);

  FeatureMatrix matrix;
  for (const auto& candidate : candidates) {
    RowKey key;
    key.scan_id = opt.scan_id;
    key.candidate_id = candidate.id;
    key.region = candidate.region;
    if (have_gt) key.label = candidate_training_label(candidate, gt);
    matrix.add_row(key, candidate_feature_row(candidate, image, opt.bins, opt.distance));
  }
  if (matrix.columns.empty()) matrix.columns = feature_catalog();
  matrix.write_csv(opt.output);
  std::printf("%zu feature rows x %zu columns -> %s\n", matrix.n_rows(), matrix.n_cols(),
              opt.output.c_str());
}

struct SelectOpts {
  std::vector<std::string> features;
  std::string output;
  std::string pruned_output;
  int k = 10;
  double variance_eps = 1e-8;
  double rho_max = 0.90;
  std::uint64_t seed = 0;
  int n_trees = 200;
};

void cmd_select(const SelectOpts& opt) {
  std::vector<FeatureMatrix> parts;
  for (const auto& path : opt.features) parts.push_back(FeatureMatrix::read_csv(path));
  const FeatureMatrix matrix = concat_rows(parts);
  PruneResult pruned = prune_features(matrix, opt.variance_eps, opt.rho_max);
  ForestParams params;
  params.n_trees = opt.n_trees;
  const FeatureSelectionReport rfe = rfe_select(pruned.matrix, opt.k, params, opt.seed);

  FeatureSelectionReport report = pruned.report;
  report.selected_top_k = rfe.selected_top_k;
  report.seed = opt.seed;
  report.save(opt.output);
  if (!opt.pruned_output.empty()) pruned.matrix.write_csv(opt.pruned_output);
  std::printf("selection: %zu near-zero-variance + %zu correlated dropped, top %zu kept -> %s\n",
              report.dropped_near_zero_variance.size(), report.dropped_correlated.size(),
              report.selected_top_k.size(), opt.output.c_str());
}

struct TrainOpts {
  std::vector<std::string> features;
  std::string output;
  std::string selection;
  std::string fallback = "keep";
  ForestParams params;
};

void cmd_train(const TrainOpts& opt) {
  std::vector<FeatureMatrix> parts;
  for (const auto& path : opt.features) parts.push_back(FeatureMatrix::read_csv(path));
  FeatureMatrix matrix = concat_rows(parts);
  if (!opt.selection.empty()) {
    const FeatureSelectionReport report = FeatureSelectionReport::load(opt.selection);
    matrix = matrix.select_columns(report.selected_top_k);
  }

  RegionClassifierBundle bundle;
  bundle.fallback = opt.fallback == "drop" ? FallbackPolicy::drop : FallbackPolicy::keep;
  for (AnatomicalRegion region : kAllRegions) {
    FeatureMatrix sub;
    sub.columns = matrix.columns;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
      if (matrix.rows[r].region != region) continue;
      sub.rows.push_back(matrix.rows[r]);
      for (std::size_t c = 0; c < matrix.n_cols(); ++c) sub.values.push_back(matrix.at(r, c));
    }
    int positives = 0, negatives = 0;
    for (const auto& row : sub.rows) (row.label == 1 ? positives : negatives)++;
    if (sub.n_rows() < 2 || positives == 0 || negatives == 0) {
      log::warn("region " + region_name(region) +
                ": not trainable (rows=" + std::to_string(sub.n_rows()) +
                ", pos=" + std::to_string(positives) + "); fallback policy applies");
      continue;
    }
    RandomForestModel model = train_forest(sub, opt.params);
    model.region = region;
    std::printf("region %-9s: %zu rows (%d pos), oob accuracy %.3f\n",
                region_name(region).c_str(), sub.n_rows(), positives,
                model.meta.oob_accuracy);
    bundle.models[region] = std::move(model);
  }
  if (bundle.models.empty())
    throw DataError("no region had trainable data (need both classes present)");
  save_model(bundle, opt.output);
  std::printf("model bundle (%zu regions) -> %s\n", bundle.models.size(), opt.output.c_str());
}

struct ClassifyOpts {
  std::string features;
  std::string candidates_dir;
  std::string landmarks;
  std::string model;
  std::string output;
  double decision_threshold = 0.5;
  int min_voxels = 3;
};

void cmd_classify(const ClassifyOpts& opt) {
  const fs::path dir = opt.candidates_dir;
  const ComponentLabeling components = read_components(dir / "components.nii.gz");
  const ConfidenceVolume fused = read_confidence_volume(dir / "fused_confidence.nii.gz");
  const BodyRegionPartition partition = read_landmarks_json(opt.landmarks);
  const auto candidates = build_candidates(components, fused, partition, opt.min_voxels);
  const FeatureMatrix matrix = FeatureMatrix::read_csv(opt.features);
  const RegionClassifierBundle bundle = load_model(opt.model);

  const ClassificationResult cls = classify_candidates(
      candidates, matrix, bundle, opt.decision_threshold, components.labels.geometry);
  ensure_dir(opt.output);
  write_volume(cls.final_mask, fs::path(opt.output) / "final_mask.nii.gz");
  nlohmann::json j;
  j["kept_ids"] = cls.kept_ids;
  j["probabilities"] = nlohmann::json::object();
  for (const auto& [id, p] : cls.probabilities) j["probabilities"][std::to_string(id)] = p;
  std::ofstream out(fs::path(opt.output) / "classification.json");
  out << j.dump(2) << "\n";
  std::printf("kept %zu of %zu candidates -> %s\n", cls.kept_ids.size(), candidates.size(),
              opt.output.c_str());
}

struct EvaluateOpts {
  std::string pred;
  std::string gt;
  std::string landmarks;
  std::string study;
  std::string output;
  int workers = 1;
};

void cmd_evaluate(const EvaluateOpts& opt) {
  ensure_dir(opt.output);
  if (!opt.study.empty()) {
    std::ifstream in(opt.study);
    if (!in) throw DataError("cannot open study manifest: " + opt.study);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed study manifest: " + opt.study);

    struct Task {
      std::string method;
      std::string scan_id;
      std::string pred, gt, landmarks;
    };
    std::vector<Task> tasks;
    std::vector<std::string> method_order;
    for (const auto& mj : j.at("methods")) {
      method_order.push_back(mj.at("method").get<std::string>());
      for (const auto& sj : mj.at("scans"))
        tasks.push_back({mj.at("method").get<std::string>(),
                         sj.at("scan_id").get<std::string>(),
                         sj.at("pred").get<std::string>(), sj.at("gt").get<std::string>(),
                         sj.at("landmarks").get<std::string>()});
    }
    set_worker_count(opt.workers);
    std::vector<StudyScan> results(tasks.size());
    std::vector<std::string> result_method(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
      const Task& task = tasks[i];
      const LabelVolume pred = read_label_volume(task.pred);
      const LabelVolume gt = read_label_volume(task.gt);
      const BodyRegionPartition partition = read_landmarks_json(task.landmarks);
      StudyScan scan;
      scan.scan_id = task.scan_id;
      scan.metrics = evaluate_run(pred, gt, partition);
      std::int64_t gt_voxels = 0;
      for (std::int32_t v : gt.data) gt_voxels += v != 0;
      scan.tumor_burden_mm3 = static_cast<double>(gt_voxels) * gt.geometry.voxel_volume_mm3();
      results[i] = std::move(scan);
      result_method[i] = task.method;
    });

    std::vector<StudyMethod> methods;
    for (const auto& name : method_order) {
      StudyMethod method;
      method.method = name;
      for (std::size_t i = 0; i < tasks.size(); ++i)
        if (result_method[i] == name) method.scans.push_back(results[i]);
      methods.push_back(std::move(method));
    }
    const StudyReport report = build_study_report(methods);
    std::ofstream json_out(fs::path(opt.output) / "study_report.json");
    json_out << study_report_json(report) << "\n";
    std::ofstream table_out(fs::path(opt.output) / "study_report.txt");
    const std::string table = study_report_table(report);
    table_out << table;
    std::fputs(table.c_str(), stdout);
    return;
  }

  if (opt.pred.empty() || opt.gt.empty() || opt.landmarks.empty())
    throw ConfigError("evaluate needs either --study or all of --pred/--gt/--landmarks");
  const LabelVolume pred = read_label_volume(opt.pred);
  const LabelVolume gt = read_label_volume(opt.gt);
  const BodyRegionPartition partition = read_landmarks_json(opt.landmarks);
  const ScanMetrics metrics = evaluate_run(pred, gt, partition);
  std::ofstream json_out(fs::path(opt.output) / "metrics.json");
  json_out << scan_metrics_json(metrics) << "\n";
  const std::string table = scan_metrics_table(metrics);
  std::ofstream table_out(fs::path(opt.output) / "metrics.txt");
  table_out << table;
  std::fputs(table.c_str(), stdout);
}

struct RunOpts {
  std::string config;
  std::string output;
  std::string threshold;
  double tau = 0.0;
  bool tau_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_classify = false;
  int workers = 0;
};

void cmd_run(const RunOpts& opt) {
  PipelineConfig config = PipelineConfig::load(opt.config);
  if (!opt.output.empty()) config.paths.output_dir = opt.output;
  if (opt.seed_set) config.seed = opt.seed;
  if (!opt.threshold.empty() || opt.tau_set) {
    const std::string name = opt.threshold.empty() ? "custom" : opt.threshold;
    config.threshold = resolve_threshold(name, opt.tau_set, opt.tau);
  }
  if (opt.no_classify) config.classify = false;
  if (opt.workers > 0) config.workers = opt.workers;

  const RunResult result = run_pipeline(config);
  std::printf("pipeline complete: %zu candidates, final mask -> %s\n",
              result.candidates.size(),
              (result.output_dir / "final_mask.nii.gz").string().c_str());
  for (const auto& [stage, ms] : result.manifest.stage_timings_ms)
    std::printf("  %-14s %8.1f ms\n", stage.c_str(), ms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anatomy-informed neurofibroma segmentation pipeline (post-network stages)"};
  app.require_subcommand(1);

  SimulateOpts simulate_opts;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic whole-body phantom");
  simulate->add_option("--output", simulate_opts.output, "output directory")->required();
  simulate->add_option("--phantom-config", simulate_opts.config_path, "phantom config JSON");
  auto* seed_opt = simulate->add_option("--seed", simulate_opts.seed, "phantom seed");
  simulate->add_option("--fp-blobs", simulate_opts.fp_blobs, "override fp blob count");
  simulate->add_option("--members", simulate_opts.members, "override ensemble member count");
  simulate->callback([&] {
    simulate_opts.seed_set = seed_opt->count() > 0;
    cmd_simulate(simulate_opts);
  });

  RefineOpts refine_opts;
  auto* refine = app.add_subcommand("refine-anatomy",
                                    "refine a raw organ mask and add the NF high-risk zone");
  refine->add_option("--input", refine_opts.input, "raw multi-organ label map")->required();
  refine->add_option("--output", refine_opts.output, "output directory")->required();
  refine->add_option("--mapping", refine_opts.mapping, "mapping config (default: built-in)");
  refine->add_option("--zone-radius-mm", refine_opts.zone_radius_mm, "dilation radius (mm)");
  refine->callback([&] { cmd_refine(refine_opts); });

  ExtractOpts extract_opts;
  auto* extract = app.add_subcommand("extract-candidates",
                                     "fuse ensemble confidences and extract tumor candidates");
  extract->add_option("--ensemble-dir", extract_opts.ensemble_dir, "confidence mask directory")
      ->required();
  extract->add_option("--landmarks", extract_opts.landmarks, "landmarks JSON")->required();
  extract->add_option("--output", extract_opts.output, "output directory")->required();
  extract->add_option("--threshold", extract_opts.threshold, "low|high|custom");
  auto* extract_tau = extract->add_option("--tau", extract_opts.tau, "threshold override");
  extract->add_option("--min-voxels", extract_opts.min_voxels, "minimum candidate size");
  extract->callback([&] {
    extract_opts.tau_set = extract_tau->count() > 0;
    cmd_extract(extract_opts);
  });

  FeaturesOpts features_opts;
  auto* features = app.add_subcommand("features", "compute radiomic features per candidate");
  features->add_option("--image", features_opts.image, "intensity image")->required();
  features->add_option("--candidates-dir", features_opts.candidates_dir,
                       "extract-candidates output directory")
      ->required();
  features->add_option("--landmarks", features_opts.landmarks, "landmarks JSON")->required();
  features->add_option("--output", features_opts.output, "output CSV")->required();
  features->add_option("--gt", features_opts.gt, "ground-truth mask (adds training labels)");
  features->add_option("--scan-id", features_opts.scan_id, "scan id for row keys");
  features->add_option("--min-voxels", features_opts.min_voxels, "minimum candidate size");
  features->add_option("--bins", features_opts.bins, "GLCM/entropy bins");
  features->add_option("--distance", features_opts.distance, "GLCM pair distance");
  features->callback([&] { cmd_features(features_opts); });

  SelectOpts select_opts;
  auto* select = app.add_subcommand("select-features",
                                    "variance/Spearman pruning + RFE top-k selection");
  select->add_option("--features", select_opts.features, "feature CSV (labeled, repeatable)")
      ->required()
      ->take_all();
  select->add_option("--output", select_opts.output, "selection report JSON")->required();
  select->add_option("--pruned-output", select_opts.pruned_output, "write pruned CSV here");
  select->add_option("--k", select_opts.k, "features to keep");
  select->add_option("--variance-eps", select_opts.variance_eps, "near-zero-variance cutoff");
  select->add_option("--rho-max", select_opts.rho_max, "Spearman |rho| cutoff");
  select->add_option("--seed", select_opts.seed, "RFE seed");
  select->add_option("--n-trees", select_opts.n_trees, "trees per RFE forest");
  select->callback([&] { cmd_select(select_opts); });

  TrainOpts train_opts;
  auto* train = app.add_subcommand("train-classifier",
                                   "train region-specific random forests");
  train->add_option("--features", train_opts.features, "feature CSV (repeatable)")
      ->required()
      ->take_all();
  train->add_option("--output", train_opts.output, "model bundle JSON")->required();
  train->add_option("--selection", train_opts.selection, "selection report (subset columns)");
  train->add_option("--fallback", train_opts.fallback, "keep|drop for unmodeled regions");
  train->add_option("--n-trees", train_opts.params.n_trees, "number of trees");
  train->add_option("--max-depth", train_opts.params.max_depth, "max tree depth (0=unlimited)");
  train->add_option("--min-leaf", train_opts.params.min_samples_leaf, "min samples per leaf");
  train->add_option("--mtry", train_opts.params.mtry, "features per split (0=sqrt)");
  train->add_option("--seed", train_opts.params.seed, "training seed");
  train->add_flag("--no-bootstrap", [&](std::int64_t) { train_opts.params.bootstrap = false; },
                  "disable bootstrap resampling");
  train->callback([&] { cmd_train(train_opts); });

  ClassifyOpts classify_opts;
  auto* classify = app.add_subcommand("classify",
                                      "route candidates through region forests, emit final mask");
  classify->add_option("--features", classify_opts.features, "feature CSV")->required();
  classify->add_option("--candidates-dir", classify_opts.candidates_dir,
                       "extract-candidates output directory")
      ->required();
  classify->add_option("--landmarks", classify_opts.landmarks, "landmarks JSON")->required();
  classify->add_option("--model", classify_opts.model, "model bundle JSON")->required();
  classify->add_option("--output", classify_opts.output, "output directory")->required();
  classify->add_option("--decision-threshold", classify_opts.decision_threshold,
                       "keep-probability threshold");
  classify->add_option("--min-voxels", classify_opts.min_voxels, "minimum candidate size");
  classify->callback([&] { cmd_classify(classify_opts); });

  EvaluateOpts evaluate_opts;
  auto* evaluate = app.add_subcommand("evaluate", "segmentation + detection metrics");
  evaluate->add_option("--pred", evaluate_opts.pred, "predicted mask");
  evaluate->add_option("--gt", evaluate_opts.gt, "ground-truth mask");
  evaluate->add_option("--landmarks", evaluate_opts.landmarks, "landmarks JSON");
  evaluate->add_option("--study", evaluate_opts.study, "study manifest JSON (multi-method)");
  evaluate->add_option("--output", evaluate_opts.output, "output directory")->required();
  evaluate->add_option("--workers", evaluate_opts.workers, "parallel scan evaluations");
  evaluate->callback([&] { cmd_evaluate(evaluate_opts); });

  RunOpts run_opts;
  auto* run = app.add_subcommand("run", "full pipeline from a config file");
  run->add_option("--config", run_opts.config, "pipeline config JSON")->required();
  run->add_option("--output", run_opts.output, "override output directory");
  run->add_option("--threshold", run_opts.threshold, "low|high|custom");
  auto* run_tau = run->add_option("--tau", run_opts.tau, "threshold override");
  auto* run_seed = run->add_option("--seed", run_opts.seed, "pipeline seed");
  run->add_flag("--no-classify", run_opts.no_classify, "skip the classification stage");
  run->add_option("--workers", run_opts.workers, "worker threads");
  run->callback([&] {
    run_opts.tau_set = run_tau->count() > 0;
    run_opts.seed_set = run_seed->count() > 0;
    cmd_run(run_opts);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const StageError& e) {
    std::fprintf(stderr, "stage failure: %s\n", e.what());
    return 4;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
