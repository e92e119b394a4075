#include "nfpipe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <json.hpp>

#include "nfpipe/concurrency.hpp"
#include "nfpipe/logging.hpp"
#include "nfpipe/nifti_io.hpp"
#include "nfpipe/resample.hpp"

namespace nfpipe {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ThresholdPolicy threshold_from_json(const nlohmann::json& j) {
  const std::string policy = j.value("policy", "high");
  if (policy == "high") {
    if (j.contains("tau") && j.at("tau").get<double>() != 0.5)
      throw ConfigError("threshold policy 'high' pins tau at 0.5");
    return ThresholdPolicy::high();
  }
  if (policy == "low") {
    return ThresholdPolicy::low(j.value("tau", 0.25));
  }
  if (policy == "custom") {
    if (!j.contains("tau")) throw ConfigError("threshold policy 'custom' requires tau");
    return ThresholdPolicy::custom(j.at("tau").get<double>());
  }
  throw ConfigError("unknown threshold policy: " + policy);
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    threshold.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (paths.output_dir.empty()) throw ConfigError("output_dir is required");
  if (min_voxels < 1) throw ConfigError("min_voxels must be >= 1");
  if (glcm_bins < 2) throw ConfigError("radiomics bins must be >= 2");
  if (glcm_distance < 1) throw ConfigError("radiomics distance must be >= 1");
  if (!(dilation_radius_mm > 0.0)) throw ConfigError("dilation_radius_mm must be > 0");
  if (decision_threshold < 0.0 || decision_threshold > 1.0)
    throw ConfigError("decision_threshold must lie in [0, 1]");
  if (top_k < 1) throw ConfigError("selection k must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (target_spacing)
    for (double s : *target_spacing)
      if (!(s > 0.0)) throw ConfigError("target_spacing must be > 0 per axis");
}

std::string PipelineConfig::to_json_string() const {
  nlohmann::json j;
  j["paths"] = {{"image", paths.image.string()},
                {"anatomy_raw", paths.anatomy_raw.string()},
                {"ensemble_dir", paths.ensemble_dir.string()},
                {"gt", paths.gt.string()},
                {"output_dir", paths.output_dir.string()},
                {"model_bundle", paths.model_bundle.string()},
                {"mapping", paths.mapping.string()}};
  if (target_spacing) j["target_spacing"] = *target_spacing;
  j["dilation_radius_mm"] = dilation_radius_mm;
  j["threshold"] = {{"policy", threshold.name}, {"tau", threshold.tau}};
  j["min_voxels"] = min_voxels;
  j["radiomics"] = {{"bins", glcm_bins}, {"distance", glcm_distance}};
  j["selection"] = {{"variance_eps", variance_eps}, {"rho_max", rho_max}, {"k", top_k}};
  j["forest"] = {{"n_trees", forest.n_trees},
                 {"max_depth", forest.max_depth},
                 {"min_samples_leaf", forest.min_samples_leaf},
                 {"mtry", forest.mtry},
                 {"bootstrap", forest.bootstrap},
                 {"seed", forest.seed}};
  j["decision_threshold"] = decision_threshold;
  j["seed"] = seed;
  j["classify"] = classify;
  j["workers"] = workers;
  j["scan_id"] = scan_id;
  return j.dump(2);
}

PipelineConfig PipelineConfig::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed pipeline config JSON");
  PipelineConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.image = p.value("image", "");
      c.paths.anatomy_raw = p.value("anatomy_raw", "");
      c.paths.ensemble_dir = p.value("ensemble_dir", "");
      c.paths.gt = p.value("gt", "");
      c.paths.output_dir = p.value("output_dir", "");
      c.paths.model_bundle = p.value("model_bundle", "");
      c.paths.mapping = p.value("mapping", "");
    }
    if (j.contains("target_spacing"))
      c.target_spacing = j.at("target_spacing").get<std::array<double, 3>>();
    c.dilation_radius_mm = j.value("dilation_radius_mm", c.dilation_radius_mm);
    if (j.contains("threshold")) c.threshold = threshold_from_json(j.at("threshold"));
    c.min_voxels = j.value("min_voxels", c.min_voxels);
    if (j.contains("radiomics")) {
      c.glcm_bins = j.at("radiomics").value("bins", c.glcm_bins);
      c.glcm_distance = j.at("radiomics").value("distance", c.glcm_distance);
    }
    if (j.contains("selection")) {
      c.variance_eps = j.at("selection").value("variance_eps", c.variance_eps);
      c.rho_max = j.at("selection").value("rho_max", c.rho_max);
      c.top_k = j.at("selection").value("k", c.top_k);
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
      c.forest.max_depth = f.value("max_depth", c.forest.max_depth);
      c.forest.min_samples_leaf = f.value("min_samples_leaf", c.forest.min_samples_leaf);
      c.forest.mtry = f.value("mtry", c.forest.mtry);
      c.forest.bootstrap = f.value("bootstrap", c.forest.bootstrap);
      c.forest.seed = f.value("seed", c.forest.seed);
    }
    c.decision_threshold = j.value("decision_threshold", c.decision_threshold);
    c.seed = j.value("seed", c.seed);
    c.classify = j.value("classify", c.classify);
    c.workers = j.value("workers", c.workers);
    c.scan_id = j.value("scan_id", c.scan_id);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

std::string fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void RunManifest::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["software_version"] = software_version;
  j["config"] = nlohmann::json::parse(config_snapshot);
  j["stage_timings_ms"] = nlohmann::json::object();
  for (const auto& [stage, ms] : stage_timings_ms) j["stage_timings_ms"][stage] = ms;
  j["input_hashes"] = nlohmann::json::object();
  for (const auto& [file, hash] : input_hashes) j["input_hashes"][file] = hash;
  j["output_hashes"] = nlohmann::json::object();
  for (const auto& [file, hash] : output_hashes) j["output_hashes"][file] = hash;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<std::filesystem::path> list_ensemble_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("ensemble directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".nii") || name.ends_with(".nii.gz")) files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("ensemble directory has no NIfTI files: " + dir.string());
  std::sort(files.begin(), files.end());  // deterministic member order
  return files;
}

void write_landmarks_json(const BodyRegionPartition& partition,
                          const std::filesystem::path& path) {
  nlohmann::json j{{"z_lung_top", partition.z_lung_top},
                   {"z_lung_bottom", partition.z_lung_bottom},
                   {"z_hip_bottom", partition.z_hip_bottom}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

BodyRegionPartition read_landmarks_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed landmarks JSON: " + path.string());
  BodyRegionPartition p;
  p.z_lung_top = j.at("z_lung_top").get<int>();
  p.z_lung_bottom = j.at("z_lung_bottom").get<int>();
  p.z_hip_bottom = j.at("z_hip_bottom").get<int>();
  p.validate();
  return p;
}

RunResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  set_worker_count(config.workers);
  RunResult result;
  result.output_dir = config.paths.output_dir;
  result.manifest.software_version = kVersion;
  result.manifest.config_snapshot = config.to_json_string();

  std::error_code ec;
  std::filesystem::create_directories(config.paths.output_dir, ec);
  if (!std::filesystem::is_directory(config.paths.output_dir))
    throw ConfigError("cannot create output directory: " + config.paths.output_dir.string());

  auto stage = [&result](const std::string& name, auto&& body) {
    const auto start = Clock::now();
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    result.manifest.stage_timings_ms.emplace_back(name, ms_since(start));
  };

  auto out_path = [&config](const char* name) { return config.paths.output_dir / name; };
  std::vector<std::filesystem::path> outputs;
  auto persist = [&outputs](const std::filesystem::path& p) { outputs.push_back(p); };

  // --- load ---------------------------------------------------------------
  ImageVolume image;
  LabelVolume anatomy_raw;
  LabelVolume gt;
  bool have_gt = false;
  std::vector<ConfidenceVolume> members;
  std::vector<std::filesystem::path> member_files;
  stage("load", [&] {
    if (config.paths.image.empty()) throw DataError("config paths.image is required");
    if (config.paths.anatomy_raw.empty()) throw DataError("config paths.anatomy_raw is required");
    image = read_image_volume(config.paths.image);
    result.manifest.input_hashes.emplace_back(config.paths.image.string(),
                                              fnv1a64_file(config.paths.image));
    anatomy_raw = read_label_volume(config.paths.anatomy_raw);
    result.manifest.input_hashes.emplace_back(config.paths.anatomy_raw.string(),
                                              fnv1a64_file(config.paths.anatomy_raw));
    if (!config.paths.gt.empty()) {
      gt = read_label_volume(config.paths.gt);
      have_gt = true;
      result.manifest.input_hashes.emplace_back(config.paths.gt.string(),
                                                fnv1a64_file(config.paths.gt));
    }
  });

  // --- resample (optional) --------------------------------------------------
  if (config.target_spacing) {
    stage("resample", [&] {
      image = resample(image, *config.target_spacing, ResampleMode::linear);
      anatomy_raw = resample(anatomy_raw, *config.target_spacing, ResampleMode::nearest);
      if (have_gt) gt = resample(gt, *config.target_spacing, ResampleMode::nearest);
      write_volume(image, out_path("image_resampled.nii.gz"));
      persist(out_path("image_resampled.nii.gz"));
    });
  }

  // --- stage 1: anatomy refinement ------------------------------------------
  LabelVolume refined;
  stage("refine", [&] {
    const LabelMappingConfig mapping = config.paths.mapping.empty()
                                           ? LabelMappingConfig::mrsegmentator_default()
                                           : LabelMappingConfig::load(config.paths.mapping.string());
    RefineResult r = refine_anatomy_mask(anatomy_raw, mapping);
    for (const auto& name : r.unknown_sources)
      log::warn("anatomy mapping: unknown source label '" + name + "' sent to background");
    refined = std::move(r.refined);
  });
  stage("high-risk-zone", [&] {
    refined = build_high_risk_zone(refined, config.dilation_radius_mm);
    write_volume(refined, out_path("refined_anatomy.nii.gz"));
    persist(out_path("refined_anatomy.nii.gz"));
  });
  stage("landmarks", [&] {
    result.partition = extract_landmarks(refined);
    write_landmarks_json(result.partition, out_path("landmarks.json"));
    persist(out_path("landmarks.json"));
  });

  // --- stage 2 output handling ----------------------------------------------
  ConfidenceVolume fused;
  stage("fuse", [&] {
    member_files = list_ensemble_dir(config.paths.ensemble_dir);
    for (const auto& file : member_files) {
      ConfidenceVolume member = read_confidence_volume(file);
      if (config.target_spacing)
        member = resample(member, *config.target_spacing, ResampleMode::linear);
      if (member.geometry != image.geometry)
        throw DataError("ensemble member geometry mismatch: " + file.string());
      result.manifest.input_hashes.emplace_back(file.string(), fnv1a64_file(file));
      members.push_back(std::move(member));
    }
    fused = fuse_ensemble(members);
    members.clear();
    write_volume(fused, out_path("fused_confidence.nii.gz"));
    persist(out_path("fused_confidence.nii.gz"));
  });

  LabelVolume binary;
  stage("binarize", [&] {
    binary = binarize(fused, config.threshold);
    write_volume(binary, out_path("binary_mask.nii.gz"));
    persist(out_path("binary_mask.nii.gz"));
  });

  ComponentLabeling components;
  stage("components", [&] {
    components = label_components(binary);
    write_volume(components.labels, out_path("components.nii.gz"));
    persist(out_path("components.nii.gz"));
  });

  stage("candidates", [&] {
    result.candidates =
        build_candidates(components, fused, result.partition, config.min_voxels);
    write_candidates_json(result.candidates, out_path("candidates.json"));
    persist(out_path("candidates.json"));
  });

  // --- stage 3: radiomics + classification ----------------------------------
  stage("features", [&] {
    for (const auto& candidate : result.candidates) {
      RowKey key;
      key.scan_id = config.scan_id;
      key.candidate_id = candidate.id;
      key.region = candidate.region;
      if (have_gt) key.label = candidate_training_label(candidate, gt);
      result.features.add_row(
          key, candidate_feature_row(candidate, image, config.glcm_bins, config.glcm_distance));
    }
    if (result.features.columns.empty()) result.features.columns = feature_catalog();
    result.features.write_csv(out_path("features.csv"));
    persist(out_path("features.csv"));
    persist(FeatureMatrix::sidecar_path(out_path("features.csv")));
  });

  stage("classify", [&] {
    if (config.classify) {
      if (config.paths.model_bundle.empty())
        throw DataError("classification enabled but no model bundle configured");
      const RegionClassifierBundle bundle = load_model(config.paths.model_bundle);
      result.manifest.input_hashes.emplace_back(config.paths.model_bundle.string(),
                                                fnv1a64_file(config.paths.model_bundle));
      ClassificationResult cls = classify_candidates(
          result.candidates, result.features, bundle, config.decision_threshold,
          binary.geometry);
      nlohmann::json j;
      j["kept_ids"] = cls.kept_ids;
      j["probabilities"] = nlohmann::json::object();
      for (const auto& [id, p] : cls.probabilities) j["probabilities"][std::to_string(id)] = p;
      std::ofstream out(out_path("classification.json"));
      out << j.dump(2) << "\n";
      persist(out_path("classification.json"));
      result.final_mask = std::move(cls.final_mask);
    } else {
      // no classification: the final mask is the union of all candidates
      result.final_mask = make_binary_volume(binary.geometry, "tumor");
      for (const auto& candidate : result.candidates)
        for (const auto& [i, j, k] : candidate.voxels) result.final_mask.at(i, j, k) = 1;
    }
    write_volume(result.final_mask, out_path("final_mask.nii.gz"));
    persist(out_path("final_mask.nii.gz"));
  });

  stage("manifest", [&] {
    for (const auto& file : outputs)
      result.manifest.output_hashes.emplace_back(file.filename().string(), fnv1a64_file(file));
  });
  result.manifest.save(out_path("manifest.json"));
  return result;
}

ScanMetrics evaluate_run(const LabelVolume& pred, const LabelVolume& gt,
                         const BodyRegionPartition& partition) {
  return evaluate_scan(pred, gt, partition);
}

FeatureVector candidate_feature_row(const TumorCandidate& candidate, const ImageVolume& image,
                                    int bins, int distance) {
  FeatureVector fv = first_order_features(candidate, image);
  fv.append(shape_features(candidate, image.geometry));
  try {
    fv.append(glcm_features(candidate, image, bins, distance));
  } catch (const std::runtime_error&) {
    log::warn("candidate " + std::to_string(candidate.id) +
              " has no co-occurrence pairs; texture features set to 0");
    for (const auto& name : {"glcm_joint_energy", "glcm_contrast", "glcm_dissimilarity",
                             "glcm_homogeneity", "glcm_joint_entropy", "glcm_correlation"})
      fv.push(name, 0.0);
  }
  return fv;
}

int candidate_training_label(const TumorCandidate& candidate, const LabelVolume& gt) {
  for (const auto& [i, j, k] : candidate.voxels)
    if (gt.at(i, j, k) != 0) return 1;
  return 0;
}

}  // namespace nfpipe
