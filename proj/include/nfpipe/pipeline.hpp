#pragma once

#include <filesystem>
#include <optional>

#include "nfpipe/candidates.hpp"
#include "nfpipe/evaluation.hpp"
#include "nfpipe/forest.hpp"
#include "nfpipe/phantom.hpp"
#include "nfpipe/selection.hpp"

namespace nfpipe {

inline constexpr const char* kVersion = "0.1.0";

/// Configuration problems (bad parameters, malformed config files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("[stage " + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelinePaths {
  std::filesystem::path image;
  std::filesystem::path anatomy_raw;
  std::filesystem::path ensemble_dir;
  std::filesystem::path gt;            // optional: enables feature labeling
  std::filesystem::path output_dir;
  std::filesystem::path model_bundle;  // required when classify is on
  std::filesystem::path mapping;       // optional; built-in default otherwise
};

/// One config governs every stage; CLI flags override config keys which
/// override defaults.
struct PipelineConfig {
  PipelinePaths paths;
  std::optional<std::array<double, 3>> target_spacing;
  double dilation_radius_mm = 10.0;
  ThresholdPolicy threshold = ThresholdPolicy::high();
  int min_voxels = 3;
  int glcm_bins = 32;
  int glcm_distance = 1;
  double variance_eps = 1e-8;
  double rho_max = 0.90;
  int top_k = 10;
  ForestParams forest;
  double decision_threshold = 0.5;
  std::uint64_t seed = 0;
  bool classify = true;
  int workers = 1;
  std::string scan_id = "scan";

  void validate() const;  // throws ConfigError
  std::string to_json_string() const;
  static PipelineConfig from_json_string(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
};

struct RunManifest {
  std::string software_version;
  std::string config_snapshot;  // JSON
  std::vector<std::pair<std::string, double>> stage_timings_ms;
  std::vector<std::pair<std::string, std::string>> input_hashes;   // path, fnv1a64
  std::vector<std::pair<std::string, std::string>> output_hashes;  // path, fnv1a64

  void save(const std::filesystem::path& path) const;
};

struct RunResult {
  RunManifest manifest;
  BodyRegionPartition partition;
  std::vector<TumorCandidate> candidates;
  FeatureMatrix features;
  LabelVolume final_mask;
  std::filesystem::path output_dir;
};

/// Full Stage 1-3 chain: refine -> high-risk zone -> landmarks -> fuse ->
/// binarize -> components -> candidates -> features -> classify -> final
/// mask. Every stage output is persisted under output_dir; errors carry the
/// stage name. Deterministic given (inputs, config, seed): rerunning
/// reproduces byte-identical artifacts (the manifest records their hashes).
RunResult run_pipeline(const PipelineConfig& config);

/// Evaluation-protocol entry point for one scan; see evaluation.hpp.
ScanMetrics evaluate_run(const LabelVolume& pred, const LabelVolume& gt,
                         const BodyRegionPartition& partition);

/// Full per-candidate feature row as the pipeline assembles it: first-order +
/// shape + GLCM. Candidates without co-occurrence pairs get zeroed texture
/// features (logged) so the matrix stays rectangular.
FeatureVector candidate_feature_row(const TumorCandidate& candidate, const ImageVolume& image,
                                    int bins, int distance);

/// Training label per the instance TP rule: positive iff the candidate shares
/// at least one voxel with the ground-truth mask.
int candidate_training_label(const TumorCandidate& candidate, const LabelVolume& gt);

/// FNV-1a 64-bit content hash (hex), used for manifest bookkeeping (not
/// cryptographic).
std::string fnv1a64_file(const std::filesystem::path& path);

void write_landmarks_json(const BodyRegionPartition& partition,
                          const std::filesystem::path& path);
BodyRegionPartition read_landmarks_json(const std::filesystem::path& path);

/// NIfTI files in a directory, sorted by name (deterministic member order).
std::vector<std::filesystem::path> list_ensemble_dir(const std::filesystem::path& dir);

}  // namespace nfpipe
