#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include "nfpipe/candidates.hpp"
#include "nfpipe/feature_matrix.hpp"

namespace nfpipe {

struct ForestParams {
  int n_trees = 200;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 2;
  int mtry = 0;  // 0 = ceil(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Flat binary-tree node. feature < 0 marks a leaf. Every node carries its
/// training class counts so impurities (and importances) are recomputable
/// after a round trip.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::int64_t count0 = 0;
  std::int64_t count1 = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct TrainingMeta {
  std::int64_t n_samples = 0;
  std::int64_t n_positive = 0;
  double oob_accuracy = -1.0;  // -1 when bootstrap was disabled
};

/// Bagged Gini-impurity CART forest for binary candidate classification.
struct RandomForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> feature_names;
  std::optional<AnatomicalRegion> region;
  ForestParams params;
  TrainingMeta meta;
};

/// Train on labeled rows (label 0/1; both classes required). Trees grow on
/// bootstrap resamples with mtry features sampled without replacement per
/// node; split thresholds are midpoints of adjacent distinct values and the
/// first best-scoring (feature, threshold) in canonical feature order wins.
/// Per-tree RNG streams derive from (seed, tree index), so the result is
/// deterministic given the seed and insensitive to later tree-count changes
/// for the earlier trees.
RandomForestModel train_forest(const FeatureMatrix& matrix, const ForestParams& params);

/// Mean over trees of the reached leaf's class-1 fraction, in [0, 1]. The
/// vector must carry exactly the model's feature names.
double predict_proba(const RandomForestModel& model, const FeatureVector& features);

/// Fast path: values aligned with model.feature_names.
double predict_proba_values(const RandomForestModel& model, const double* values);

/// Mean decrease in Gini impurity per feature, normalized to sum 1 (all-zero
/// importances stay zero).
FeatureVector importances(const RandomForestModel& model);

enum class FallbackPolicy { keep, drop };

/// Region-routed classifiers. Regions without a model follow the fallback
/// policy (default keep: the classifier never silently deletes tumors where
/// it has no evidence).
struct RegionClassifierBundle {
  std::map<AnatomicalRegion, RandomForestModel> models;
  FallbackPolicy fallback = FallbackPolicy::keep;
};

void save_model(const RegionClassifierBundle& bundle, const std::filesystem::path& path);
RegionClassifierBundle load_model(const std::filesystem::path& path);

struct ClassificationResult {
  std::vector<int> kept_ids;
  /// candidate id -> predicted tumor probability; absent for fallback routing.
  std::map<int, double> probabilities;
  LabelVolume final_mask;
};

/// Keep candidates whose region model scores >= decision_threshold; the final
/// mask is the union of kept candidates' voxels. Every candidate must have a
/// feature row (matched by candidate_id).
ClassificationResult classify_candidates(const std::vector<TumorCandidate>& candidates,
                                         const FeatureMatrix& matrix,
                                         const RegionClassifierBundle& bundle,
                                         double decision_threshold,
                                         const VolumeGeometry& geometry);

}  // namespace nfpipe
