#pragma once

#include <filesystem>

#include "nfpipe/forest.hpp"

namespace nfpipe {

/// Record of the three-step feature-selection workflow: near-zero-variance
/// removal, Spearman de-correlation, recursive feature elimination.
struct FeatureSelectionReport {
  std::vector<std::string> dropped_near_zero_variance;
  struct CorrelatedDrop {
    std::string kept;
    std::string dropped;
    double rho = 0.0;
  };
  std::vector<CorrelatedDrop> dropped_correlated;
  std::vector<std::string> selected_top_k;
  std::uint64_t seed = 0;

  void save(const std::filesystem::path& path) const;
  static FeatureSelectionReport load(const std::filesystem::path& path);
};

struct PruneResult {
  FeatureMatrix matrix;
  FeatureSelectionReport report;  // RFE fields left empty
};

/// Drop columns with population variance < variance_eps, then greedily drop
/// the later column of every pair with |Spearman rho| >= rho_max (single pass
/// over pairs in canonical column order; ties use average ranks). Pruning its
/// own output is the identity. Throws when no column survives.
PruneResult prune_features(const FeatureMatrix& matrix, double variance_eps, double rho_max);

/// Recursive feature elimination with a random forest: iteratively train,
/// rank by mean-decrease-in-impurity, drop the max(1, ceil(10% of remaining))
/// lowest-ranked features until k remain. Fully deterministic given the seed
/// (per-iteration forest seeds derive from it). selected_top_k is ordered by
/// the final round's importances (canonical order when no round was needed).
FeatureSelectionReport rfe_select(const FeatureMatrix& matrix, int k,
                                  const ForestParams& forest_params, std::uint64_t seed);

/// Spearman rank correlation (average ranks on ties), exposed for tests.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nfpipe
