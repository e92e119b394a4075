#pragma once

#include <filesystem>
#include <optional>

#include "nfpipe/anatomy.hpp"
#include "nfpipe/components.hpp"
#include "nfpipe/volume.hpp"

namespace nfpipe {

/// Voxelwise arithmetic mean of the ensemble members (variance reduction).
/// All members must share geometry; at least one member is required. The
/// output is bounded voxelwise by the members' min/max.
ConfidenceVolume fuse_ensemble(const std::vector<ConfidenceVolume>& members);

/// Confidence threshold for binarization. The named presets follow the
/// pipeline's two operating points: high = 0.5 (default), low = 0.25.
struct ThresholdPolicy {
  double tau = 0.5;
  std::string name = "high";

  static ThresholdPolicy high() { return {0.5, "high"}; }
  static ThresholdPolicy low(double tau = 0.25) { return {tau, "low"}; }
  static ThresholdPolicy custom(double tau) { return {tau, "custom"}; }

  /// Throws unless tau lies strictly inside (0, 1).
  void validate() const;
};

/// Foreground iff confidence >= tau (boundary values are foreground).
LabelVolume binarize(const ConfidenceVolume& confidence, const ThresholdPolicy& policy);

struct BoundingBox {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};  // inclusive
};

/// One 26-connected component of the thresholded confidence mask.
struct TumorCandidate {
  int id = 0;  // component id from label_components (stable across stages)
  std::vector<std::array<int, 3>> voxels;
  BoundingBox bbox;
  std::array<double, 3> centroid_voxel{0, 0, 0};
  std::array<double, 3> centroid_mm{0, 0, 0};
  double volume_mm3 = 0.0;
  AnatomicalRegion region = AnatomicalRegion::abdomen;
  double mean_confidence = 0.0;  // mean fused confidence over the component
};

/// Build one candidate per component with at least min_voxels voxels. The
/// region is region_of(round-half-up(centroid cranio-caudal index)).
std::vector<TumorCandidate> build_candidates(const ComponentLabeling& components,
                                             const ConfidenceVolume& confidence,
                                             const BodyRegionPartition& partition,
                                             int min_voxels);

void write_candidates_json(const std::vector<TumorCandidate>& candidates,
                           const std::filesystem::path& path);

}  // namespace nfpipe
