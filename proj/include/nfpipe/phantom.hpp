#pragma once

#include <filesystem>
#include <map>

#include "nfpipe/anatomy.hpp"
#include "nfpipe/volume.hpp"

namespace nfpipe {

/// Synthetic whole-body phantom parameters. The default grid is a scaled-down
/// analog of the anisotropic whole-body protocol (thick anterior-posterior
/// slices), small enough for full pipeline runs in seconds.
struct PhantomConfig {
  std::uint64_t seed = 0;
  std::array<int, 3> dims{64, 256, 128};
  // NIfTI-1 stores spacing as float32; keep defaults float-representable so
  // phantom volumes round-trip bit-exactly.
  std::array<double, 3> spacing{static_cast<double>(7.8f), 0.625, 0.625};

  std::map<AnatomicalRegion, int> tumors_per_region{
      {AnatomicalRegion::head_neck, 1},
      {AnatomicalRegion::chest, 1},
      {AnatomicalRegion::abdomen, 2},
      {AnatomicalRegion::legs, 2},
  };
  double tumor_radius_min_mm = 3.0;
  double tumor_radius_max_mm = 7.0;
  double tumor_contrast = 0.5;  // hyperintensity over background tissue

  double image_noise_sigma = 0.02;

  // confidence degradation
  double noise_sigma = 0.10;
  double blur_sigma_mm = 0.8;  // 0 disables blurring
  int fp_blob_count = 0;
  double fp_blob_radius_min_mm = 3.0;
  double fp_blob_radius_max_mm = 6.0;
  double fp_confidence = 0.9;
  // striped image texture stamped at FP blob sites, separable from the
  // smooth hyperintense tumors
  double fp_stripe_amplitude = 0.35;
  double fp_stripe_period_mm = 2.5;

  int ensemble_members = 3;
  int max_placement_retries = 500;

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static PhantomConfig load(const std::filesystem::path& path);
};

struct TumorRecord {
  std::array<int, 3> center{0, 0, 0};
  double radius_mm = 0.0;
  AnatomicalRegion region = AnatomicalRegion::abdomen;
};

struct FpBlobRecord {
  std::array<int, 3> center{0, 0, 0};
  double radius_mm = 0.0;
};

struct PhantomManifest {
  std::vector<TumorRecord> tumors;
  std::vector<FpBlobRecord> fp_blobs;
  BodyRegionPartition landmarks;  // as constructed (lungs/hips extents)

  void save(const std::filesystem::path& path) const;
  static PhantomManifest load(const std::filesystem::path& path);
};

struct PhantomBundle {
  ImageVolume image;
  LabelVolume anatomy_raw;  // MRSegmentator-style naming, pre-refinement
  LabelVolume gt_tumors;    // binary
  std::vector<ConfidenceVolume> ensemble;
  PhantomManifest manifest;
};

/// Deterministic phantom generation: anatomy labels, disjoint ellipsoidal
/// tumors placed per region (never inside organs that cannot contain NFs),
/// a hyperintense-tumor intensity image with striped texture at FP sites,
/// and the degraded ensemble confidence masks. Bit-reproducible per seed.
PhantomBundle generate_phantom(const PhantomConfig& config);

/// Confidence mask for one ensemble member:
/// clamp(blur(gt) + member noise + FP blobs, 0, 1). FP blob placement derives
/// from the seed only, so all members share FP sites (systematic errors)
/// while the noise stream differs per member.
ConfidenceVolume degrade_to_confidence(const LabelVolume& gt, const PhantomConfig& config,
                                       int member_index);

}  // namespace nfpipe
