#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nfpipe/volume.hpp"

namespace nfpipe {

/// Labels of the refined anatomy mask: 11 organ labels plus the NF high-risk
/// zone. Ids are stable across runs and files.
enum class RefinedLabel : std::int32_t {
  background = 0,
  heart = 1,
  lungs = 2,
  liver = 3,
  stomach = 4,  // spleen is merged in
  kidneys = 5,
  urinary_bladder = 6,
  spine = 7,
  sacrum = 8,
  hips = 9,
  femurs = 10,
  muscles = 11,
  high_risk_zone = 12,
};

const std::string& refined_label_name(RefinedLabel label);

/// Throws std::invalid_argument for unknown names.
RefinedLabel refined_label_from_name(const std::string& name);

/// Dictionary covering all refined labels (0..12).
std::map<std::int32_t, std::string> refined_label_dictionary();

/// One source-organ rule: either dropped to background or mapped onto a
/// refined organ label. high_risk_zone is not a legal mapping target (the
/// zone is derived, never mapped).
struct MappingRule {
  std::string source;
  bool drop = false;
  RefinedLabel target = RefinedLabel::background;
};

/// Plain-text mapping config: one `source -> target` or `source -> DROP` rule
/// per line, `#` comments. Parsing rejects unknown or illegal target labels.
struct LabelMappingConfig {
  std::vector<MappingRule> rules;

  static LabelMappingConfig parse(std::istream& in);
  static LabelMappingConfig parse_string(const std::string& text);
  static LabelMappingConfig load(const std::string& path);

  /// Built-in default naming the MRSegmentator organ labels.
  static const LabelMappingConfig& mrsegmentator_default();
  static const char* mrsegmentator_default_text();
};

struct RefineResult {
  LabelVolume refined;
  /// Source names present in the raw dictionary but absent from the mapping;
  /// their voxels are sent to background. Reported so upstream model drift
  /// stays visible.
  std::vector<std::string> unknown_sources;
};

/// Apply the mapping rules to a raw multi-organ label map (Stage 1
/// refinement): paired organs merge, excluded organs drop to background.
RefineResult refine_anatomy_mask(const LabelVolume& raw, const LabelMappingConfig& mapping);

/// Add label 12 on background voxels within radius_mm (physical ball,
/// anisotropy-aware) of any lungs or spine voxel. Organ labels are never
/// overwritten; idempotent for a fixed radius.
LabelVolume build_high_risk_zone(const LabelVolume& refined, double radius_mm);

/// Cranio-caudal landmark indices splitting the body into four regions.
/// Superior = larger index, so z_lung_top >= z_lung_bottom >= z_hip_bottom.
struct BodyRegionPartition {
  int z_lung_top = 0;
  int z_lung_bottom = 0;
  int z_hip_bottom = 0;

  void validate() const;
};

enum class AnatomicalRegion { head_neck, chest, abdomen, legs };

constexpr std::array<AnatomicalRegion, 4> kAllRegions = {
    AnatomicalRegion::head_neck, AnatomicalRegion::chest, AnatomicalRegion::abdomen,
    AnatomicalRegion::legs};

const std::string& region_name(AnatomicalRegion region);
AnatomicalRegion region_from_name(const std::string& name);

/// Highest/lowest lungs voxel and lowest hips voxel along the cranio-caudal
/// axis. Throws when lungs or hips are absent, naming the missing structure.
BodyRegionPartition extract_landmarks(const LabelVolume& refined);

/// Total assignment of a cranio-caudal index to a region; boundary indices
/// belong to the inferior region.
AnatomicalRegion region_of(int z, const BodyRegionPartition& partition);

}  // namespace nfpipe
