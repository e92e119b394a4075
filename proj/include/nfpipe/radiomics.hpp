#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nfpipe/candidates.hpp"
#include "nfpipe/volume.hpp"

namespace nfpipe {

/// Ordered (name, value) feature map. Order always follows the fixed catalog.
class FeatureVector {
 public:
  void push(std::string name, double value) {
    items_.emplace_back(std::move(name), value);
  }
  void append(const FeatureVector& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
  }
  const std::vector<std::pair<std::string, double>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  std::optional<double> find(const std::string& name) const {
    for (const auto& [n, v] : items_)
      if (n == name) return v;
    return std::nullopt;
  }
  /// Throws std::invalid_argument when the name is absent.
  double value(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, double>> items_;
};

/// Canonical feature catalog: 18 first-order + 10 shape + 6 GLCM features.
const std::vector<std::string>& feature_catalog();

/// Intensity statistics over the candidate voxels:
///   mean, median, minimum, maximum, range, variance (population), std_dev,
///   skewness, kurtosis (Pearson, m4/var^2), energy, total_energy
///   (energy x voxel volume), root_mean_square, mean_absolute_deviation,
///   interquartile_range, percentile_10, percentile_90, entropy (log2 over 32
///   fixed-width bins), uniformity.
/// Percentiles use linear interpolation at rank p*(n-1). Constant regions
/// define skewness/kurtosis as 0 and yield entropy 0 / uniformity 1.
FeatureVector first_order_features(const TumorCandidate& candidate,
                                   const ImageVolume& image);

/// Geometry descriptors:
///   volume_mm3, surface_area_mm2 (exposed 6-neighbor faces x face area),
///   surface_to_volume_ratio, sphericity = pi^(1/3) (6V)^(2/3) / A,
///   max_3d_diameter (max pairwise distance between voxel centres, mm),
///   pca_major/minor/least_axis (4 sqrt of covariance eigenvalues of the
///   physical voxel coordinates), elongation = sqrt(l2/l1), flatness =
///   sqrt(l3/l1). Degenerate candidates (l1 = 0) define elongation and
///   flatness as 1.
FeatureVector shape_features(const TumorCandidate& candidate,
                             const VolumeGeometry& geometry);

/// Texture features from symmetric, normalized gray-level co-occurrence
/// matrices over the 13 unique 3-D directions at the given voxel distance,
/// restricted to voxel pairs inside the candidate. Intensities are quantized
/// to `bins` fixed-width bins over the candidate min-max (a constant region
/// occupies a single bin). Features (averaged over directions with >= 1
/// pair): glcm_joint_energy, glcm_contrast, glcm_dissimilarity,
/// glcm_homogeneity, glcm_joint_entropy, glcm_correlation (defined as 1 for
/// zero-variance matrices).
///
/// Throws std::runtime_error("no co-occurrence pairs") when no direction has
/// any pair (always the case for single-voxel candidates).
FeatureVector glcm_features(const TumorCandidate& candidate, const ImageVolume& image,
                            int bins, int distance);

/// All three families concatenated in catalog order.
FeatureVector extract_all_features(const TumorCandidate& candidate,
                                   const ImageVolume& image, int bins, int distance);

namespace detail {

/// The 13 unique co-occurrence direction offsets (one per +/- pair).
const std::array<std::array<int, 3>, 13>& glcm_directions();

struct GlcmMatrix {
  std::vector<double> p;  // bins x bins, normalized to total sum 1
  std::size_t pair_count = 0;
};

/// One matrix per direction (pair_count == 0 when the direction has no pairs).
std::vector<GlcmMatrix> build_glcm_matrices(const TumorCandidate& candidate,
                                            const ImageVolume& image, int bins,
                                            int distance);

}  // namespace detail

}  // namespace nfpipe
