#pragma once

#include "nfpipe/volume.hpp"

namespace nfpipe {

enum class ResampleMode { linear, nearest };

/// Resample onto a new spacing, keeping the origin. Output dims are
/// round-half-up(dims * spacing / target) clamped to >= 1, which preserves the
/// physical extent to within one voxel. Output voxel i samples the input at
/// continuous index i * target / spacing (nearest uses round-half-up,
/// ties toward the larger index; linear clamps at the borders).
///
/// LabelVolume resampling requires nearest mode and never introduces labels
/// absent from the input.
ImageVolume resample(const ImageVolume& volume, const std::array<double, 3>& target_spacing,
                     ResampleMode mode);
ConfidenceVolume resample(const ConfidenceVolume& volume,
                          const std::array<double, 3>& target_spacing, ResampleMode mode);
LabelVolume resample(const LabelVolume& volume, const std::array<double, 3>& target_spacing,
                     ResampleMode mode);

/// Shift/scale intensities to zero mean and unit population std. A constant
/// input yields all zeros (keeps blank phantoms alive instead of erroring).
ImageVolume zscore_normalize(const ImageVolume& image);

/// Map label ids to label_id / max dictionary id, producing values in [0, 1].
/// The denominator is the dictionary maximum, not the observed maximum.
/// Throws std::invalid_argument when the dictionary has no foreground labels.
ImageVolume rescale_labels_unit(const LabelVolume& labels);

}  // namespace nfpipe
