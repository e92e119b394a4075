#pragma once

#include <filesystem>

#include "nfpipe/volume.hpp"

namespace nfpipe {

/// NIfTI-1 single-file (.nii / .nii.gz) volume I/O.
///
/// Supported datatype codes: uint8 (2), int16 (4), float32 (16). Gzip is
/// handled transparently on read; writing compresses when the path ends in
/// ".gz". Byte-swapped (foreign-endian) files are accepted.
///
/// On read, volumes are reoriented into the canonical axis order described in
/// geometry.hpp using the sform affine (srow_*). Files without an sform are
/// assumed to already be canonical. Oblique affines are snapped to the
/// dominant axis per grid direction; a direction matrix that does not map
/// grid axes onto distinct anatomical axes is rejected.
///
/// Label dictionaries are persisted in a NIfTI extension (ecode 6, JSON
/// payload); label files lacking one get a synthesized dictionary.
///
/// Geometry note: NIfTI-1 stores pixdim/srow as float32, so spacing/origin
/// survive a round trip bit-exactly only when float-representable (always the
/// case for volumes that were read from a NIfTI file).
ImageVolume read_image_volume(const std::filesystem::path& path);
LabelVolume read_label_volume(const std::filesystem::path& path);
ConfidenceVolume read_confidence_volume(const std::filesystem::path& path);

void write_volume(const ImageVolume& volume, const std::filesystem::path& path);
void write_volume(const ConfidenceVolume& volume, const std::filesystem::path& path);
void write_volume(const LabelVolume& volume, const std::filesystem::path& path);

}  // namespace nfpipe
