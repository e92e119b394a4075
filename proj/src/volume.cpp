#include "nfpipe/volume.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace nfpipe {

void VolumeGeometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw std::invalid_argument("volume dims must be >= 1 per axis");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw std::invalid_argument("volume spacing must be > 0 per axis");
    if (!std::isfinite(origin[a])) throw std::invalid_argument("volume origin must be finite");
  }
  bool seen[3] = {false, false, false};
  for (int a = 0; a < 3; ++a) seen[static_cast<int>(axis_roles[a])] = true;
  if (!(seen[0] && seen[1] && seen[2]))
    throw std::invalid_argument("axis_roles must be a bijection onto the anatomical axes");
}

void ImageVolume::validate() const {
  geometry.validate();
  if (data.size() != geometry.voxel_count())
    throw DataError("image data length does not match dims");
  for (float v : data)
    if (!std::isfinite(v)) throw DataError("image contains non-finite values");
}

void ConfidenceVolume::validate() const {
  geometry.validate();
  if (data.size() != geometry.voxel_count())
    throw DataError("confidence data length does not match dims");
  for (float v : data)
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("confidence out of range [0,1]");
}

void LabelVolume::validate() const {
  geometry.validate();
  if (data.size() != geometry.voxel_count())
    throw DataError("label data length does not match dims");
  auto bg = label_dictionary.find(0);
  if (bg == label_dictionary.end() || bg->second != "background")
    throw DataError("label dictionary must map 0 to \"background\"");
  std::set<std::int32_t> observed(data.begin(), data.end());
  for (std::int32_t v : observed) {
    if (v < 0) throw DataError("labels must be non-negative");
    if (label_dictionary.find(v) == label_dictionary.end())
      throw DataError("voxel label " + std::to_string(v) + " missing from dictionary");
  }
}

LabelVolume make_binary_volume(const VolumeGeometry& geometry,
                               const std::string& foreground_name) {
  LabelVolume out;
  out.geometry = geometry;
  out.allocate(0);
  out.label_dictionary = {{0, "background"}, {1, foreground_name}};
  return out;
}

}  // namespace nfpipe
