#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nfpipe/geometry.hpp"

namespace nfpipe {

/// Error raised by malformed or out-of-contract input data (files, volumes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct VoxelGrid {
  VolumeGeometry geometry;
  std::vector<T> data;  // row-major, axis 0 slowest / axis 2 fastest

  T at(int i, int j, int k) const { return data[geometry.index(i, j, k)]; }
  T& at(int i, int j, int k) { return data[geometry.index(i, j, k)]; }

  void allocate(T fill = T{}) { data.assign(geometry.voxel_count(), fill); }
};

/// Scalar intensity volume (e.g. a T2-weighted whole-body MRI).
struct ImageVolume : VoxelGrid<float> {
  /// Throws DataError unless data length matches dims and all values are finite.
  void validate() const;
};

/// Voxelwise tumor probability in [0, 1].
struct ConfidenceVolume : VoxelGrid<float> {
  /// Throws DataError unless lengths match and every value is in [0, 1].
  void validate() const;
};

/// Small non-negative integer label per voxel plus an id -> name dictionary.
/// Label 0 is always "background".
struct LabelVolume : VoxelGrid<std::int32_t> {
  std::map<std::int32_t, std::string> label_dictionary;

  /// Throws DataError unless every voxel label is present in the dictionary,
  /// labels are non-negative, and label 0 maps to "background".
  void validate() const;
};

/// Binary-mask helper: dictionary {0: background, 1: name}.
LabelVolume make_binary_volume(const VolumeGeometry& geometry,
                               const std::string& foreground_name = "foreground");

}  // namespace nfpipe
