#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace nfpipe {

/// Anatomical role of a grid axis. Every volume in this library is stored in
/// the canonical orientation
///
///   axis 0: anterior-posterior, index increases toward anterior
///   axis 1: cranio-caudal,      index increases toward superior (head)
///   axis 2: lateral,            index increases toward the patient's left
///
/// Loaders reorient on read; all landmark and region logic assumes axis 1 is
/// the cranio-caudal axis.
enum class AxisRole : std::uint8_t {
  anterior_posterior = 0,
  cranio_caudal = 1,
  lateral = 2,
};

/// Grid shape and physical placement of a 3-D volume.
///
/// `origin` holds the physical millimetre coordinates of voxel (0,0,0) in the
/// (anterior, superior, left) frame matching the canonical axis order. Voxel
/// (i,j,k) sits at origin + (i*sx, j*sy, k*sz).
struct VolumeGeometry {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
  std::array<double, 3> origin{0.0, 0.0, 0.0};   // mm, (A, S, L) frame
  std::array<AxisRole, 3> axis_roles{AxisRole::anterior_posterior,
                                     AxisRole::cranio_caudal,
                                     AxisRole::lateral};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }

  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(dims[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims[2]) +
           static_cast<std::size_t>(k);
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
  }

  /// Physical coordinate (A, S, L) of the voxel centre.
  std::array<double, 3> voxel_to_physical(double i, double j, double k) const {
    return {origin[0] + i * spacing[0], origin[1] + j * spacing[1],
            origin[2] + k * spacing[2]};
  }

  bool operator==(const VolumeGeometry&) const = default;

  /// Throws std::invalid_argument if dims < 1, spacing <= 0, or axis_roles is
  /// not a bijection onto the three anatomical axes.
  void validate() const;
};

}  // namespace nfpipe
