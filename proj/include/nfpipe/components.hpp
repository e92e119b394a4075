#pragma once

#include "nfpipe/volume.hpp"

namespace nfpipe {

struct ComponentLabeling {
  LabelVolume labels;  // component id per voxel, 0 = background
  int count = 0;
};

/// 26-connected component labeling of the nonzero voxels of a mask.
/// Component ids are 1..count, ordered by each component's first voxel in a
/// row-major scan, so labeling is deterministic.
///
/// Implemented as a two-pass union-find; the test suite checks it against a
/// brute-force BFS flood fill.
ComponentLabeling label_components(const LabelVolume& binary);

}  // namespace nfpipe
