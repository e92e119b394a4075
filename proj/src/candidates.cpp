#include "nfpipe/candidates.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nfpipe/kernels.hpp"

namespace nfpipe {

ConfidenceVolume fuse_ensemble(const std::vector<ConfidenceVolume>& members) {
  if (members.empty()) throw std::invalid_argument("ensemble must have at least one member");
  const auto& g = members.front().geometry;
  for (const auto& m : members)
    if (m.geometry != g) throw std::invalid_argument("ensemble member geometry mismatch");

  const auto& k = kernels::active();
  const std::size_t n = g.voxel_count();
  std::vector<double> acc(n, 0.0);
  for (const auto& m : members) k.accumulate(acc.data(), m.data.data(), n);

  ConfidenceVolume fused;
  fused.geometry = g;
  fused.data.resize(n);
  k.mean_finalize(fused.data.data(), acc.data(), n, static_cast<double>(members.size()));
  return fused;
}

void ThresholdPolicy::validate() const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("threshold tau must lie in (0, 1)");
}

LabelVolume binarize(const ConfidenceVolume& confidence, const ThresholdPolicy& policy) {
  policy.validate();
  LabelVolume mask = make_binary_volume(confidence.geometry, "tumor_candidate");
  kernels::active().threshold_ge(mask.data.data(), confidence.data.data(),
                                 confidence.data.size(), static_cast<float>(policy.tau));
  return mask;
}

std::vector<TumorCandidate> build_candidates(const ComponentLabeling& components,
                                             const ConfidenceVolume& confidence,
                                             const BodyRegionPartition& partition,
                                             int min_voxels) {
  const auto& g = components.labels.geometry;
  if (g != confidence.geometry)
    throw std::invalid_argument("components/confidence geometry mismatch");
  partition.validate();

  struct Accum {
    std::vector<std::array<int, 3>> voxels;
    double sum_conf = 0.0;
    std::array<double, 3> sum_idx{0, 0, 0};
    BoundingBox bbox;
  };
  std::vector<Accum> accum(static_cast<std::size_t>(components.count) + 1);

  std::size_t idx = 0;
  for (int i = 0; i < g.dims[0]; ++i) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int k = 0; k < g.dims[2]; ++k, ++idx) {
        const std::int32_t id = components.labels.data[idx];
        if (id == 0) continue;
        Accum& a = accum[static_cast<std::size_t>(id)];
        if (a.voxels.empty()) {
          a.bbox.lo = a.bbox.hi = {i, j, k};
        } else {
          a.bbox.lo = {std::min(a.bbox.lo[0], i), std::min(a.bbox.lo[1], j),
                       std::min(a.bbox.lo[2], k)};
          a.bbox.hi = {std::max(a.bbox.hi[0], i), std::max(a.bbox.hi[1], j),
                       std::max(a.bbox.hi[2], k)};
        }
        a.voxels.push_back({i, j, k});
        a.sum_conf += confidence.data[idx];
        a.sum_idx[0] += i;
        a.sum_idx[1] += j;
        a.sum_idx[2] += k;
      }
    }
  }

  std::vector<TumorCandidate> candidates;
  for (int id = 1; id <= components.count; ++id) {
    Accum& a = accum[static_cast<std::size_t>(id)];
    const auto count = static_cast<double>(a.voxels.size());
    if (a.voxels.size() < static_cast<std::size_t>(std::max(1, min_voxels))) continue;
    TumorCandidate c;
    c.id = id;
    c.voxels = std::move(a.voxels);
    c.bbox = a.bbox;
    c.centroid_voxel = {a.sum_idx[0] / count, a.sum_idx[1] / count, a.sum_idx[2] / count};
    c.centroid_mm = g.voxel_to_physical(c.centroid_voxel[0], c.centroid_voxel[1],
                                        c.centroid_voxel[2]);
    c.volume_mm3 = count * g.voxel_volume_mm3();
    c.mean_confidence = a.sum_conf / count;
    const int z = static_cast<int>(std::floor(c.centroid_voxel[1] + 0.5));
    c.region = region_of(z, partition);
    candidates.push_back(std::move(c));
  }
  return candidates;
}

void write_candidates_json(const std::vector<TumorCandidate>& candidates,
                           const std::filesystem::path& path) {
  nlohmann::json out;
  out["candidates"] = nlohmann::json::array();
  for (const auto& c : candidates) {
    out["candidates"].push_back({
        {"id", c.id},
        {"region", region_name(c.region)},
        {"n_voxels", c.voxels.size()},
        {"volume_mm3", c.volume_mm3},
        {"centroid_voxel", c.centroid_voxel},
        {"centroid_mm", c.centroid_mm},
        {"mean_confidence", c.mean_confidence},
        {"bbox_lo", c.bbox.lo},
        {"bbox_hi", c.bbox.hi},
    });
  }
  std::ofstream file(path);
  if (!file) throw DataError("cannot open for writing: " + path.string());
  file << out.dump(2) << "\n";
}

}  // namespace nfpipe
