#include "nfpipe/resample.hpp"

#include <cmath>
#include <stdexcept>

#include "nfpipe/kernels.hpp"

namespace nfpipe {

namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

VolumeGeometry resampled_geometry(const VolumeGeometry& in,
                                  const std::array<double, 3>& target) {
  for (double t : target)
    if (!(t > 0.0)) throw std::invalid_argument("target spacing must be > 0 per axis");
  VolumeGeometry out = in;
  for (int a = 0; a < 3; ++a) {
    out.dims[a] = std::max(1, round_half_up(in.dims[a] * in.spacing[a] / target[a]));
    out.spacing[a] = target[a];
  }
  return out;
}

template <typename T, typename Fetch>
void resample_grid(const VolumeGeometry& in, const VolumeGeometry& out,
                   std::vector<T>& dst, Fetch&& fetch) {
  dst.resize(out.voxel_count());
  // Per-axis source coordinates are precomputed once.
  std::array<std::vector<double>, 3> coords;
  for (int a = 0; a < 3; ++a) {
    coords[a].resize(out.dims[a]);
    const double ratio = out.spacing[a] / in.spacing[a];
    for (int i = 0; i < out.dims[a]; ++i) coords[a][i] = i * ratio;
  }
  std::size_t idx = 0;
  for (int i = 0; i < out.dims[0]; ++i)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int k = 0; k < out.dims[2]; ++k)
        dst[idx++] = fetch(coords[0][i], coords[1][j], coords[2][k]);
}

int nearest_index(double x, int n) {
  int i = round_half_up(x);
  if (i < 0) i = 0;
  if (i >= n) i = n - 1;
  return i;
}

template <typename T>
std::vector<T> resample_nearest(const VoxelGrid<T>& v, const VolumeGeometry& out) {
  std::vector<T> dst;
  resample_grid(v.geometry, out, dst, [&](double x, double y, double z) {
    return v.at(nearest_index(x, v.geometry.dims[0]), nearest_index(y, v.geometry.dims[1]),
                nearest_index(z, v.geometry.dims[2]));
  });
  return dst;
}

std::vector<float> resample_linear(const VoxelGrid<float>& v, const VolumeGeometry& out) {
  const auto& g = v.geometry;
  auto clamp = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
  std::vector<float> dst;
  resample_grid(g, out, dst, [&](double x, double y, double z) {
    const int x0 = clamp(static_cast<int>(std::floor(x)), g.dims[0]);
    const int y0 = clamp(static_cast<int>(std::floor(y)), g.dims[1]);
    const int z0 = clamp(static_cast<int>(std::floor(z)), g.dims[2]);
    const int x1 = clamp(x0 + 1, g.dims[0]);
    const int y1 = clamp(y0 + 1, g.dims[1]);
    const int z1 = clamp(z0 + 1, g.dims[2]);
    const double fx = std::min(std::max(x - x0, 0.0), 1.0);
    const double fy = std::min(std::max(y - y0, 0.0), 1.0);
    const double fz = std::min(std::max(z - z0, 0.0), 1.0);
    const double c00 = v.at(x0, y0, z0) * (1 - fz) + v.at(x0, y0, z1) * fz;
    const double c01 = v.at(x0, y1, z0) * (1 - fz) + v.at(x0, y1, z1) * fz;
    const double c10 = v.at(x1, y0, z0) * (1 - fz) + v.at(x1, y0, z1) * fz;
    const double c11 = v.at(x1, y1, z0) * (1 - fz) + v.at(x1, y1, z1) * fz;
    const double c0 = c00 * (1 - fy) + c01 * fy;
    const double c1 = c10 * (1 - fy) + c11 * fy;
    return static_cast<float>(c0 * (1 - fx) + c1 * fx);
  });
  return dst;
}

bool is_identity(const VolumeGeometry& g, const std::array<double, 3>& target) {
  return g.spacing == target;
}

}  // namespace

ImageVolume resample(const ImageVolume& volume, const std::array<double, 3>& target_spacing,
                     ResampleMode mode) {
  if (is_identity(volume.geometry, target_spacing)) return volume;
  ImageVolume out;
  out.geometry = resampled_geometry(volume.geometry, target_spacing);
  out.data = mode == ResampleMode::nearest ? resample_nearest(volume, out.geometry)
                                           : resample_linear(volume, out.geometry);
  return out;
}

ConfidenceVolume resample(const ConfidenceVolume& volume,
                          const std::array<double, 3>& target_spacing, ResampleMode mode) {
  if (is_identity(volume.geometry, target_spacing)) return volume;
  ConfidenceVolume out;
  out.geometry = resampled_geometry(volume.geometry, target_spacing);
  out.data = mode == ResampleMode::nearest ? resample_nearest(volume, out.geometry)
                                           : resample_linear(volume, out.geometry);
  return out;
}

LabelVolume resample(const LabelVolume& volume, const std::array<double, 3>& target_spacing,
                     ResampleMode mode) {
  if (mode != ResampleMode::nearest)
    throw std::invalid_argument("label volumes require nearest-neighbor resampling");
  if (is_identity(volume.geometry, target_spacing)) return volume;
  LabelVolume out;
  out.geometry = resampled_geometry(volume.geometry, target_spacing);
  out.data = resample_nearest(volume, out.geometry);
  out.label_dictionary = volume.label_dictionary;
  return out;
}

ImageVolume zscore_normalize(const ImageVolume& image) {
  const auto& k = kernels::active();
  const std::size_t n = image.data.size();
  double sum = 0.0, sumsq = 0.0;
  k.sum_sumsq(image.data.data(), n, sum, sumsq);
  const double mean = sum / static_cast<double>(n);
  double variance = sumsq / static_cast<double>(n) - mean * mean;
  if (variance < 0.0) variance = 0.0;
  const double std_dev = std::sqrt(variance);

  ImageVolume out;
  out.geometry = image.geometry;
  out.data.resize(n);
  if (std_dev == 0.0) {
    // Constant input: defined as all zeros.
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    return out;
  }
  const float scale = static_cast<float>(1.0 / std_dev);
  const float bias = static_cast<float>(-mean / std_dev);
  k.affine(out.data.data(), image.data.data(), n, scale, bias);
  return out;
}

ImageVolume rescale_labels_unit(const LabelVolume& labels) {
  std::int32_t max_id = 0;
  for (const auto& [id, _] : labels.label_dictionary) max_id = std::max(max_id, id);
  if (max_id <= 0) throw std::invalid_argument("no foreground labels");
  ImageVolume out;
  out.geometry = labels.geometry;
  out.data.resize(labels.data.size());
  const double denom = static_cast<double>(max_id);
  for (std::size_t i = 0; i < labels.data.size(); ++i)
    out.data[i] = static_cast<float>(labels.data[i] / denom);
  return out;
}

}  // namespace nfpipe
