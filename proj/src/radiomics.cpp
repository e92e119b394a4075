#include "nfpipe/radiomics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nfpipe {

namespace {

constexpr int kEntropyBins = 32;
constexpr double kPi = 3.14159265358979323846;

void require_nonempty(const TumorCandidate& candidate) {
  if (candidate.voxels.empty()) throw std::invalid_argument("empty candidate");
}

std::vector<double> gather_intensities(const TumorCandidate& candidate,
                                       const ImageVolume& image) {
  std::vector<double> values;
  values.reserve(candidate.voxels.size());
  for (const auto& [i, j, k] : candidate.voxels) {
    if (!image.geometry.contains(i, j, k))
      throw std::invalid_argument("candidate voxel outside image grid");
    values.push_back(static_cast<double>(image.at(i, j, k)));
  }
  return values;
}

double percentile(const std::vector<double>& sorted, double p) {
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

int quantize(double x, double lo, double width, int bins) {
  if (width <= 0.0) return 0;
  const int b = static_cast<int>(std::floor((x - lo) / width));
  return std::clamp(b, 0, bins - 1);
}

// Membership bitmap over the candidate bounding box, padded coordinates.
class CandidateMask {
 public:
  explicit CandidateMask(const TumorCandidate& c) : lo_(c.bbox.lo) {
    for (int a = 0; a < 3; ++a) dims_[a] = c.bbox.hi[a] - c.bbox.lo[a] + 1;
    mask_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], 0);
    for (const auto& v : c.voxels) mask_[local_index(v[0], v[1], v[2])] = 1;
  }

  bool contains(int i, int j, int k) const {
    if (i < lo_[0] || j < lo_[1] || k < lo_[2]) return false;
    if (i > lo_[0] + dims_[0] - 1 || j > lo_[1] + dims_[1] - 1 || k > lo_[2] + dims_[2] - 1)
      return false;
    return mask_[local_index(i, j, k)] != 0;
  }

 private:
  std::size_t local_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i - lo_[0]) * dims_[1] +
            static_cast<std::size_t>(j - lo_[1])) *
               dims_[2] +
           static_cast<std::size_t>(k - lo_[2]);
  }

  std::array<int, 3> lo_;
  std::array<int, 3> dims_{};
  std::vector<std::uint8_t> mask_;
};

// Cyclic Jacobi eigenvalues of a symmetric 3x3 matrix, descending.
std::array<double, 3> symmetric_eigenvalues(std::array<std::array<double, 3>, 3> m) {
  for (int sweep = 0; sweep < 50; ++sweep) {
    const double off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (m[p][q] == 0.0) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        std::array<std::array<double, 3>, 3> r = m;
        for (int i = 0; i < 3; ++i) {
          r[i][p] = c * m[i][p] - s * m[i][q];
          r[i][q] = s * m[i][p] + c * m[i][q];
        }
        m = r;
        for (int i = 0; i < 3; ++i) {
          r[p][i] = c * m[p][i] - s * m[q][i];
          r[q][i] = s * m[p][i] + c * m[q][i];
        }
        m = r;
      }
    }
  }
  std::array<double, 3> eig{m[0][0], m[1][1], m[2][2]};
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

}  // namespace

double FeatureVector::value(const std::string& name) const {
  if (auto v = find(name)) return *v;
  throw std::invalid_argument("feature not present: " + name);
}

const std::vector<std::string>& feature_catalog() {
  static const std::vector<std::string> catalog = {
      // first-order
      "mean", "median", "minimum", "maximum", "range", "variance", "std_dev",
      "skewness", "kurtosis", "energy", "total_energy", "root_mean_square",
      "mean_absolute_deviation", "interquartile_range", "percentile_10",
      "percentile_90", "entropy", "uniformity",
      // shape
      "volume_mm3", "surface_area_mm2", "surface_to_volume_ratio", "sphericity",
      "max_3d_diameter", "pca_major_axis", "pca_minor_axis", "pca_least_axis",
      "elongation", "flatness",
      // texture
      "glcm_joint_energy", "glcm_contrast", "glcm_dissimilarity",
      "glcm_homogeneity", "glcm_joint_entropy", "glcm_correlation"};
  return catalog;
}

FeatureVector first_order_features(const TumorCandidate& candidate,
                                   const ImageVolume& image) {
  require_nonempty(candidate);
  const std::vector<double> values = gather_intensities(candidate, image);
  const auto n = static_cast<double>(values.size());

  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0, energy = 0.0, abs_dev = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    energy += v * v;
    abs_dev += std::fabs(d);
  }
  const double variance = m2 / n;
  const double std_dev = std::sqrt(variance);
  const double skewness = std_dev > 0.0 ? (m3 / n) / (std_dev * std_dev * std_dev) : 0.0;
  const double kurtosis = variance > 0.0 ? (m4 / n) / (variance * variance) : 0.0;

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double minimum = sorted.front();
  const double maximum = sorted.back();

  std::array<double, kEntropyBins> hist{};
  const double width = (maximum - minimum) / kEntropyBins;
  for (double v : values) hist[quantize(v, minimum, width, kEntropyBins)] += 1.0;
  double entropy = 0.0, uniformity = 0.0;
  for (double h : hist) {
    if (h <= 0.0) continue;
    const double p = h / n;
    entropy -= p * std::log2(p);
    uniformity += p * p;
  }

  FeatureVector fv;
  fv.push("mean", mean);
  fv.push("median", percentile(sorted, 50.0));
  fv.push("minimum", minimum);
  fv.push("maximum", maximum);
  fv.push("range", maximum - minimum);
  fv.push("variance", variance);
  fv.push("std_dev", std_dev);
  fv.push("skewness", skewness);
  fv.push("kurtosis", kurtosis);
  fv.push("energy", energy);
  fv.push("total_energy", energy * image.geometry.voxel_volume_mm3());
  fv.push("root_mean_square", std::sqrt(energy / n));
  fv.push("mean_absolute_deviation", abs_dev / n);
  fv.push("interquartile_range", percentile(sorted, 75.0) - percentile(sorted, 25.0));
  fv.push("percentile_10", percentile(sorted, 10.0));
  fv.push("percentile_90", percentile(sorted, 90.0));
  fv.push("entropy", entropy);
  fv.push("uniformity", uniformity);
  return fv;
}

FeatureVector shape_features(const TumorCandidate& candidate,
                             const VolumeGeometry& geometry) {
  require_nonempty(candidate);
  const auto n = static_cast<double>(candidate.voxels.size());
  const auto& s = geometry.spacing;
  const double volume = n * geometry.voxel_volume_mm3();

  const CandidateMask mask(candidate);
  const double face_area[3] = {s[1] * s[2], s[0] * s[2], s[0] * s[1]};
  double surface = 0.0;
  std::vector<std::array<int, 3>> exposed;
  for (const auto& v : candidate.voxels) {
    bool on_surface = false;
    for (int axis = 0; axis < 3; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        std::array<int, 3> w = v;
        w[axis] += dir;
        if (!mask.contains(w[0], w[1], w[2])) {
          surface += face_area[axis];
          on_surface = true;
        }
      }
    }
    if (on_surface) exposed.push_back(v);
  }

  // The farthest-apart pair is always exposed, so the O(m^2) scan runs over
  // surface voxels only.
  double max_diam2 = 0.0;
  for (std::size_t a = 0; a < exposed.size(); ++a) {
    for (std::size_t b = a + 1; b < exposed.size(); ++b) {
      const double dx = (exposed[a][0] - exposed[b][0]) * s[0];
      const double dy = (exposed[a][1] - exposed[b][1]) * s[1];
      const double dz = (exposed[a][2] - exposed[b][2]) * s[2];
      max_diam2 = std::max(max_diam2, dx * dx + dy * dy + dz * dz);
    }
  }

  // Population covariance of the physical voxel-centre coordinates.
  std::array<double, 3> centroid{0, 0, 0};
  for (const auto& v : candidate.voxels)
    for (int a = 0; a < 3; ++a) centroid[a] += v[a] * s[a];
  for (int a = 0; a < 3; ++a) centroid[a] /= n;
  std::array<std::array<double, 3>, 3> cov{};
  for (const auto& v : candidate.voxels) {
    const double d[3] = {v[0] * s[0] - centroid[0], v[1] * s[1] - centroid[1],
                         v[2] * s[2] - centroid[2]};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cov[a][b] += d[a] * d[b];
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) cov[a][b] /= n;
  const auto eig = symmetric_eigenvalues(cov);
  const double l1 = std::max(eig[0], 0.0);
  const double l2 = std::max(eig[1], 0.0);
  const double l3 = std::max(eig[2], 0.0);

  FeatureVector fv;
  fv.push("volume_mm3", volume);
  fv.push("surface_area_mm2", surface);
  fv.push("surface_to_volume_ratio", surface / volume);
  fv.push("sphericity", std::pow(kPi, 1.0 / 3.0) * std::pow(6.0 * volume, 2.0 / 3.0) / surface);
  fv.push("max_3d_diameter", std::sqrt(max_diam2));
  fv.push("pca_major_axis", 4.0 * std::sqrt(l1));
  fv.push("pca_minor_axis", 4.0 * std::sqrt(l2));
  fv.push("pca_least_axis", 4.0 * std::sqrt(l3));
  fv.push("elongation", l1 > 0.0 ? std::sqrt(l2 / l1) : 1.0);
  fv.push("flatness", l1 > 0.0 ? std::sqrt(l3 / l1) : 1.0);
  return fv;
}

namespace detail {

const std::array<std::array<int, 3>, 13>& glcm_directions() {
  static const std::array<std::array<int, 3>, 13> dirs = {{
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
      {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1},
      {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
  }};
  return dirs;
}

std::vector<GlcmMatrix> build_glcm_matrices(const TumorCandidate& candidate,
                                            const ImageVolume& image, int bins,
                                            int distance) {
  require_nonempty(candidate);
  if (bins < 2) throw std::invalid_argument("glcm bins must be >= 2");
  if (distance < 1) throw std::invalid_argument("glcm distance must be >= 1");

  const std::vector<double> values = gather_intensities(candidate, image);
  double lo = values.front(), hi = values.front();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double width = (hi - lo) / bins;

  const CandidateMask mask(candidate);
  // Quantized bin per voxel, addressable by grid position.
  struct QuantLookup {
    explicit QuantLookup(const TumorCandidate& c) : lo(c.bbox.lo) {
      for (int a = 0; a < 3; ++a) dims[a] = c.bbox.hi[a] - c.bbox.lo[a] + 1;
      bin.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], -1);
    }
    std::size_t index(const std::array<int, 3>& v) const {
      return (static_cast<std::size_t>(v[0] - lo[0]) * dims[1] +
              static_cast<std::size_t>(v[1] - lo[1])) *
                 dims[2] +
             static_cast<std::size_t>(v[2] - lo[2]);
    }
    int at(const std::array<int, 3>& v) const { return bin[index(v)]; }
    std::array<int, 3> lo;
    std::array<int, 3> dims{};
    std::vector<int> bin;
  } quant(candidate);
  for (std::size_t i = 0; i < candidate.voxels.size(); ++i)
    quant.bin[quant.index(candidate.voxels[i])] = quantize(values[i], lo, width, bins);

  std::vector<GlcmMatrix> matrices(13);
  const auto& dirs = glcm_directions();
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    GlcmMatrix& m = matrices[d];
    m.p.assign(static_cast<std::size_t>(bins) * bins, 0.0);
    const std::array<int, 3> off = {dirs[d][0] * distance, dirs[d][1] * distance,
                                    dirs[d][2] * distance};
    for (const auto& v : candidate.voxels) {
      const std::array<int, 3> w = {v[0] + off[0], v[1] + off[1], v[2] + off[2]};
      if (!mask.contains(w[0], w[1], w[2])) continue;
      const int qa = quant.at(v);
      const int qb = quant.at(w);
      m.p[static_cast<std::size_t>(qa) * bins + qb] += 1.0;
      m.p[static_cast<std::size_t>(qb) * bins + qa] += 1.0;
      ++m.pair_count;
    }
    if (m.pair_count > 0) {
      const double norm = 1.0 / (2.0 * static_cast<double>(m.pair_count));
      for (double& p : m.p) p *= norm;
    }
  }
  return matrices;
}

}  // namespace detail

FeatureVector glcm_features(const TumorCandidate& candidate, const ImageVolume& image,
                            int bins, int distance) {
  const auto matrices = detail::build_glcm_matrices(candidate, image, bins, distance);

  double joint_energy = 0.0, contrast = 0.0, dissimilarity = 0.0;
  double homogeneity = 0.0, joint_entropy = 0.0, correlation = 0.0;
  int used = 0;
  for (const auto& m : matrices) {
    if (m.pair_count == 0) continue;
    ++used;
    double e = 0.0, con = 0.0, dis = 0.0, hom = 0.0, ent = 0.0;
    std::vector<double> marginal(static_cast<std::size_t>(bins), 0.0);
    double mean_ij = 0.0;
    for (int i = 0; i < bins; ++i) {
      for (int j = 0; j < bins; ++j) {
        const double p = m.p[static_cast<std::size_t>(i) * bins + j];
        if (p <= 0.0) continue;
        const double diff = i - j;
        e += p * p;
        con += p * diff * diff;
        dis += p * std::fabs(diff);
        hom += p / (1.0 + diff * diff);
        ent -= p * std::log2(p);
        marginal[static_cast<std::size_t>(i)] += p;
        mean_ij += p * i * j;
      }
    }
    double mu = 0.0;
    for (int i = 0; i < bins; ++i) mu += i * marginal[static_cast<std::size_t>(i)];
    double sigma2 = 0.0;
    for (int i = 0; i < bins; ++i) sigma2 += (i - mu) * (i - mu) * marginal[static_cast<std::size_t>(i)];
    // symmetric matrix: both marginals coincide
    const double corr = sigma2 > 0.0 ? (mean_ij - mu * mu) / sigma2 : 1.0;

    joint_energy += e;
    contrast += con;
    dissimilarity += dis;
    homogeneity += hom;
    joint_entropy += ent;
    correlation += corr;
  }
  if (used == 0) throw std::runtime_error("no co-occurrence pairs");

  FeatureVector fv;
  fv.push("glcm_joint_energy", joint_energy / used);
  fv.push("glcm_contrast", contrast / used);
  fv.push("glcm_dissimilarity", dissimilarity / used);
  fv.push("glcm_homogeneity", homogeneity / used);
  fv.push("glcm_joint_entropy", joint_entropy / used);
  fv.push("glcm_correlation", correlation / used);
  return fv;
}

FeatureVector extract_all_features(const TumorCandidate& candidate,
                                   const ImageVolume& image, int bins, int distance) {
  FeatureVector fv = first_order_features(candidate, image);
  fv.append(shape_features(candidate, image.geometry));
  fv.append(glcm_features(candidate, image, bins, distance));
  return fv;
}

}  // namespace nfpipe
