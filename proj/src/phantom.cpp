#include "nfpipe/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nfpipe/rng.hpp"

namespace nfpipe {

namespace {

struct OrganSpec {
  const char* name;
  bool ellipsoid;                 // false = box
  std::array<double, 3> lo;       // box: fractional bounds; ellipsoid: centre
  std::array<double, 3> hi;       // box: fractional bounds; ellipsoid: semi-axes
  double intensity;
  bool nf_forbidden;              // "NF can be inside" = No
};

// Painted in order; later organs overwrite earlier ones, so the landmark
// structures (lungs, hips) come last.
const std::vector<OrganSpec>& organ_specs() {
  static const std::vector<OrganSpec> specs = {
      {"colon", false, {0.30, 0.42, 0.30}, {0.45, 0.50, 0.70}, 0.33, false},
      {"aorta", false, {0.54, 0.40, 0.48}, {0.59, 0.80, 0.52}, 0.50, false},
      {"liver", false, {0.35, 0.52, 0.55}, {0.60, 0.62, 0.80}, 0.42, true},
      {"spleen", false, {0.35, 0.54, 0.20}, {0.55, 0.60, 0.30}, 0.40, true},
      {"stomach", false, {0.30, 0.50, 0.35}, {0.50, 0.58, 0.50}, 0.38, true},
      {"left_kidney", false, {0.55, 0.45, 0.28}, {0.68, 0.52, 0.38}, 0.44, true},
      {"right_kidney", false, {0.55, 0.45, 0.62}, {0.68, 0.52, 0.72}, 0.44, true},
      {"urinary_bladder", true, {0.45, 0.40, 0.50}, {0.08, 0.035, 0.08}, 0.46, true},
      {"left_autochthonous_muscle", false, {0.66, 0.30, 0.38}, {0.72, 0.80, 0.44}, 0.30, false},
      {"right_autochthonous_muscle", false, {0.66, 0.30, 0.56}, {0.72, 0.80, 0.62}, 0.30, false},
      {"heart", true, {0.50, 0.68, 0.50}, {0.15, 0.055, 0.10}, 0.45, true},
      {"spine", false, {0.58, 0.25, 0.47}, {0.68, 0.88, 0.53}, 0.35, false},
      {"sacrum", false, {0.56, 0.30, 0.44}, {0.66, 0.40, 0.56}, 0.35, false},
      {"left_femur", false, {0.45, 0.05, 0.30}, {0.58, 0.30, 0.38}, 0.35, true},
      {"right_femur", false, {0.45, 0.05, 0.62}, {0.58, 0.30, 0.70}, 0.35, true},
      {"left_hip", false, {0.45, 0.30, 0.25}, {0.62, 0.38, 0.42}, 0.35, true},
      {"right_hip", false, {0.45, 0.30, 0.58}, {0.62, 0.38, 0.75}, 0.35, true},
      {"left_lung", true, {0.50, 0.735, 0.33}, {0.26, 0.112, 0.12}, 0.05, true},
      {"right_lung", true, {0.50, 0.735, 0.67}, {0.26, 0.112, 0.12}, 0.05, true},
  };
  return specs;
}

constexpr double kBaseIntensity = 0.2;

int frac_index(double f, int n) {
  return std::clamp(static_cast<int>(std::floor(f * (n - 1))), 0, n - 1);
}

struct Ellipsoid {
  std::array<int, 3> center;
  double radius_mm;
};

std::vector<std::array<int, 3>> ellipsoid_voxels(const Ellipsoid& e,
                                                 const VolumeGeometry& g) {
  std::vector<std::array<int, 3>> voxels;
  std::array<int, 3> rv;
  for (int a = 0; a < 3; ++a)
    rv[a] = static_cast<int>(std::ceil(e.radius_mm / g.spacing[a]));
  const double r2 = e.radius_mm * e.radius_mm;
  for (int di = -rv[0]; di <= rv[0]; ++di) {
    const double x = di * g.spacing[0];
    for (int dj = -rv[1]; dj <= rv[1]; ++dj) {
      const double y = dj * g.spacing[1];
      for (int dk = -rv[2]; dk <= rv[2]; ++dk) {
        const double z = dk * g.spacing[2];
        if (x * x + y * y + z * z > r2) continue;
        voxels.push_back({e.center[0] + di, e.center[1] + dj, e.center[2] + dk});
      }
    }
  }
  return voxels;
}

bool inside_grid(const std::vector<std::array<int, 3>>& voxels, const VolumeGeometry& g) {
  for (const auto& v : voxels)
    if (!g.contains(v[0], v[1], v[2])) return false;
  return true;
}

// True when any mask voxel lies within Chebyshev distance 1 of a trial voxel
// (keeps 26-connected components disjoint).
bool touches_mask(const std::vector<std::array<int, 3>>& voxels, const LabelVolume& mask) {
  const auto& g = mask.geometry;
  for (const auto& v : voxels) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          const int i = v[0] + di, j = v[1] + dj, k = v[2] + dk;
          if (!g.contains(i, j, k)) continue;
          if (mask.at(i, j, k) != 0) return true;
        }
  }
  return false;
}

std::vector<FpBlobRecord> place_fp_blobs(const LabelVolume& gt, const PhantomConfig& config) {
  std::vector<FpBlobRecord> blobs;
  if (config.fp_blob_count <= 0) return blobs;
  Rng rng(Rng::derive(config.seed, "fp-blobs"));
  const auto& g = gt.geometry;

  LabelVolume occupied = gt;  // grows as blobs are placed
  std::array<int, 3> margin;
  for (int a = 0; a < 3; ++a)
    margin[a] = static_cast<int>(std::ceil(config.fp_blob_radius_max_mm / g.spacing[a])) + 1;

  for (int b = 0; b < config.fp_blob_count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < config.max_placement_retries; ++attempt) {
      Ellipsoid e;
      e.radius_mm = rng.uniform(config.fp_blob_radius_min_mm, config.fp_blob_radius_max_mm);
      for (int a = 0; a < 3; ++a) {
        const int lo = margin[a];
        const int hi = g.dims[a] - 1 - margin[a];
        if (hi < lo) throw std::invalid_argument("fp blob radius exceeds grid extent");
        e.center[a] = lo + rng.uniform_index(hi - lo + 1);
      }
      const auto voxels = ellipsoid_voxels(e, g);
      if (!inside_grid(voxels, g) || touches_mask(voxels, occupied)) continue;
      for (const auto& v : voxels) occupied.at(v[0], v[1], v[2]) = 1;
      blobs.push_back({e.center, e.radius_mm});
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error("grid too crowded for requested fp blob count");
  }
  return blobs;
}

void gaussian_blur_inplace(std::vector<float>& data, const VolumeGeometry& g,
                           double sigma_mm) {
  if (sigma_mm <= 0.0) return;
  std::vector<float> scratch(data.size());
  const std::size_t strides[3] = {static_cast<std::size_t>(g.dims[1]) * g.dims[2],
                                  static_cast<std::size_t>(g.dims[2]), 1};
  for (int axis = 0; axis < 3; ++axis) {
    const double sigma_vox = sigma_mm / g.spacing[axis];
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
    if (radius < 1) continue;
    std::vector<double> weights(static_cast<std::size_t>(2 * radius) + 1);
    for (int t = -radius; t <= radius; ++t)
      weights[static_cast<std::size_t>(t + radius)] =
          std::exp(-0.5 * (t / sigma_vox) * (t / sigma_vox));
    const int len = g.dims[axis];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    for (int a = 0; a < g.dims[o1]; ++a) {
      for (int b = 0; b < g.dims[o2]; ++b) {
        const std::size_t base = static_cast<std::size_t>(a) * strides[o1] +
                                 static_cast<std::size_t>(b) * strides[o2];
        for (int q = 0; q < len; ++q) {
          double acc = 0.0, wsum = 0.0;  // truncated taps renormalized at borders
          for (int t = -radius; t <= radius; ++t) {
            const int s = q + t;
            if (s < 0 || s >= len) continue;
            const double w = weights[static_cast<std::size_t>(t + radius)];
            acc += w * data[base + static_cast<std::size_t>(s) * strides[axis]];
            wsum += w;
          }
          scratch[base + static_cast<std::size_t>(q) * strides[axis]] =
              static_cast<float>(acc / wsum);
        }
      }
    }
    data.swap(scratch);
  }
}

}  // namespace

void PhantomConfig::validate() const {
  VolumeGeometry g{dims, spacing, {0, 0, 0}};
  g.validate();
  for (const auto& [region, count] : tumors_per_region)
    if (count < 0) throw std::invalid_argument("tumor counts must be >= 0");
  if (!(tumor_radius_min_mm > 0.0) || tumor_radius_max_mm < tumor_radius_min_mm)
    throw std::invalid_argument("tumor radius range must be positive and ordered");
  if (fp_blob_count < 0) throw std::invalid_argument("fp_blob_count must be >= 0");
  if (ensemble_members < 1) throw std::invalid_argument("ensemble_members must be >= 1");
  if (noise_sigma < 0.0 || image_noise_sigma < 0.0 || blur_sigma_mm < 0.0)
    throw std::invalid_argument("noise/blur parameters must be >= 0");
  for (int a = 0; a < 3; ++a) {
    const int rv = static_cast<int>(std::ceil(tumor_radius_max_mm / spacing[a]));
    if (2 * rv + 2 >= dims[a])
      throw std::invalid_argument("tumor radius exceeds body extent");
  }
}

PhantomBundle generate_phantom(const PhantomConfig& config) {
  config.validate();
  PhantomBundle bundle;
  VolumeGeometry g{config.dims, config.spacing, {0.0, 0.0, 0.0}};

  // --- anatomy ---------------------------------------------------------
  bundle.anatomy_raw.geometry = g;
  bundle.anatomy_raw.allocate(0);
  bundle.anatomy_raw.label_dictionary[0] = "background";

  std::vector<float> organ_intensity(g.voxel_count(), static_cast<float>(kBaseIntensity));
  LabelVolume forbidden = make_binary_volume(g, "nf_forbidden");

  int lung_lo = -1, lung_hi = -1, hip_lo = -1;
  std::int32_t next_id = 0;
  for (const auto& spec : organ_specs()) {
    const std::int32_t id = ++next_id;
    bundle.anatomy_raw.label_dictionary[id] = spec.name;
    const bool is_lung = std::string_view(spec.name).ends_with("lung");
    const bool is_hip = std::string_view(spec.name).ends_with("hip");

    auto paint = [&](int i, int j, int k) {
      const std::size_t idx = g.index(i, j, k);
      bundle.anatomy_raw.data[idx] = id;
      organ_intensity[idx] = static_cast<float>(spec.intensity);
      if (spec.nf_forbidden) forbidden.data[idx] = 1;
      if (is_lung) {
        if (lung_lo < 0 || j < lung_lo) lung_lo = j;
        if (lung_hi < 0 || j > lung_hi) lung_hi = j;
      }
      if (is_hip && (hip_lo < 0 || j < hip_lo)) hip_lo = j;
    };

    if (spec.ellipsoid) {
      const std::array<int, 3> c = {frac_index(spec.lo[0], g.dims[0]),
                                    frac_index(spec.lo[1], g.dims[1]),
                                    frac_index(spec.lo[2], g.dims[2])};
      const std::array<double, 3> semi = {spec.hi[0] * g.dims[0], spec.hi[1] * g.dims[1],
                                          spec.hi[2] * g.dims[2]};
      for (int i = 0; i < g.dims[0]; ++i) {
        const double di = (i - c[0]) / semi[0];
        if (di * di > 1.0) continue;
        for (int j = 0; j < g.dims[1]; ++j) {
          const double dj = (j - c[1]) / semi[1];
          if (di * di + dj * dj > 1.0) continue;
          for (int k = 0; k < g.dims[2]; ++k) {
            const double dk = (k - c[2]) / semi[2];
            if (di * di + dj * dj + dk * dk <= 1.0) paint(i, j, k);
          }
        }
      }
    } else {
      for (int i = frac_index(spec.lo[0], g.dims[0]); i <= frac_index(spec.hi[0], g.dims[0]); ++i)
        for (int j = frac_index(spec.lo[1], g.dims[1]); j <= frac_index(spec.hi[1], g.dims[1]); ++j)
          for (int k = frac_index(spec.lo[2], g.dims[2]); k <= frac_index(spec.hi[2], g.dims[2]); ++k)
            paint(i, j, k);
    }
  }
  bundle.manifest.landmarks = {lung_hi, lung_lo, hip_lo};
  bundle.manifest.landmarks.validate();

  // --- tumors ----------------------------------------------------------
  bundle.gt_tumors = make_binary_volume(g, "tumor");
  Rng tumor_rng(Rng::derive(config.seed, "tumors"));
  const BodyRegionPartition& part = bundle.manifest.landmarks;

  for (AnatomicalRegion region : kAllRegions) {
    const auto count_it = config.tumors_per_region.find(region);
    const int count = count_it == config.tumors_per_region.end() ? 0 : count_it->second;
    int z_lo = 0, z_hi = 0;
    switch (region) {
      case AnatomicalRegion::head_neck: z_lo = part.z_lung_top + 1; z_hi = g.dims[1] - 1; break;
      case AnatomicalRegion::chest: z_lo = part.z_lung_bottom + 1; z_hi = part.z_lung_top; break;
      case AnatomicalRegion::abdomen: z_lo = part.z_hip_bottom + 1; z_hi = part.z_lung_bottom; break;
      case AnatomicalRegion::legs: z_lo = 0; z_hi = part.z_hip_bottom; break;
    }
    for (int t = 0; t < count; ++t) {
      bool placed = false;
      for (int attempt = 0; attempt < config.max_placement_retries; ++attempt) {
        Ellipsoid e;
        e.radius_mm = tumor_rng.uniform(config.tumor_radius_min_mm, config.tumor_radius_max_mm);
        std::array<int, 3> margin;
        for (int a = 0; a < 3; ++a)
          margin[a] = static_cast<int>(std::ceil(e.radius_mm / g.spacing[a])) + 1;
        const int zl = std::max(z_lo, margin[1]);
        const int zh = std::min(z_hi, g.dims[1] - 1 - margin[1]);
        if (zh < zl) continue;
        e.center[1] = zl + tumor_rng.uniform_index(zh - zl + 1);
        e.center[0] = margin[0] + tumor_rng.uniform_index(g.dims[0] - 2 * margin[0]);
        e.center[2] = margin[2] + tumor_rng.uniform_index(g.dims[2] - 2 * margin[2]);

        const auto voxels = ellipsoid_voxels(e, g);
        if (!inside_grid(voxels, g)) continue;
        bool blocked = false;
        for (const auto& v : voxels) {
          if (forbidden.at(v[0], v[1], v[2]) != 0) {
            blocked = true;
            break;
          }
        }
        if (blocked || touches_mask(voxels, bundle.gt_tumors)) continue;
        for (const auto& v : voxels) bundle.gt_tumors.at(v[0], v[1], v[2]) = 1;
        bundle.manifest.tumors.push_back({e.center, e.radius_mm, region});
        placed = true;
        break;
      }
      if (!placed)
        throw std::runtime_error("region too small for requested tumor count: " +
                                 region_name(region));
    }
  }

  // --- FP blob sites (shared across members, derived from the seed) -----
  bundle.manifest.fp_blobs = place_fp_blobs(bundle.gt_tumors, config);

  // --- intensity image ---------------------------------------------------
  bundle.image.geometry = g;
  bundle.image.data = std::move(organ_intensity);
  const float tumor_value = static_cast<float>(kBaseIntensity + config.tumor_contrast);
  for (std::size_t i = 0; i < bundle.gt_tumors.data.size(); ++i)
    if (bundle.gt_tumors.data[i] != 0) bundle.image.data[i] = tumor_value;
  for (const auto& blob : bundle.manifest.fp_blobs) {
    // striped texture along the cranio-caudal axis, high variance
    for (const auto& v : ellipsoid_voxels({blob.center, blob.radius_mm}, g)) {
      const int band =
          static_cast<int>(std::floor(v[1] * g.spacing[1] / config.fp_stripe_period_mm));
      const double value = band % 2 == 0
                               ? kBaseIntensity + config.fp_stripe_amplitude
                               : kBaseIntensity - 0.5 * config.fp_stripe_amplitude;
      bundle.image.at(v[0], v[1], v[2]) = static_cast<float>(value);
    }
  }
  if (config.image_noise_sigma > 0.0) {
    Rng image_rng(Rng::derive(config.seed, "image-noise"));
    for (auto& v : bundle.image.data)
      v = static_cast<float>(v + image_rng.normal(0.0, config.image_noise_sigma));
  }

  // --- ensemble ----------------------------------------------------------
  bundle.ensemble.reserve(static_cast<std::size_t>(config.ensemble_members));
  for (int m = 0; m < config.ensemble_members; ++m)
    bundle.ensemble.push_back(degrade_to_confidence(bundle.gt_tumors, config, m));
  return bundle;
}

ConfidenceVolume degrade_to_confidence(const LabelVolume& gt, const PhantomConfig& config,
                                       int member_index) {
  const auto& g = gt.geometry;
  ConfidenceVolume conf;
  conf.geometry = g;
  conf.data.resize(g.voxel_count());
  for (std::size_t i = 0; i < conf.data.size(); ++i)
    conf.data[i] = gt.data[i] != 0 ? 1.0f : 0.0f;

  gaussian_blur_inplace(conf.data, g, config.blur_sigma_mm);

  for (const auto& blob : place_fp_blobs(gt, config)) {
    for (const auto& v : ellipsoid_voxels({blob.center, blob.radius_mm}, g)) {
      float& c = conf.at(v[0], v[1], v[2]);
      c = std::max(c, static_cast<float>(config.fp_confidence));
    }
  }

  if (config.noise_sigma > 0.0) {
    Rng rng(Rng::derive(config.seed, "member-noise", static_cast<std::uint64_t>(member_index)));
    for (auto& c : conf.data) {
      const double noisy = c + rng.normal(0.0, config.noise_sigma);
      c = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
  }
  return conf;
}

void PhantomConfig::save(const std::filesystem::path& path) const {
  nlohmann::json counts;
  for (const auto& [region, count] : tumors_per_region) counts[region_name(region)] = count;
  nlohmann::json j{
      {"seed", seed},
      {"dims", dims},
      {"spacing", spacing},
      {"tumors_per_region", counts},
      {"tumor_radius_min_mm", tumor_radius_min_mm},
      {"tumor_radius_max_mm", tumor_radius_max_mm},
      {"tumor_contrast", tumor_contrast},
      {"image_noise_sigma", image_noise_sigma},
      {"noise_sigma", noise_sigma},
      {"blur_sigma_mm", blur_sigma_mm},
      {"fp_blob_count", fp_blob_count},
      {"fp_blob_radius_min_mm", fp_blob_radius_min_mm},
      {"fp_blob_radius_max_mm", fp_blob_radius_max_mm},
      {"fp_confidence", fp_confidence},
      {"fp_stripe_amplitude", fp_stripe_amplitude},
      {"fp_stripe_period_mm", fp_stripe_period_mm},
      {"ensemble_members", ensemble_members},
      {"max_placement_retries", max_placement_retries},
  };
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

PhantomConfig PhantomConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  PhantomConfig c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("dims")) c.dims = j.at("dims").get<std::array<int, 3>>();
  if (j.contains("spacing")) c.spacing = j.at("spacing").get<std::array<double, 3>>();
  if (j.contains("tumors_per_region")) {
    c.tumors_per_region.clear();
    for (const auto& [name, count] : j.at("tumors_per_region").items())
      c.tumors_per_region[region_from_name(name)] = count.get<int>();
  }
  c.tumor_radius_min_mm = j.value("tumor_radius_min_mm", c.tumor_radius_min_mm);
  c.tumor_radius_max_mm = j.value("tumor_radius_max_mm", c.tumor_radius_max_mm);
  c.tumor_contrast = j.value("tumor_contrast", c.tumor_contrast);
  c.image_noise_sigma = j.value("image_noise_sigma", c.image_noise_sigma);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.blur_sigma_mm = j.value("blur_sigma_mm", c.blur_sigma_mm);
  c.fp_blob_count = j.value("fp_blob_count", c.fp_blob_count);
  c.fp_blob_radius_min_mm = j.value("fp_blob_radius_min_mm", c.fp_blob_radius_min_mm);
  c.fp_blob_radius_max_mm = j.value("fp_blob_radius_max_mm", c.fp_blob_radius_max_mm);
  c.fp_confidence = j.value("fp_confidence", c.fp_confidence);
  c.fp_stripe_amplitude = j.value("fp_stripe_amplitude", c.fp_stripe_amplitude);
  c.fp_stripe_period_mm = j.value("fp_stripe_period_mm", c.fp_stripe_period_mm);
  c.ensemble_members = j.value("ensemble_members", c.ensemble_members);
  c.max_placement_retries = j.value("max_placement_retries", c.max_placement_retries);
  return c;
}

void PhantomManifest::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["tumors"] = nlohmann::json::array();
  for (const auto& t : tumors)
    j["tumors"].push_back({{"center", t.center},
                           {"radius_mm", t.radius_mm},
                           {"region", region_name(t.region)}});
  j["fp_blobs"] = nlohmann::json::array();
  for (const auto& b : fp_blobs)
    j["fp_blobs"].push_back({{"center", b.center}, {"radius_mm", b.radius_mm}});
  j["landmarks"] = {{"z_lung_top", landmarks.z_lung_top},
                    {"z_lung_bottom", landmarks.z_lung_bottom},
                    {"z_hip_bottom", landmarks.z_hip_bottom}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

PhantomManifest PhantomManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  PhantomManifest m;
  for (const auto& t : j.at("tumors"))
    m.tumors.push_back({t.at("center").get<std::array<int, 3>>(),
                        t.at("radius_mm").get<double>(),
                        region_from_name(t.at("region").get<std::string>())});
  for (const auto& b : j.at("fp_blobs"))
    m.fp_blobs.push_back({b.at("center").get<std::array<int, 3>>(),
                          b.at("radius_mm").get<double>()});
  m.landmarks.z_lung_top = j.at("landmarks").at("z_lung_top").get<int>();
  m.landmarks.z_lung_bottom = j.at("landmarks").at("z_lung_bottom").get<int>();
  m.landmarks.z_hip_bottom = j.at("landmarks").at("z_hip_bottom").get<int>();
  return m;
}

}  // namespace nfpipe
