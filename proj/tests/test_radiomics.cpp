#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nfpipe/radiomics.hpp"
#include "nfpipe/rng.hpp"
#include "oracles/radiomics_oracles.hpp"

using namespace nfpipe;

namespace {

TumorCandidate make_candidate(std::vector<std::array<int, 3>> voxels) {
  TumorCandidate c;
  c.id = 1;
  c.voxels = std::move(voxels);
  c.bbox.lo = c.bbox.hi = c.voxels.front();
  for (const auto& v : c.voxels)
    for (int a = 0; a < 3; ++a) {
      c.bbox.lo[a] = std::min(c.bbox.lo[a], v[a]);
      c.bbox.hi[a] = std::max(c.bbox.hi[a], v[a]);
    }
  return c;
}

ImageVolume blank_image(std::array<int, 3> dims, std::array<double, 3> spacing = {1, 1, 1}) {
  ImageVolume image;
  image.geometry.dims = dims;
  image.geometry.spacing = spacing;
  image.allocate(0.0f);
  return image;
}

bool close_rel(double a, double b, double tol = 1e-9) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

TumorCandidate box_candidate(std::array<int, 3> lo, std::array<int, 3> hi) {
  std::vector<std::array<int, 3>> voxels;
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) voxels.push_back({i, j, k});
  return make_candidate(std::move(voxels));
}

}  // namespace

TEST_CASE("constant region: degenerate first-order and GLCM values") {
  ImageVolume image = blank_image({5, 5, 5});
  const TumorCandidate c = box_candidate({1, 1, 1}, {3, 3, 3});
  for (const auto& [i, j, k] : c.voxels) image.at(i, j, k) = 5.0f;

  const FeatureVector fo = first_order_features(c, image);
  CHECK(fo.value("mean") == 5.0);
  CHECK(fo.value("variance") == 0.0);
  CHECK(fo.value("skewness") == 0.0);
  CHECK(fo.value("entropy") == 0.0);
  CHECK(fo.value("uniformity") == 1.0);
  CHECK(fo.value("range") == 0.0);

  const FeatureVector glcm = glcm_features(c, image, 32, 1);
  CHECK(glcm.value("glcm_joint_energy") == 1.0);
  CHECK(glcm.value("glcm_contrast") == 0.0);
  CHECK(glcm.value("glcm_joint_entropy") == 0.0);
  CHECK(glcm.value("glcm_correlation") == 1.0);  // zero-variance convention
}

TEST_CASE("two voxels {1,3}: textbook first-order values") {
  ImageVolume image = blank_image({3, 3, 3});
  const TumorCandidate c = make_candidate({{0, 0, 0}, {0, 0, 1}});
  image.at(0, 0, 0) = 1.0f;
  image.at(0, 0, 1) = 3.0f;
  const FeatureVector fo = first_order_features(c, image);
  CHECK(fo.value("mean") == 2.0);
  CHECK(fo.value("range") == 2.0);
  CHECK(fo.value("std_dev") == 1.0);  // population
  CHECK(fo.value("energy") == 10.0);
  CHECK(fo.value("median") == 2.0);
}

TEST_CASE("first-order features match the raw-moment oracle on 100 seeded candidates") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    ImageVolume image = blank_image({10, 10, 10}, {2.0, 0.5, 0.5});
    std::vector<std::array<int, 3>> voxels;
    const int n = 5 + static_cast<int>(rng.uniform_int(120));
    std::set<std::array<int, 3>> used;
    while (static_cast<int>(voxels.size()) < n) {
      std::array<int, 3> v = {rng.uniform_index(10), rng.uniform_index(10), rng.uniform_index(10)};
      if (!used.insert(v).second) continue;
      voxels.push_back(v);
    }
    std::vector<double> values;
    for (const auto& [i, j, k] : voxels) {
      const float x = static_cast<float>(rng.normal(0.5, 0.2));
      image.at(i, j, k) = x;
      values.push_back(static_cast<double>(x));
    }
    const TumorCandidate c = make_candidate(voxels);
    const FeatureVector fo = first_order_features(c, image);
    const auto oracle = oracles::first_order_oracle(values, image.geometry.voxel_volume_mm3());

    CHECK(close_rel(fo.value("mean"), oracle.mean));
    CHECK(close_rel(fo.value("median"), oracle.median));
    CHECK(close_rel(fo.value("minimum"), oracle.minimum));
    CHECK(close_rel(fo.value("maximum"), oracle.maximum));
    CHECK(close_rel(fo.value("range"), oracle.range));
    CHECK(close_rel(fo.value("variance"), oracle.variance));
    CHECK(close_rel(fo.value("std_dev"), oracle.std_dev));
    CHECK(close_rel(fo.value("skewness"), oracle.skewness));
    CHECK(close_rel(fo.value("kurtosis"), oracle.kurtosis));
    CHECK(close_rel(fo.value("energy"), oracle.energy));
    CHECK(close_rel(fo.value("total_energy"), oracle.total_energy));
    CHECK(close_rel(fo.value("root_mean_square"), oracle.root_mean_square));
    CHECK(close_rel(fo.value("mean_absolute_deviation"), oracle.mean_absolute_deviation));
    CHECK(close_rel(fo.value("interquartile_range"), oracle.interquartile_range));
    CHECK(close_rel(fo.value("percentile_10"), oracle.percentile_10));
    CHECK(close_rel(fo.value("percentile_90"), oracle.percentile_90));
    CHECK(close_rel(fo.value("entropy"), oracle.entropy));
    CHECK(close_rel(fo.value("uniformity"), oracle.uniformity));
  }
}

TEST_CASE("10-voxel candidate volume at the whole-body spacing") {
  const TumorCandidate c = box_candidate({0, 0, 0}, {0, 1, 4});
  VolumeGeometry g;
  g.dims = {4, 4, 8};
  g.spacing = {7.8, 0.625, 0.625};
  const FeatureVector shape = shape_features(c, g);
  CHECK(shape.value("volume_mm3") == doctest::Approx(30.46875).epsilon(1e-12));
}

TEST_CASE("single voxel at unit spacing: documented degenerate shape") {
  const TumorCandidate c = make_candidate({{2, 2, 2}});
  VolumeGeometry g;
  g.dims = {5, 5, 5};
  const FeatureVector shape = shape_features(c, g);
  CHECK(shape.value("volume_mm3") == 1.0);
  CHECK(shape.value("surface_area_mm2") == 6.0);
  CHECK(shape.value("max_3d_diameter") == 0.0);
  CHECK(shape.value("elongation") == 1.0);
  CHECK(shape.value("flatness") == 1.0);
  CHECK(shape.value("pca_major_axis") == 0.0);
}

TEST_CASE("digital ball r=8: shape features match the brute-force oracle") {
  std::vector<std::array<int, 3>> voxels;
  for (int i = -8; i <= 8; ++i)
    for (int j = -8; j <= 8; ++j)
      for (int k = -8; k <= 8; ++k)
        if (i * i + j * j + k * k <= 64) voxels.push_back({i + 9, j + 9, k + 9});
  const TumorCandidate c = make_candidate(voxels);
  VolumeGeometry g;
  g.dims = {19, 19, 19};
  const FeatureVector shape = shape_features(c, g);

  const auto oracle = oracles::shape_oracle(voxels, g.spacing);
  CHECK(close_rel(shape.value("volume_mm3"), oracle.volume_mm3));
  CHECK(close_rel(shape.value("surface_area_mm2"), oracle.surface_area_mm2));
  const double ratio = shape.value("sphericity") / oracle.sphericity;
  CHECK(ratio >= 0.9);
  CHECK(ratio <= 1.1);

  // near-isotropy of the ball
  CHECK(shape.value("elongation") > 0.95);
  CHECK(shape.value("flatness") > 0.95);
  // max diameter of the digitized r=8 ball is the axis-aligned 16
  CHECK(shape.value("max_3d_diameter") == doctest::Approx(16.0));
}

TEST_CASE("striped candidate: GLCM contrast equals exhaustive pair enumeration") {
  // two-voxel-thick stripes along the cranio-caudal axis, quantized to 2 bins
  ImageVolume image = blank_image({3, 8, 6});
  std::vector<std::array<int, 3>> voxels;
  for (int j = 0; j < 8; ++j)
    for (int k = 0; k < 4; ++k) {
      voxels.push_back({1, j, k});
      image.at(1, j, k) = (j / 2) % 2 == 0 ? 0.0f : 1.0f;
    }
  const TumorCandidate c = make_candidate(voxels);
  const auto matrices = detail::build_glcm_matrices(c, image, 2, 1);

  std::vector<int> bins;
  for (const auto& [i, j, k] : c.voxels) bins.push_back((j / 2) % 2 == 0 ? 0 : 1);
  const auto& dirs = detail::glcm_directions();
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const auto oracle = oracles::glcm_direction_oracle(c.voxels, bins, 2, dirs[d]);
    const double oracle_pairs =
        std::accumulate(oracle.begin(), oracle.end(), 0.0);
    if (matrices[d].pair_count == 0) {
      CHECK(oracle_pairs == 0.0);
      continue;
    }
    for (std::size_t e = 0; e < oracle.size(); ++e)
      CHECK(matrices[d].p[e] == doctest::Approx(oracle[e]).epsilon(1e-12));
    CHECK(oracles::glcm_contrast_of(matrices[d].p, 2) ==
          doctest::Approx(oracles::glcm_contrast_of(oracle, 2)).epsilon(1e-12));
  }

  // the stripe axis (0,1,0) sees transitions at every stripe boundary:
  // 8 columns of j-pairs: per k-column pairs (0,1),(1,2)...(6,7) -> 7 pairs,
  // transitions at j=1-2,3-4,5-6 -> 3 of 7 pairs differ; contrast = 2*3/14.
  const auto stripe_matrix = matrices[1];  // direction (0,1,0)
  CHECK(oracles::glcm_contrast_of(stripe_matrix.p, 2) ==
        doctest::Approx(3.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("single-voxel candidates have no co-occurrence pairs") {
  ImageVolume image = blank_image({3, 3, 3});
  const TumorCandidate c = make_candidate({{1, 1, 1}});
  CHECK_THROWS_WITH_AS(glcm_features(c, image, 8, 1), doctest::Contains("no co-occurrence"),
                       std::runtime_error);
  // distant voxels at distance 2 in every direction also have none at d=3
  const TumorCandidate pair = make_candidate({{0, 0, 0}, {0, 0, 1}});
  CHECK_THROWS_AS(glcm_features(pair, image, 8, 3), std::runtime_error);
  CHECK_THROWS_AS(glcm_features(pair, image, 1, 1), std::invalid_argument);  // bins < 2
}

TEST_CASE("features are invariant under voxel enumeration order") {
  Rng rng(11);
  ImageVolume image = blank_image({8, 8, 8}, {2.0, 1.0, 0.5});
  TumorCandidate c = box_candidate({1, 1, 1}, {4, 5, 3});
  for (const auto& [i, j, k] : c.voxels)
    image.at(i, j, k) = static_cast<float>(rng.uniform());

  TumorCandidate shuffled = c;
  for (std::size_t i = shuffled.voxels.size(); i > 1; --i)
    std::swap(shuffled.voxels[i - 1], shuffled.voxels[rng.uniform_int(i)]);

  const FeatureVector a = extract_all_features(c, image, 16, 1);
  const FeatureVector b = extract_all_features(shuffled, image, 16, 1);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.items()[i].first == b.items()[i].first);
    CHECK(close_rel(a.items()[i].second, b.items()[i].second, 1e-12));
  }
}

TEST_CASE("first-order and shape features are translation invariant") {
  Rng rng(12);
  ImageVolume image = blank_image({12, 12, 12}, {1.5, 0.75, 0.75});
  TumorCandidate c = box_candidate({1, 1, 1}, {3, 4, 3});
  std::vector<float> pattern;
  for (const auto& [i, j, k] : c.voxels) {
    const float x = static_cast<float>(rng.uniform());
    image.at(i, j, k) = x;
    pattern.push_back(x);
  }
  ImageVolume shifted_image = blank_image({12, 12, 12}, {1.5, 0.75, 0.75});
  TumorCandidate shifted = c;
  for (std::size_t v = 0; v < shifted.voxels.size(); ++v) {
    for (int a = 0; a < 3; ++a) shifted.voxels[v][a] += 5;
    shifted_image.at(shifted.voxels[v][0], shifted.voxels[v][1], shifted.voxels[v][2]) =
        pattern[v];
  }
  shifted.bbox.lo = {6, 6, 6};
  shifted.bbox.hi = {8, 9, 8};

  const FeatureVector a = first_order_features(c, image);
  const FeatureVector b = first_order_features(shifted, shifted_image);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.items()[i].second == b.items()[i].second);

  const FeatureVector sa = shape_features(c, image.geometry);
  const FeatureVector sb = shape_features(shifted, image.geometry);
  for (std::size_t i = 0; i < sa.size(); ++i)
    CHECK(close_rel(sa.items()[i].second, sb.items()[i].second, 1e-12));
}

TEST_CASE("shape features are invariant to 90-degree rotations at isotropic spacing") {
  Rng rng(13);
  std::vector<std::array<int, 3>> voxels;
  std::set<std::array<int, 3>> used;
  while (voxels.size() < 40) {
    std::array<int, 3> v = {rng.uniform_index(6), rng.uniform_index(6), rng.uniform_index(6)};
    if (used.insert(v).second) voxels.push_back(v);
  }
  // keep it 26-connected enough for the test by adding a filled core
  for (int i = 2; i <= 3; ++i)
    for (int j = 2; j <= 3; ++j)
      for (int k = 2; k <= 3; ++k) {
        std::array<int, 3> v{i, j, k};
        if (used.insert(v).second) voxels.push_back(v);
      }
  const TumorCandidate c = make_candidate(voxels);

  // rotate 90 degrees about axis 0: (i, j, k) -> (i, k, 9 - j)
  std::vector<std::array<int, 3>> rotated;
  for (const auto& [i, j, k] : voxels) rotated.push_back({i, k, 9 - j});
  const TumorCandidate cr = make_candidate(rotated);

  VolumeGeometry g;
  g.dims = {10, 10, 10};
  const FeatureVector a = shape_features(c, g);
  const FeatureVector b = shape_features(cr, g);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(close_rel(a.items()[i].second, b.items()[i].second, 1e-9));
}

TEST_CASE("GLCM matrices are normalized with bounded features") {
  Rng rng(14);
  ImageVolume image = blank_image({8, 8, 8});
  TumorCandidate c = box_candidate({1, 2, 1}, {5, 6, 5});
  for (const auto& [i, j, k] : c.voxels)
    image.at(i, j, k) = static_cast<float>(rng.uniform());
  const auto matrices = detail::build_glcm_matrices(c, image, 8, 1);
  for (const auto& m : matrices) {
    if (m.pair_count == 0) continue;
    double total = 0;
    for (double p : m.p) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  const FeatureVector glcm = glcm_features(c, image, 8, 1);
  CHECK(glcm.value("glcm_joint_energy") > 0.0);
  CHECK(glcm.value("glcm_joint_energy") <= 1.0);
  CHECK(glcm.value("glcm_contrast") >= 0.0);
}

TEST_CASE("empty candidates are rejected everywhere") {
  ImageVolume image = blank_image({3, 3, 3});
  TumorCandidate empty;
  CHECK_THROWS_AS(first_order_features(empty, image), std::invalid_argument);
  CHECK_THROWS_AS(shape_features(empty, image.geometry), std::invalid_argument);
  CHECK_THROWS_AS(glcm_features(empty, image, 8, 1), std::invalid_argument);
}

TEST_CASE("feature catalog matches extracted order") {
  ImageVolume image = blank_image({4, 4, 4});
  TumorCandidate c = box_candidate({0, 0, 0}, {2, 2, 2});
  Rng rng(15);
  for (const auto& [i, j, k] : c.voxels) image.at(i, j, k) = static_cast<float>(rng.uniform());
  const FeatureVector all = extract_all_features(c, image, 16, 1);
  REQUIRE(all.size() == feature_catalog().size());
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all.items()[i].first == feature_catalog()[i]);
}
