#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nfpipe/resample.hpp"
#include "nfpipe/rng.hpp"

using namespace nfpipe;

namespace {

ImageVolume make_image(std::array<int, 3> dims, std::array<double, 3> spacing,
                       std::uint64_t seed) {
  ImageVolume v;
  v.geometry.dims = dims;
  v.geometry.spacing = spacing;
  v.allocate();
  Rng rng(seed);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(0.0, 100.0));
  return v;
}

LabelVolume make_labels(std::array<int, 3> dims, std::array<double, 3> spacing,
                        std::uint64_t seed, int n_labels) {
  LabelVolume v;
  v.geometry.dims = dims;
  v.geometry.spacing = spacing;
  v.allocate(0);
  v.label_dictionary[0] = "background";
  for (int l = 1; l <= n_labels; ++l) v.label_dictionary[l] = "label_" + std::to_string(l);
  Rng rng(seed);
  for (auto& x : v.data) x = static_cast<std::int32_t>(rng.uniform_int(n_labels + 1));
  return v;
}

// brute-force oracle: the physically nearest input voxel centre (origin-held
// grids, ties toward the larger index)
int oracle_nearest(double out_index, double t, double s, int n_in) {
  const double x = out_index * t;
  int best = 0;
  double best_dist = std::fabs(x - 0.0);
  for (int j = 1; j < n_in; ++j) {
    const double d = std::fabs(x - j * s);
    if (d < best_dist || (d == best_dist && j > best)) {
      best = j;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("resampling to the current spacing is the identity") {
  const ImageVolume v = make_image({4, 5, 6}, {2.0, 1.0, 0.5}, 1);
  const ImageVolume out = resample(v, v.geometry.spacing, ResampleMode::linear);
  CHECK(out.geometry == v.geometry);
  CHECK(out.data == v.data);
}

TEST_CASE("nearest resampling matches the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImageVolume v = make_image({4, 6, 5}, {1.0, 2.0, 1.5}, 100 + seed);
    const std::array<double, 3> target{2.0, 1.5, 2.0};
    const ImageVolume out = resample(v, target, ResampleMode::nearest);
    for (int a = 0; a < 3; ++a) {
      const int expected =
          std::max(1, static_cast<int>(std::floor(
                          v.geometry.dims[a] * v.geometry.spacing[a] / target[a] + 0.5)));
      CHECK(out.geometry.dims[a] == expected);
    }
    for (int i = 0; i < out.geometry.dims[0]; ++i)
      for (int j = 0; j < out.geometry.dims[1]; ++j)
        for (int k = 0; k < out.geometry.dims[2]; ++k) {
          const int si = oracle_nearest(i, target[0], v.geometry.spacing[0], v.geometry.dims[0]);
          const int sj = oracle_nearest(j, target[1], v.geometry.spacing[1], v.geometry.dims[1]);
          const int sk = oracle_nearest(k, target[2], v.geometry.spacing[2], v.geometry.dims[2]);
          CHECK(out.at(i, j, k) == v.at(si, sj, sk));
        }
  }
}

TEST_CASE("4^3 at unit spacing downsampled to 2mm gives dims (2,2,2) from the input set") {
  const ImageVolume v = make_image({4, 4, 4}, {1.0, 1.0, 1.0}, 2);
  const ImageVolume out = resample(v, {2.0, 2.0, 2.0}, ResampleMode::nearest);
  CHECK(out.geometry.dims == std::array<int, 3>{2, 2, 2});
  const std::set<float> input_values(v.data.begin(), v.data.end());
  for (float x : out.data) CHECK(input_values.count(x) == 1);
}

TEST_CASE("invalid spacings and label/linear combinations are rejected") {
  const ImageVolume v = make_image({4, 4, 4}, {1.0, 1.0, 1.0}, 3);
  CHECK_THROWS_AS(resample(v, {0.0, 1.0, 1.0}, ResampleMode::nearest), std::invalid_argument);
  const LabelVolume labels = make_labels({4, 4, 4}, {1.0, 1.0, 1.0}, 4, 3);
  CHECK_THROWS_AS(resample(labels, {2.0, 2.0, 2.0}, ResampleMode::linear),
                  std::invalid_argument);
}

TEST_CASE("nearest label resampling never invents labels") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const LabelVolume labels = make_labels({5, 7, 6}, {1.0, 2.0, 1.0}, 50 + trial, 4);
    const std::array<double, 3> target{1.0 + rng.uniform(), 1.0 + rng.uniform(),
                                       1.0 + rng.uniform()};
    const LabelVolume out = resample(labels, target, ResampleMode::nearest);
    const std::set<std::int32_t> input_set(labels.data.begin(), labels.data.end());
    for (std::int32_t v : out.data) CHECK(input_set.count(v) == 1);
    CHECK(out.label_dictionary == labels.label_dictionary);
  }
}

TEST_CASE("zscore: constant input maps to all zeros") {
  ImageVolume v = make_image({3, 3, 3}, {1, 1, 1}, 5);
  std::fill(v.data.begin(), v.data.end(), 7.0f);
  const ImageVolume out = zscore_normalize(v);
  for (float x : out.data) CHECK(x == 0.0f);
}

TEST_CASE("zscore: two-voxel {0,2} maps to {-1,1}") {
  ImageVolume v;
  v.geometry.dims = {1, 1, 2};
  v.allocate();
  v.data = {0.0f, 2.0f};
  const ImageVolume out = zscore_normalize(v);
  CHECK(out.data[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.data[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zscore: seeded volume reaches mean 0 / std 1 per an independent oracle") {
  const ImageVolume v = make_image({16, 16, 16}, {1, 1, 1}, 77);
  const ImageVolume out = zscore_normalize(v);
  // independent plain-double moments
  double sum = 0.0;
  for (float x : out.data) sum += x;
  const double mean = sum / static_cast<double>(out.data.size());
  double var = 0.0;
  for (float x : out.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(out.data.size());
  CHECK(std::fabs(mean) < 1e-5);
  CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-5);

  // idempotence within 1e-4
  const ImageVolume twice = zscore_normalize(out);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    CHECK(std::fabs(twice.data[i] - out.data[i]) < 1e-4);
}

TEST_CASE("rescale_labels_unit divides by the dictionary maximum") {
  LabelVolume labels;
  labels.geometry.dims = {1, 1, 4};
  labels.allocate(0);
  labels.data = {0, 6, 12, 3};
  labels.label_dictionary[0] = "background";
  for (int l = 1; l <= 12; ++l) labels.label_dictionary[l] = "organ_" + std::to_string(l);
  const ImageVolume out = rescale_labels_unit(labels);
  CHECK(out.data[0] == 0.0f);
  CHECK(out.data[1] == 0.5f);
  CHECK(out.data[2] == 1.0f);
  CHECK(out.data[3] == 0.25f);

  // observed max below dictionary max still divides by the dictionary max
  LabelVolume sparse = labels;
  sparse.data = {0, 6, 6, 0};
  const ImageVolume sparse_out = rescale_labels_unit(sparse);
  CHECK(sparse_out.data[1] == 0.5f);

  LabelVolume empty;
  empty.geometry.dims = {1, 1, 2};
  empty.allocate(0);
  empty.label_dictionary = {{0, "background"}};
  CHECK_THROWS_WITH_AS(rescale_labels_unit(empty), doctest::Contains("no foreground"),
                       std::invalid_argument);
}
