#include <doctest.h>

#include <set>

#include "nfpipe/candidates.hpp"
#include "nfpipe/rng.hpp"

using namespace nfpipe;

namespace {

ConfidenceVolume make_confidence(std::array<int, 3> dims, float fill = 0.0f) {
  ConfidenceVolume v;
  v.geometry.dims = dims;
  v.allocate(fill);
  return v;
}

ConfidenceVolume random_confidence(std::array<int, 3> dims, std::uint64_t seed) {
  ConfidenceVolume v = make_confidence(dims);
  Rng rng(seed);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform());
  return v;
}

}  // namespace

TEST_CASE("fusing identical members reproduces the member bitwise") {
  const ConfidenceVolume member = random_confidence({4, 4, 4}, 3);
  const ConfidenceVolume fused = fuse_ensemble({member, member, member});
  CHECK(fused.data == member.data);
  CHECK(fused.geometry == member.geometry);
}

TEST_CASE("fusion averages voxelwise") {
  ConfidenceVolume a = make_confidence({1, 1, 1}, 0.2f);
  ConfidenceVolume b = make_confidence({1, 1, 1}, 0.4f);
  ConfidenceVolume c = make_confidence({1, 1, 1}, 0.6f);
  const ConfidenceVolume fused = fuse_ensemble({a, b, c});
  // double accumulation keeps the mean accurate to the float ulp
  CHECK(fused.data[0] == 0.4f);
}

TEST_CASE("fusion rejects empty ensembles and geometry mismatches") {
  CHECK_THROWS_AS(fuse_ensemble({}), std::invalid_argument);
  ConfidenceVolume a = make_confidence({2, 2, 2});
  ConfidenceVolume b = make_confidence({2, 2, 3});
  CHECK_THROWS_AS(fuse_ensemble({a, b}), std::invalid_argument);
}

TEST_CASE("fusion is bounded by the voxelwise member min/max") {
  std::vector<ConfidenceVolume> members;
  for (std::uint64_t m = 0; m < 5; ++m) members.push_back(random_confidence({6, 5, 4}, 40 + m));
  const ConfidenceVolume fused = fuse_ensemble(members);
  for (std::size_t i = 0; i < fused.data.size(); ++i) {
    float lo = 1.0f, hi = 0.0f;
    for (const auto& m : members) {
      lo = std::min(lo, m.data[i]);
      hi = std::max(hi, m.data[i]);
    }
    CHECK(fused.data[i] >= lo);
    CHECK(fused.data[i] <= hi);
  }
}

TEST_CASE("binarize includes the boundary and validates tau") {
  ConfidenceVolume v = make_confidence({1, 1, 3});
  v.data = {0.49999997f, 0.5f, 0.75f};
  const LabelVolume mask = binarize(v, ThresholdPolicy::high());
  CHECK(mask.data == std::vector<std::int32_t>{0, 1, 1});

  const LabelVolume empty = binarize(make_confidence({2, 2, 2}), ThresholdPolicy::low());
  for (std::int32_t x : empty.data) CHECK(x == 0);

  CHECK_THROWS_AS(binarize(v, ThresholdPolicy::custom(0.0)), std::invalid_argument);
  CHECK_THROWS_AS(binarize(v, ThresholdPolicy::custom(1.0)), std::invalid_argument);
}

TEST_CASE("named threshold policies carry the documented taus") {
  CHECK(ThresholdPolicy::high().tau == 0.5);
  CHECK(ThresholdPolicy::low().tau == 0.25);
  CHECK(ThresholdPolicy::low(0.3).tau == 0.3);
  CHECK(ThresholdPolicy::custom(0.77).tau == 0.77);
}

TEST_CASE("lower tau never shrinks the foreground") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ConfidenceVolume conf = random_confidence({8, 8, 8}, 90 + seed);
    const LabelVolume high = binarize(conf, ThresholdPolicy::high());
    const LabelVolume low = binarize(conf, ThresholdPolicy::low());
    for (std::size_t i = 0; i < conf.data.size(); ++i)
      if (high.data[i] != 0) CHECK(low.data[i] != 0);
  }
}

TEST_CASE("build_candidates filters, localizes, and averages confidence") {
  // partition: lungs top 20, bottom 12, hips 6 on a 32-slice CC axis
  const BodyRegionPartition partition{20, 12, 6};
  ConfidenceVolume conf = make_confidence({8, 32, 8});
  // blob A: 10 voxels above the lung top (head/neck), confidence 0.8
  for (int k = 0; k < 5; ++k) {
    conf.at(2, 25, k + 1) = 0.8f;
    conf.at(3, 25, k + 1) = 0.8f;
  }
  // blob B: 2 voxels in the legs
  conf.at(5, 2, 2) = 0.9f;
  conf.at(5, 2, 3) = 0.9f;

  const LabelVolume mask = binarize(conf, ThresholdPolicy::high());
  const ComponentLabeling components = label_components(mask);
  REQUIRE(components.count == 2);

  const auto kept = build_candidates(components, conf, partition, 3);
  REQUIRE(kept.size() == 1);  // 2-voxel blob excluded by min_voxels
  CHECK(kept[0].voxels.size() == 10);
  CHECK(kept[0].region == AnatomicalRegion::head_neck);
  CHECK(kept[0].mean_confidence == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(kept[0].volume_mm3 == doctest::Approx(10.0));  // unit spacing

  const auto all = build_candidates(components, conf, partition, 1);
  CHECK(all.size() == 2);
  CHECK(all[1].region == AnatomicalRegion::legs);
}

TEST_CASE("candidates with min_voxels=1 tile the foreground disjointly") {
  const ConfidenceVolume conf = random_confidence({10, 12, 10}, 5);
  const LabelVolume mask = binarize(conf, ThresholdPolicy::custom(0.7));
  const ComponentLabeling components = label_components(mask);
  const BodyRegionPartition partition{9, 6, 3};
  const auto candidates = build_candidates(components, conf, partition, 1);

  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& c : candidates) {
    for (const auto& [i, j, k] : c.voxels) {
      CHECK(seen.insert(mask.geometry.index(i, j, k)).second);  // disjoint
      ++total;
    }
  }
  std::size_t foreground = 0;
  for (std::int32_t x : mask.data) foreground += x != 0;
  CHECK(total == foreground);  // union covers the mask
}

TEST_CASE("candidate geometry mismatch is rejected") {
  const ConfidenceVolume conf = make_confidence({4, 4, 4});
  LabelVolume mask = binarize(make_confidence({4, 4, 5}), ThresholdPolicy::high());
  const ComponentLabeling components = label_components(mask);
  CHECK_THROWS_AS(build_candidates(components, conf, BodyRegionPartition{3, 2, 1}, 1),
                  std::invalid_argument);
}
