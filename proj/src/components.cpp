#include "nfpipe/components.hpp"

#include <numeric>
#include <vector>

namespace nfpipe {

namespace {

class UnionFind {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void merge(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a; else parent_[a] = b;
  }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

ComponentLabeling label_components(const LabelVolume& binary) {
  const auto& g = binary.geometry;
  const int n0 = g.dims[0], n1 = g.dims[1], n2 = g.dims[2];

  // Scan-order-preceding half of the 26-neighborhood.
  std::array<std::array<int, 3>, 13> offsets{};
  {
    int c = 0;
    for (int d0 = -1; d0 <= 1; ++d0)
      for (int d1 = -1; d1 <= 1; ++d1)
        for (int d2 = -1; d2 <= 1; ++d2) {
          if (d0 < 0 || (d0 == 0 && (d1 < 0 || (d1 == 0 && d2 < 0))))
            offsets[c++] = {d0, d1, d2};
        }
  }

  std::vector<std::int32_t> provisional(g.voxel_count(), -1);
  UnionFind uf;

  std::size_t idx = 0;
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      for (int k = 0; k < n2; ++k, ++idx) {
        if (binary.data[idx] == 0) continue;
        std::int32_t label = -1;
        for (const auto& [d0, d1, d2] : offsets) {
          const int pi = i + d0, pj = j + d1, pk = k + d2;
          if (pi < 0 || pj < 0 || pk < 0 || pj >= n1 || pk >= n2) continue;
          const std::int32_t other = provisional[g.index(pi, pj, pk)];
          if (other < 0) continue;
          if (label < 0) {
            label = other;
          } else {
            uf.merge(label, other);
          }
        }
        if (label < 0) label = uf.make();
        provisional[idx] = label;
      }
    }
  }

  ComponentLabeling result;
  result.labels.geometry = g;
  result.labels.data.assign(g.voxel_count(), 0);
  result.labels.label_dictionary[0] = "background";

  // Final ids follow the first occurrence of each root in scan order.
  std::vector<std::int32_t> final_id;
  for (std::size_t v = 0; v < provisional.size(); ++v) {
    if (provisional[v] < 0) continue;
    const std::int32_t root = uf.find(provisional[v]);
    if (static_cast<std::size_t>(root) >= final_id.size()) final_id.resize(root + 1, 0);
    if (final_id[root] == 0) {
      final_id[root] = ++result.count;
      result.labels.label_dictionary[result.count] =
          "component_" + std::to_string(result.count);
    }
    result.labels.data[v] = final_id[root];
  }
  return result;
}

}  // namespace nfpipe
