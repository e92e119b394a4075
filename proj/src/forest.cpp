#include "nfpipe/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "nfpipe/concurrency.hpp"
#include "nfpipe/rng.hpp"

namespace nfpipe {

namespace {

constexpr int kSchemaVersion = 1;

double gini(std::int64_t c0, std::int64_t c1) {
  const double n = static_cast<double>(c0 + c1);
  if (n == 0.0) return 0.0;
  const double p0 = c0 / n, p1 = c1 / n;
  return 1.0 - (p0 * p0 + p1 * p1);
}

struct TreeBuilder {
  const FeatureMatrix& matrix;
  const std::vector<int>& labels;
  int mtry;
  int max_depth;
  int min_leaf;
  Rng& rng;
  DecisionTree& tree;
  std::vector<std::size_t> feature_pool;
  std::vector<std::pair<double, int>> scratch;  // (value, label)

  int build(std::vector<std::size_t>& rows, int depth) {
    std::int64_t c0 = 0, c1 = 0;
    for (std::size_t r : rows) (labels[r] == 1 ? c1 : c0)++;

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[node_index].count0 = c0;
    tree.nodes[node_index].count1 = c1;

    const bool pure = c0 == 0 || c1 == 0;
    const bool too_small = rows.size() < static_cast<std::size_t>(2 * min_leaf);
    const bool at_depth = max_depth > 0 && depth >= max_depth;
    if (pure || too_small || at_depth) return node_index;

    // Sample mtry distinct features, then evaluate in canonical order so the
    // first best-scoring (feature, threshold) wins deterministically.
    const std::size_t p = matrix.n_cols();
    feature_pool.resize(p);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    const int m = std::min<std::size_t>(mtry, p);
    for (int i = 0; i < m; ++i) {
      const std::size_t j = i + rng.uniform_int(p - i);
      std::swap(feature_pool[i], feature_pool[j]);
    }
    std::sort(feature_pool.begin(), feature_pool.begin() + m);

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    const double n = static_cast<double>(rows.size());

    for (int fi = 0; fi < m; ++fi) {
      const std::size_t f = feature_pool[fi];
      scratch.clear();
      for (std::size_t r : rows) scratch.emplace_back(matrix.at(r, f), labels[r]);
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      std::int64_t l0 = 0, l1 = 0;
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        (scratch[i].second == 1 ? l1 : l0)++;
        if (scratch[i].first == scratch[i + 1].first) continue;
        const auto n_left = static_cast<std::int64_t>(i + 1);
        const auto n_right = static_cast<std::int64_t>(scratch.size()) - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double impurity =
            (n_left * gini(l0, l1) + n_right * gini(c0 - l0, c1 - l1)) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          double thr = scratch[i].first + (scratch[i + 1].first - scratch[i].first) / 2.0;
          // keep the threshold strictly below the next value so x <= thr
          // reproduces the sweep partition even when the midpoint rounds up
          if (thr >= scratch[i + 1].first) thr = scratch[i].first;
          best_threshold = thr;
        }
      }
    }

    if (best_feature < 0) return node_index;  // no valid split among sampled features

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      if (matrix.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[node_index].feature = best_feature;
    tree.nodes[node_index].threshold = best_threshold;
    const int left = build(left_rows, depth + 1);
    tree.nodes[node_index].left = left;
    const int right = build(right_rows, depth + 1);
    tree.nodes[node_index].right = right;
    return node_index;
  }
};

double tree_leaf_fraction(const DecisionTree& tree, const double* values) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const TreeNode& t = tree.nodes[node];
    node = values[t.feature] <= t.threshold ? t.left : t.right;
  }
  const TreeNode& leaf = tree.nodes[node];
  return static_cast<double>(leaf.count1) /
         static_cast<double>(leaf.count0 + leaf.count1);
}

nlohmann::json model_to_json(const RandomForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count0, n.count1});
    trees.push_back(std::move(nodes));
  }
  nlohmann::json j{
      {"feature_names", model.feature_names},
      {"params",
       {{"n_trees", model.params.n_trees},
        {"max_depth", model.params.max_depth},
        {"min_samples_leaf", model.params.min_samples_leaf},
        {"mtry", model.params.mtry},
        {"bootstrap", model.params.bootstrap},
        {"seed", model.params.seed}}},
      {"meta",
       {{"n_samples", model.meta.n_samples},
        {"n_positive", model.meta.n_positive},
        {"oob_accuracy", model.meta.oob_accuracy}}},
      {"trees", std::move(trees)},
  };
  if (model.region) j["region"] = region_name(*model.region);
  return j;
}

RandomForestModel model_from_json(const nlohmann::json& j) {
  RandomForestModel model;
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const auto& p = j.at("params");
  model.params.n_trees = p.at("n_trees").get<int>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  model.params.mtry = p.at("mtry").get<int>();
  model.params.bootstrap = p.at("bootstrap").get<bool>();
  model.params.seed = p.at("seed").get<std::uint64_t>();
  const auto& meta = j.at("meta");
  model.meta.n_samples = meta.at("n_samples").get<std::int64_t>();
  model.meta.n_positive = meta.at("n_positive").get<std::int64_t>();
  model.meta.oob_accuracy = meta.at("oob_accuracy").get<double>();
  if (j.contains("region")) model.region = region_from_name(j.at("region").get<std::string>());
  for (const auto& tj : j.at("trees")) {
    DecisionTree tree;
    for (const auto& nj : tj) {
      if (!nj.is_array() || nj.size() != 6) throw DataError("malformed tree node");
      TreeNode n;
      n.feature = nj[0].get<int>();
      n.threshold = nj[1].get<double>();
      n.left = nj[2].get<int>();
      n.right = nj[3].get<int>();
      n.count0 = nj[4].get<std::int64_t>();
      n.count1 = nj[5].get<std::int64_t>();
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw DataError("malformed tree (no nodes)");
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace

RandomForestModel train_forest(const FeatureMatrix& matrix, const ForestParams& params) {
  const std::size_t n = matrix.n_rows();
  const std::size_t p = matrix.n_cols();
  if (n < 2) throw std::invalid_argument("training requires at least two rows");
  if (p < 1) throw std::invalid_argument("training requires at least one feature");
  if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (params.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");

  for (double v : matrix.values)
    if (!std::isfinite(v)) throw std::invalid_argument("training features must be finite");

  std::vector<int> labels(n);
  std::int64_t n_positive = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const int label = matrix.rows[r].label;
    if (label != 0 && label != 1)
      throw std::invalid_argument("training rows must carry binary labels (0/1)");
    labels[r] = label;
    n_positive += label;
  }
  if (n_positive == 0 || n_positive == static_cast<std::int64_t>(n))
    throw std::invalid_argument("training data contains a single class");

  int mtry = params.mtry;
  if (mtry <= 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::min<int>(mtry, static_cast<int>(p));

  RandomForestModel model;
  model.feature_names = matrix.columns;
  model.params = params;
  model.meta.n_samples = static_cast<std::int64_t>(n);
  model.meta.n_positive = n_positive;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  // Trees are independent (per-tree RNG streams, index-addressed slots), so
  // training parallelizes without affecting results.
  parallel_for(static_cast<std::size_t>(params.n_trees), [&](std::size_t t) {
    Rng rng(Rng::derive(params.seed, "tree", t));
    std::vector<std::size_t> rows;
    rows.reserve(n);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(rng.uniform_int(n));
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder{matrix, labels, mtry,
                        params.max_depth, params.min_samples_leaf,
                        rng, model.trees[t],
                        {}, {}};
    builder.build(rows, 0);
  });

  if (params.bootstrap) {
    // Out-of-bag pass: replay each tree's bootstrap draws (the first RNG uses
    // during training) to recover its bag.
    std::vector<double> oob_sum(n, 0.0);
    std::vector<int> oob_votes(n, 0);
    std::vector<char> in_bag(n);
    std::vector<double> row_values(p);
    for (std::size_t t = 0; t < static_cast<std::size_t>(params.n_trees); ++t) {
      Rng rng(Rng::derive(params.seed, "tree", t));
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (std::size_t i = 0; i < n; ++i) in_bag[rng.uniform_int(n)] = 1;
      for (std::size_t r = 0; r < n; ++r) {
        if (in_bag[r]) continue;
        for (std::size_t c = 0; c < p; ++c) row_values[c] = matrix.at(r, c);
        oob_sum[r] += tree_leaf_fraction(model.trees[t], row_values.data());
        oob_votes[r] += 1;
      }
    }
    std::int64_t correct = 0, scored = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (oob_votes[r] == 0) continue;
      ++scored;
      const int predicted = oob_sum[r] / oob_votes[r] >= 0.5 ? 1 : 0;
      if (predicted == labels[r]) ++correct;
    }
    model.meta.oob_accuracy =
        scored > 0 ? static_cast<double>(correct) / static_cast<double>(scored) : -1.0;
  }
  return model;
}

double predict_proba_values(const RandomForestModel& model, const double* values) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree_leaf_fraction(tree, values);
  return sum / static_cast<double>(model.trees.size());
}

double predict_proba(const RandomForestModel& model, const FeatureVector& features) {
  if (features.size() > model.feature_names.size())
    throw std::invalid_argument("extra feature names in input");
  std::vector<double> values(model.feature_names.size());
  for (std::size_t c = 0; c < model.feature_names.size(); ++c) {
    const auto v = features.find(model.feature_names[c]);
    if (!v) throw std::invalid_argument("missing feature: " + model.feature_names[c]);
    values[c] = *v;
  }
  return predict_proba_values(model, values.data());
}

FeatureVector importances(const RandomForestModel& model) {
  const std::size_t p = model.feature_names.size();
  std::vector<double> total(p, 0.0);
  std::vector<double> per_tree(p);
  for (const auto& tree : model.trees) {
    std::fill(per_tree.begin(), per_tree.end(), 0.0);
    const double n_root =
        static_cast<double>(tree.nodes[0].count0 + tree.nodes[0].count1);
    for (const auto& node : tree.nodes) {
      if (node.feature < 0) continue;
      const TreeNode& l = tree.nodes[node.left];
      const TreeNode& r = tree.nodes[node.right];
      const double n_node = static_cast<double>(node.count0 + node.count1);
      const double n_l = static_cast<double>(l.count0 + l.count1);
      const double n_r = static_cast<double>(r.count0 + r.count1);
      const double decrease = gini(node.count0, node.count1) -
                              (n_l / n_node) * gini(l.count0, l.count1) -
                              (n_r / n_node) * gini(r.count0, r.count1);
      per_tree[static_cast<std::size_t>(node.feature)] += (n_node / n_root) * decrease;
    }
    double sum = 0.0;
    for (double v : per_tree) sum += v;
    if (sum > 0.0)
      for (std::size_t c = 0; c < p; ++c) total[c] += per_tree[c] / sum;
  }
  double sum = 0.0;
  for (double v : total) sum += v;
  FeatureVector fv;
  for (std::size_t c = 0; c < p; ++c)
    fv.push(model.feature_names[c], sum > 0.0 ? total[c] / sum : 0.0);
  return fv;
}

void save_model(const RegionClassifierBundle& bundle, const std::filesystem::path& path) {
  if (bundle.models.empty())
    throw std::invalid_argument("bundle must contain at least one region model");
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["fallback"] = bundle.fallback == FallbackPolicy::keep ? "keep" : "drop";
  j["models"] = nlohmann::json::array();
  for (const auto& [region, model] : bundle.models) {
    nlohmann::json mj = model_to_json(model);
    mj["region"] = region_name(region);
    j["models"].push_back(std::move(mj));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

RegionClassifierBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed model bundle: " + path.string());
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion)
    throw DataError("unsupported model bundle schema version");
  RegionClassifierBundle bundle;
  const std::string fallback = j.value("fallback", "keep");
  bundle.fallback = fallback == "drop" ? FallbackPolicy::drop : FallbackPolicy::keep;
  try {
    for (const auto& mj : j.at("models")) {
      RandomForestModel model = model_from_json(mj);
      if (!model.region) throw DataError("model bundle entry lacks a region");
      bundle.models[*model.region] = std::move(model);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model bundle: ") + e.what());
  }
  if (bundle.models.empty()) throw DataError("model bundle contains no region models");
  return bundle;
}

ClassificationResult classify_candidates(const std::vector<TumorCandidate>& candidates,
                                         const FeatureMatrix& matrix,
                                         const RegionClassifierBundle& bundle,
                                         double decision_threshold,
                                         const VolumeGeometry& geometry) {
  ClassificationResult result;
  result.final_mask = make_binary_volume(geometry, "tumor");

  // Column mapping per region model, resolved once.
  std::map<AnatomicalRegion, std::vector<std::size_t>> column_maps;
  for (const auto& [region, model] : bundle.models) {
    std::vector<std::size_t> map;
    map.reserve(model.feature_names.size());
    for (const auto& name : model.feature_names) map.push_back(matrix.column_index(name));
    column_maps[region] = std::move(map);
  }

  std::vector<double> values;
  for (const auto& candidate : candidates) {
    std::size_t row = matrix.n_rows();
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
      if (matrix.rows[r].candidate_id == candidate.id) {
        row = r;
        break;
      }
    }
    if (row == matrix.n_rows())
      throw std::runtime_error("candidate without feature row: id " +
                               std::to_string(candidate.id));

    bool keep;
    const auto model_it = bundle.models.find(candidate.region);
    if (model_it == bundle.models.end()) {
      keep = bundle.fallback == FallbackPolicy::keep;
    } else {
      const auto& map = column_maps[candidate.region];
      values.resize(map.size());
      for (std::size_t c = 0; c < map.size(); ++c) values[c] = matrix.at(row, map[c]);
      const double proba = predict_proba_values(model_it->second, values.data());
      result.probabilities[candidate.id] = proba;
      keep = proba >= decision_threshold;
    }
    if (keep) {
      result.kept_ids.push_back(candidate.id);
      for (const auto& [i, j, k] : candidate.voxels)
        result.final_mask.at(i, j, k) = 1;
    }
  }
  return result;
}

}  // namespace nfpipe
