#include "nfpipe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "nfpipe/rng.hpp"

namespace nfpipe {

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman inputs must have equal length");
  return pearson_coefficient(average_ranks(x), average_ranks(y));
}

PruneResult prune_features(const FeatureMatrix& matrix, double variance_eps, double rho_max) {
  if (matrix.n_rows() < 2)
    throw std::invalid_argument("feature pruning requires at least two rows");

  const std::size_t p = matrix.n_cols();
  const auto n = static_cast<double>(matrix.n_rows());
  PruneResult result;
  result.report.seed = 0;

  std::vector<bool> alive(p, true);
  std::vector<std::vector<double>> column(p);
  for (std::size_t c = 0; c < p; ++c) {
    column[c].resize(matrix.n_rows());
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) column[c][r] = matrix.at(r, c);
  }

  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (double v : column[c]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : column[c]) var += (v - mean) * (v - mean);
    var /= n;
    if (var < variance_eps) {
      alive[c] = false;
      result.report.dropped_near_zero_variance.push_back(matrix.columns[c]);
    }
  }

  std::vector<std::vector<double>> ranks(p);
  for (std::size_t c = 0; c < p; ++c)
    if (alive[c]) ranks[c] = average_ranks(column[c]);

  for (std::size_t i = 0; i < p; ++i) {
    if (!alive[i]) continue;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (!alive[j]) continue;
      const double rho = pearson_coefficient(ranks[i], ranks[j]);
      if (std::fabs(rho) >= rho_max) {
        alive[j] = false;
        result.report.dropped_correlated.push_back({matrix.columns[i], matrix.columns[j], rho});
      }
    }
  }

  std::vector<std::string> kept;
  for (std::size_t c = 0; c < p; ++c)
    if (alive[c]) kept.push_back(matrix.columns[c]);
  if (kept.empty()) throw std::runtime_error("no features survive pruning");
  result.matrix = matrix.select_columns(kept);
  return result;
}

FeatureSelectionReport rfe_select(const FeatureMatrix& matrix, int k,
                                  const ForestParams& forest_params, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("rfe k must be >= 1");
  if (matrix.n_cols() < static_cast<std::size_t>(k))
    throw std::invalid_argument("rfe requires at least k feature columns");

  FeatureSelectionReport report;
  report.seed = seed;

  std::vector<std::string> cols = matrix.columns;
  std::vector<double> final_importance;
  bool trained = false;

  std::uint64_t iteration = 0;
  while (cols.size() > static_cast<std::size_t>(k)) {
    FeatureMatrix sub = matrix.select_columns(cols);
    ForestParams params = forest_params;
    params.seed = Rng::derive(seed, "rfe-iteration", iteration);
    const RandomForestModel model = train_forest(sub, params);
    const FeatureVector imp = importances(model);

    std::vector<double> scores(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) scores[c] = imp.items()[c].second;

    // Rank ascending by importance; ties drop the later column first.
    std::vector<std::size_t> order(cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] < scores[b];
      return a > b;
    });

    std::size_t drop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(0.10 * static_cast<double>(cols.size()))));
    drop = std::min(drop, cols.size() - static_cast<std::size_t>(k));

    std::vector<bool> dropped(cols.size(), false);
    for (std::size_t d = 0; d < drop; ++d) dropped[order[d]] = true;

    std::vector<std::string> next;
    std::vector<double> next_importance;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (dropped[c]) continue;
      next.push_back(cols[c]);
      next_importance.push_back(scores[c]);
    }
    cols = std::move(next);
    final_importance = std::move(next_importance);
    trained = true;
    ++iteration;
  }

  if (trained) {
    // Order survivors by the final round's importances, descending.
    std::vector<std::size_t> order(cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&final_importance](std::size_t a, std::size_t b) {
      if (final_importance[a] != final_importance[b])
        return final_importance[a] > final_importance[b];
      return a < b;
    });
    for (std::size_t i : order) report.selected_top_k.push_back(cols[i]);
  } else {
    report.selected_top_k = cols;  // already exactly k: canonical order
  }
  return report;
}

void FeatureSelectionReport::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["dropped_near_zero_variance"] = dropped_near_zero_variance;
  j["dropped_correlated"] = nlohmann::json::array();
  for (const auto& d : dropped_correlated)
    j["dropped_correlated"].push_back({{"kept", d.kept}, {"dropped", d.dropped}, {"rho", d.rho}});
  j["selected_top_k"] = selected_top_k;
  j["seed"] = seed;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

FeatureSelectionReport FeatureSelectionReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  FeatureSelectionReport report;
  report.dropped_near_zero_variance =
      j.at("dropped_near_zero_variance").get<std::vector<std::string>>();
  for (const auto& d : j.at("dropped_correlated"))
    report.dropped_correlated.push_back({d.at("kept").get<std::string>(),
                                         d.at("dropped").get<std::string>(),
                                         d.at("rho").get<double>()});
  report.selected_top_k = j.at("selected_top_k").get<std::vector<std::string>>();
  report.seed = j.at("seed").get<std::uint64_t>();
  return report;
}

}  // namespace nfpipe
