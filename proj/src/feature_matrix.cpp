#include "nfpipe/feature_matrix.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nfpipe {

void FeatureMatrix::add_row(const RowKey& key, const FeatureVector& features) {
  if (columns.empty() && rows.empty()) {
    columns.reserve(features.size());
    for (const auto& [name, _] : features.items()) columns.push_back(name);
  }
  if (features.size() != columns.size())
    throw std::invalid_argument("feature vector size does not match matrix columns");
  std::size_t c = 0;
  for (const auto& [name, value] : features.items()) {
    if (name != columns[c])
      throw std::invalid_argument("feature name mismatch at column " + std::to_string(c) +
                                  ": expected " + columns[c] + ", got " + name);
    ++c;
  }
  rows.push_back(key);
  for (const auto& [_, value] : features.items()) values.push_back(value);
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return c;
  throw std::invalid_argument("unknown feature column: " + name);
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
  FeatureMatrix out;
  out.columns = names;
  out.rows = rows;
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& name : names) idx.push_back(column_index(name));
  out.values.reserve(rows.size() * names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c : idx) out.values.push_back(at(r, c));
  return out;
}

std::filesystem::path FeatureMatrix::sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".rows.json");
  return p;
}

void FeatureMatrix::write_csv(const std::filesystem::path& csv_path) const {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot open for writing: " + csv_path.string());
  for (std::size_t c = 0; c < columns.size(); ++c)
    csv << (c == 0 ? "" : ",") << columns[c];
  csv << "\n";
  char buf[64];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", at(r, c));
      csv << (c == 0 ? "" : ",") << buf;
    }
    csv << "\n";
  }

  nlohmann::json sidecar;
  sidecar["rows"] = nlohmann::json::array();
  for (const auto& key : rows) {
    sidecar["rows"].push_back({{"scan_id", key.scan_id},
                               {"candidate_id", key.candidate_id},
                               {"region", region_name(key.region)},
                               {"label", key.label}});
  }
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw DataError("cannot open for writing: " + sidecar_path(csv_path).string());
  side << sidecar.dump(2) << "\n";
}

FeatureMatrix FeatureMatrix::read_csv(const std::filesystem::path& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw DataError("cannot open file: " + csv_path.string());
  FeatureMatrix out;
  std::string line;
  if (!std::getline(csv, line)) throw DataError("empty feature CSV: " + csv_path.string());
  // strip a potential trailing CR from files written on other platforms
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty() && item.back() == '\r') item.pop_back();
      parts.push_back(item);
    }
    return parts;
  };
  out.columns = split(line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto parts = split(line);
    if (parts.size() != out.columns.size())
      throw DataError("feature CSV row width mismatch in " + csv_path.string());
    for (const auto& p : parts) out.values.push_back(std::stod(p));
  }
  const std::size_t n_rows = out.values.size() / out.columns.size();

  std::ifstream side(sidecar_path(csv_path));
  if (!side) throw DataError("missing feature sidecar: " + sidecar_path(csv_path).string());
  nlohmann::json sidecar = nlohmann::json::parse(side);
  for (const auto& row : sidecar.at("rows")) {
    RowKey key;
    key.scan_id = row.at("scan_id").get<std::string>();
    key.candidate_id = row.at("candidate_id").get<int>();
    key.region = region_from_name(row.at("region").get<std::string>());
    key.label = row.at("label").get<int>();
    out.rows.push_back(std::move(key));
  }
  if (out.rows.size() != n_rows)
    throw DataError("feature sidecar row count does not match CSV: " + csv_path.string());
  return out;
}

FeatureMatrix concat_rows(const std::vector<FeatureMatrix>& parts) {
  FeatureMatrix out;
  for (const auto& part : parts) {
    if (out.columns.empty()) {
      out.columns = part.columns;
    } else if (part.columns != out.columns) {
      throw std::invalid_argument("feature matrices have mismatched columns");
    }
    out.rows.insert(out.rows.end(), part.rows.begin(), part.rows.end());
    out.values.insert(out.values.end(), part.values.begin(), part.values.end());
  }
  return out;
}

}  // namespace nfpipe
