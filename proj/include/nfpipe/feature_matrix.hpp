#pragma once

#include <filesystem>

#include "nfpipe/anatomy.hpp"
#include "nfpipe/radiomics.hpp"

namespace nfpipe {

/// Identity of one feature row. `label` is the training label (0/1) when
/// known, -1 otherwise.
struct RowKey {
  std::string scan_id;
  int candidate_id = 0;
  AnatomicalRegion region = AnatomicalRegion::abdomen;
  int label = -1;
};

/// Rectangular candidates-by-features matrix. Column order is canonical
/// (catalog order for extracted features); values are dense, no missing
/// entries.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<RowKey> rows;
  std::vector<double> values;  // rows.size() x columns.size(), row-major

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return columns.size(); }

  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }

  /// Appends a row; the vector's names must match `columns` exactly in order
  /// (columns are adopted from the first row).
  void add_row(const RowKey& key, const FeatureVector& features);

  /// Column index by name; throws std::invalid_argument when absent.
  std::size_t column_index(const std::string& name) const;

  FeatureMatrix select_columns(const std::vector<std::string>& names) const;

  /// CSV with a feature-name header row; row keys and labels live in a
  /// sidecar JSON next to the CSV (extension replaced by .rows.json).
  void write_csv(const std::filesystem::path& csv_path) const;
  static FeatureMatrix read_csv(const std::filesystem::path& csv_path);

  static std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
};

/// Row-wise concatenation; all parts must share identical columns.
FeatureMatrix concat_rows(const std::vector<FeatureMatrix>& parts);

}  // namespace nfpipe
