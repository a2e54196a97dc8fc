#pragma once

/// @file csv.hpp
/// @brief Minimal RFC 4180 CSV reading and the counts/variances table.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace countcos::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or nullopt.
  [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const;
};

/// Throws DataError on ragged rows or unterminated quotes.
[[nodiscard]] Table parse(std::istream& in);
[[nodiscard]] Table read(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or newline.
[[nodiscard]] std::string escape(const std::string& field);

/// Counts (and optional variances) joined to support ids by the "id" column.
struct CountTable {
  Eigen::VectorXd counts;
  Eigen::VectorXd variances;  ///< empty when the column is absent
};

/// Reorders `table` to `ids`. Throws DataError listing every id missing
/// from the table and every table id absent from the geometry.
[[nodiscard]] CountTable join_counts(const Table& table, const std::vector<std::string>& ids,
                                     const std::string& count_column = "count",
                                     const std::string& variance_column = "variance");

}  // namespace countcos::csv
