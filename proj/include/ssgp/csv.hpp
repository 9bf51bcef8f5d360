#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ssgp {

/// A parsed CSV: one header row, numeric cells.  Missing entries (empty,
/// "?", "NA", "NaN") parse to nullopt; anything else non-numeric throws
/// DataError.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  int find_column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

/// Full round-trip precision (17 significant digits) for golden-file
/// stability.
std::string format_double(double v);

}  // namespace ssgp
