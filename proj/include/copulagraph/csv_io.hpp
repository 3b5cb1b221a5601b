#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "copulagraph/copula.hpp"

namespace copulagraph {

/// One schema line: `name,kind[,level1|level2|...]`. Levels are required for
/// ordinal and binary columns and optional for counts.
struct ColumnSchema {
  std::string name;
  VariableKind kind = VariableKind::kContinuous;
  std::vector<std::string> levels;
};

using Schema = std::vector<ColumnSchema>;

/// Thrown for malformed input files; the message names file, row and column.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Schema parse_schema(std::istream& is, const std::string& source = "schema");
Schema read_schema(const std::filesystem::path& path);
void write_schema(std::ostream& os, const Schema& schema);

/// Header row plus one row per observation; `NA` or empty cells are missing.
/// Discrete cells with listed levels become 0-based level indices.
MixedDataset parse_data_csv(std::istream& is, const Schema& schema, const std::string& source = "data");
MixedDataset ingest_csv(const std::filesystem::path& data_path, const std::filesystem::path& schema_path);

/// Inverse of parse_data_csv for the same schema. Continuous cells use 17
/// significant digits so the round trip is exact.
void write_data_csv(std::ostream& os, const MixedDataset& data, const Schema& schema);

/// Schema describing a dataset with integer-coded discrete columns; ordinal and
/// binary levels are the observed codes.
Schema schema_for(const MixedDataset& data);

/// Splits one CSV line; surrounding whitespace and double quotes are removed.
std::vector<std::string> split_csv_line(const std::string& line);

/// Six significant digits, the numeric format of every result file.
std::string fmt6(double v);

/// p x p matrix with an optional header of names.
void write_matrix_csv(std::ostream& os, const Matrix& m, const std::vector<std::string>& header = {});
/// Reads a numeric matrix, skipping a first row that does not parse as numbers.
Matrix read_matrix_csv(std::istream& is);

}  // namespace copulagraph
