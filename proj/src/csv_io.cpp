#include "copulagraph/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace copulagraph {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string level_code_text(double v) {
  return std::to_string(static_cast<long long>(std::llround(v)));
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string fmt6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Schema parse_schema(std::istream& is, const std::string& source) {
  Schema schema;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto parts = split_csv_line(t);
    const std::string where = source + ":" + std::to_string(lineno);
    if (parts.size() < 2 || parts.size() > 3)
      throw InputError(where + ": expected name,kind[,levels]");
    ColumnSchema col;
    col.name = parts[0];
    if (col.name.empty()) throw InputError(where + ": empty column name");
    if (!seen.insert(col.name).second) throw InputError(where + ": duplicate column '" + col.name + "'");
    try {
      col.kind = parse_variable_kind(parts[1]);
    } catch (const std::invalid_argument& e) {
      throw InputError(where + ": " + e.what());
    }
    if (parts.size() == 3 && !parts[2].empty()) {
      std::stringstream ss(parts[2]);
      std::string lv;
      std::set<std::string> uniq;
      while (std::getline(ss, lv, '|')) {
        lv = trim(lv);
        if (lv.empty() || !uniq.insert(lv).second)
          throw InputError(where + ": empty or repeated level in '" + parts[2] + "'");
        col.levels.push_back(lv);
      }
    }
    if (col.kind == VariableKind::kContinuous && !col.levels.empty())
      throw InputError(where + ": continuous column '" + col.name + "' cannot list levels");
    if ((col.kind == VariableKind::kOrdinal || col.kind == VariableKind::kBinary) && col.levels.empty())
      throw InputError(where + ": " + std::string(to_string(col.kind)) + " column '" + col.name +
                       "' needs its levels");
    if (col.kind == VariableKind::kBinary && col.levels.size() != 2)
      throw InputError(where + ": binary column '" + col.name + "' needs exactly 2 levels");
    schema.push_back(std::move(col));
  }
  if (schema.size() < 2) throw InputError(source + ": schema needs at least 2 columns");
  return schema;
}

Schema read_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open schema file " + path.string());
  return parse_schema(in, path.string());
}

void write_schema(std::ostream& os, const Schema& schema) {
  for (const auto& c : schema) {
    os << c.name << ',' << to_string(c.kind);
    if (!c.levels.empty()) {
      os << ',';
      for (std::size_t k = 0; k < c.levels.size(); ++k) os << (k ? "|" : "") << c.levels[k];
    }
    os << '\n';
  }
}

MixedDataset parse_data_csv(std::istream& is, const Schema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw InputError(source + ": empty file");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> schema_index;
  for (std::size_t c = 0; c < schema.size(); ++c) schema_index[schema[c].name] = c;

  // header position -> schema column
  std::vector<std::size_t> target(header.size());
  std::vector<bool> present(schema.size(), false);
  for (std::size_t h = 0; h < header.size(); ++h) {
    const auto it = schema_index.find(header[h]);
    if (it == schema_index.end()) throw InputError(source + ": unknown column '" + header[h] + "'");
    if (present[it->second]) throw InputError(source + ": column '" + header[h] + "' appears twice");
    present[it->second] = true;
    target[h] = it->second;
  }
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (!present[c]) throw InputError(source + ": schema column '" + schema[c].name + "' missing from header");

  std::vector<std::map<std::string, double>> level_index(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c)
    for (std::size_t k = 0; k < schema[c].levels.size(); ++k)
      level_index[c][schema[c].levels[k]] = static_cast<double>(k);

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> miss;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError(source + ": row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    std::vector<double> vals(schema.size(), 0.0);
    std::vector<bool> m(schema.size(), false);
    for (std::size_t h = 0; h < cells.size(); ++h) {
      const std::size_t c = target[h];
      const std::string& cell = cells[h];
      if (cell.empty() || cell == "NA") {
        m[c] = true;
        continue;
      }
      const std::string where = source + ": row " + std::to_string(lineno) + ", column '" + schema[c].name + "'";
      if (!schema[c].levels.empty()) {
        const auto it = level_index[c].find(cell);
        if (it == level_index[c].end()) throw InputError(where + ": level '" + cell + "' is not in the schema");
        vals[c] = it->second;
        continue;
      }
      const auto v = to_number(cell);
      if (!v) throw InputError(where + ": cannot parse '" + cell + "'");
      if (schema[c].kind == VariableKind::kCount && (*v < 0.0 || *v != std::round(*v)))
        throw InputError(where + ": count '" + cell + "' is not a nonnegative integer");
      vals[c] = *v;
    }
    rows.push_back(std::move(vals));
    miss.push_back(std::move(m));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(schema.size());
  Matrix values(n, p);
  MissingMask mask(n, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < p; ++c) {
      values(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      mask(r, c) = miss[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  for (Eigen::Index c = 0; c < p; ++c)
    if (n > 0 && mask.col(c).all())
      throw InputError(source + ": column '" + schema[static_cast<std::size_t>(c)].name + "' is entirely missing");
  std::vector<VariableKind> kinds;
  for (const auto& s : schema) kinds.push_back(s.kind);
  MixedDataset ds(std::move(values), std::move(kinds), std::move(mask));
  for (const auto& s : schema) ds.names.push_back(s.name);
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(source + ": " + e.what());
  }
  return ds;
}

MixedDataset ingest_csv(const std::filesystem::path& data_path, const std::filesystem::path& schema_path) {
  const Schema schema = read_schema(schema_path);
  std::ifstream in(data_path);
  if (!in) throw InputError("cannot open data file " + data_path.string());
  return parse_data_csv(in, schema, data_path.string());
}

void write_data_csv(std::ostream& os, const MixedDataset& data, const Schema& schema) {
  if (schema.size() != data.p()) throw std::invalid_argument("write_data_csv: schema and data differ in width");
  for (std::size_t c = 0; c < schema.size(); ++c) os << (c ? "," : "") << schema[c].name;
  os << '\n';
  for (std::size_t r = 0; r < data.n(); ++r) {
    for (std::size_t c = 0; c < data.p(); ++c) {
      if (c) os << ',';
      if (data.is_missing(r, c)) {
        os << "NA";
        continue;
      }
      const double v = data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (!schema[c].levels.empty()) {
        const auto k = static_cast<long long>(std::llround(v));
        if (k < 0 || static_cast<std::size_t>(k) >= schema[c].levels.size())
          throw std::invalid_argument("write_data_csv: level index out of range in column " + schema[c].name);
        os << schema[c].levels[static_cast<std::size_t>(k)];
      } else if (is_discrete(schema[c].kind)) {
        os << level_code_text(v);
      } else {
        os << fmt17(v);
      }
    }
    os << '\n';
  }
}

Schema schema_for(const MixedDataset& data) {
  Schema schema;
  for (std::size_t c = 0; c < data.p(); ++c) {
    ColumnSchema col{data.column_name(c), data.kinds[c], {}};
    if (col.kind == VariableKind::kOrdinal || col.kind == VariableKind::kBinary) {
      // Levels 0..max code so that level index and code coincide.
      long long top = col.kind == VariableKind::kBinary ? 1 : 0;
      for (std::size_t r = 0; r < data.n(); ++r) {
        if (data.is_missing(r, c)) continue;
        const long long v = std::llround(data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        if (v < 0 || (col.kind == VariableKind::kBinary && v > 1))
          throw std::invalid_argument("schema_for: column " + col.name + " has a code outside the level range");
        top = std::max(top, v);
      }
      for (long long v = 0; v <= top; ++v) col.levels.push_back(std::to_string(v));
    }
    schema.push_back(std::move(col));
  }
  return schema;
}

void write_matrix_csv(std::ostream& os, const Matrix& m, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmt6(m(r, c));
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> vals;
    bool numeric = true;
    for (const auto& c : cells) {
      const auto v = to_number(c);
      if (!v) {
        numeric = false;
        break;
      }
      vals.push_back(*v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError("matrix csv: non-numeric row '" + line + "'");
    }
    first = false;
    if (!rows.empty() && vals.size() != rows.front().size()) throw InputError("matrix csv: ragged rows");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

}  // namespace copulagraph
