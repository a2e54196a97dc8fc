#include "countcos/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "countcos/errors.hpp"

namespace countcos::csv {

std::optional<std::size_t> Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  return std::nullopt;
}

namespace {

// Reads one record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field near line " + std::to_string(line));
  if (!any) return false;
  fields.push_back(std::move(field));
  ++line;
  return true;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw DataError("not a number in " + what + ": '" + text + "'");
  return v;
}

}  // namespace

Table parse(std::istream& in) {
  Table t;
  std::size_t line = 1;
  std::vector<std::string> fields;
  if (!read_record(in, t.header, line)) throw DataError("CSV input is empty");
  if (!t.header.empty() && t.header[0].starts_with("\xEF\xBB\xBF")) t.header[0].erase(0, 3);
  while (read_record(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != t.header.size()) {
      throw DataError("CSV row " + std::to_string(line - 1) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(fields);
  }
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  return parse(in);
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CountTable join_counts(const Table& table, const std::vector<std::string>& ids, const std::string& count_column,
                       const std::string& variance_column) {
  const auto id_col = table.column("id");
  const auto count_col = table.column(count_column);
  if (!id_col) throw DataError("CSV has no 'id' column");
  if (!count_col) throw DataError("CSV has no '" + count_column + "' column");
  const auto var_col = table.column(variance_column);

  std::unordered_map<std::string, std::size_t> row_of;
  std::vector<std::string> duplicates;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!row_of.emplace(table.rows[r][*id_col], r).second) duplicates.push_back(table.rows[r][*id_col]);
  }
  std::unordered_map<std::string, std::size_t> geometry_ids;
  for (std::size_t i = 0; i < ids.size(); ++i) geometry_ids.emplace(ids[i], i);
  std::vector<std::string> missing, orphans;
  for (const auto& id : ids) {
    if (!row_of.count(id)) missing.push_back(id);
  }
  for (const auto& row : table.rows) {
    if (!geometry_ids.count(row[*id_col])) orphans.push_back(row[*id_col]);
  }
  if (!missing.empty() || !orphans.empty() || !duplicates.empty()) {
    std::ostringstream msg;
    msg << "CSV does not join to the geometry by id";
    auto list = [&msg](const char* what, const std::vector<std::string>& v) {
      if (v.empty()) return;
      msg << "\n  " << what << ":";
      for (const auto& s : v) msg << ' ' << s;
    };
    list("ids without a CSV row", missing);
    list("CSV ids without a geometry", orphans);
    list("duplicate CSV ids", duplicates);
    throw DataError(msg.str());
  }

  CountTable out;
  const auto n = static_cast<Eigen::Index>(ids.size());
  out.counts.resize(n);
  if (var_col) out.variances.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[row_of.at(ids[static_cast<std::size_t>(i)])];
    out.counts(i) = parse_number(row[*count_col], "column '" + count_column + "'");
    if (out.counts(i) < 0.0) throw DataError("negative count for id " + ids[static_cast<std::size_t>(i)]);
    if (var_col) {
      out.variances(i) = parse_number(row[*var_col], "column '" + variance_column + "'");
      if (out.variances(i) < 0.0) throw DataError("negative variance for id " + ids[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

}  // namespace countcos::csv
