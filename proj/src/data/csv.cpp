// SPDX-License-Identifier: Apache-2.0
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bigat/data.hpp"
#include "bigat/error.hpp"

namespace bigat {
namespace {

// Reads one logical record; quoted fields may span lines. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  ++line;
  return true;
}

bool parses_as_real(const std::string& s) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  std::strtod(begin, &end);
  while (*end == ' ' || *end == '\t') ++end;
  return end != begin && *end == '\0';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + '"';
}

}  // namespace

std::size_t RawTable::label_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == label_column) return i;
  throw MissingColumnError("label column '" + label_column + "' not found");
}

RawTable parse_csv(std::istream& in, const std::string& label_column) {
  RawTable t;
  t.label_column = label_column;
  std::size_t line = 0;
  std::vector<std::string> fields;
  if (!read_record(in, fields, line)) throw DataError("CSV input has no header row");
  // Strip a UTF-8 byte-order mark from the first header cell.
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  for (auto& f : fields) t.columns.push_back(trim(f));
  t.label_index();  // throws MissingColumnError

  while (true) {
    const std::size_t start_line = line + 1;
    if (!read_record(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != t.columns.size()) {
      throw RaggedRowError("line " + std::to_string(start_line) + ": expected " +
                               std::to_string(t.columns.size()) + " fields, got " +
                               std::to_string(fields.size()),
                           start_line);
    }
    for (auto& f : fields) f = trim(f);
    t.rows.push_back(fields);
  }

  t.kinds.assign(t.columns.size(), ColumnKind::kNumeric);
  const std::size_t li = t.label_index();
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c == li) {
      t.kinds[c] = ColumnKind::kCategorical;
      continue;
    }
    for (const auto& row : t.rows) {
      if (!row[c].empty() && !parses_as_real(row[c])) {
        t.kinds[c] = ColumnKind::kCategorical;
        break;
      }
    }
  }
  return t;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read " + path.string());
  return parse_csv(in, label_column);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  auto emit = [&out](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << quote_if_needed(r[i]);
    }
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
}

}  // namespace bigat
