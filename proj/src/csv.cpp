#include "dzid/csv.hpp"

#include <charconv>
#include <sstream>

#include "dzid/common.hpp"

namespace dzid {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw DataError("cannot open for writing: " + path);
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ',';
    line += header[i];
  }
  out_ << line << '\n';
}

void CsvWriter::write_row(const std::vector<double>& values) {
  if (values.size() != columns_) {
    throw InvalidInput(path_ + ": row has " + std::to_string(values.size()) + " values, expected " +
                       std::to_string(columns_));
  }
  std::string line;
  line.reserve(values.size() * 20);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_double(values[i]);
  }
  out_ << line << '\n';
}

void CsvWriter::write_raw(const std::string& line) { out_ << line << '\n'; }

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw DataError("write failed: " + path_);
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("missing CSV column '" + name + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

CsvText read_csv_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvText t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  t.header = split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = p;
      while (comma < end && *comma != ',') ++comma;
      const char* field_end = comma;
      if (field_end > p && field_end[-1] == '\r') --field_end;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, field_end, v);
      if (ec != std::errc{} || ptr != field_end) {
        throw DataError(path + ":" + std::to_string(lineno) + ": bad number '" +
                        std::string(p, field_end) + "'");
      }
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != t.header.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace dzid
