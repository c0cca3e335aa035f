#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace dzid {

// Comma-separated numeric output with a header line. Values are written in
// shortest round-trip decimal form.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void write_row(const std::vector<double>& values);
  void write_raw(const std::string& line);
  void close();

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Throws DataError if the column is absent.
  std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Untyped variant for small mixed-content files.
struct CsvText {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvText read_csv_text(const std::string& path);
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace dzid
