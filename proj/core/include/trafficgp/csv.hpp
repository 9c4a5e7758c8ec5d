#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace trafficgp {

// Minimal CSV support for the flat, unquoted files this project exchanges.

std::vector<std::string> split_csv_line(const std::string& line);

class CsvReader {
 public:
  // Opens `path`, reads the header line, and validates it against `expected`
  // (exact names, exact order). Throws DataError on mismatch or I/O failure.
  CsvReader(const std::string& path, const std::vector<std::string>& expected);

  // Next record, or false at EOF. Blank lines are skipped. Throws DataError
  // when a row's field count differs from the header's.
  bool next(std::vector<std::string>& fields);

  const std::string& path() const { return path_; }
  std::size_t line_number() const { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t n_cols_ = 0;
  std::size_t line_ = 0;
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t n_cols_ = 0;
};

double parse_double_field(const std::string& s, const std::string& what);
long parse_long_field(const std::string& s, const std::string& what);
bool parse_bool_field(const std::string& s, const std::string& what);

}  // namespace trafficgp
