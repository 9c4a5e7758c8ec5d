#include "trafficgp/csv.hpp"

#include <cerrno>
#include <cstdlib>

#include "trafficgp/common.hpp"

namespace trafficgp {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

namespace {

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

}  // namespace

CsvReader::CsvReader(const std::string& path, const std::vector<std::string>& expected)
    : path_(path), in_(path) {
  if (!in_) throw DataError("cannot open CSV file: " + path);
  std::string header;
  if (!std::getline(in_, header)) throw DataError("empty CSV file: " + path);
  ++line_;
  header = strip_cr(header);
  const auto cols = split_csv_line(header);
  if (cols != expected) {
    throw DataError("unexpected header in " + path + ": got '" + header + "', expected '" +
                    join(expected) + "'");
  }
  n_cols_ = expected.size();
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    line = strip_cr(line);
    if (line.empty()) continue;
    fields = split_csv_line(line);
    if (fields.size() != n_cols_) {
      throw DataError(path_ + ":" + std::to_string(line_) + ": expected " +
                      std::to_string(n_cols_) + " fields, got " + std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path) {
  if (!out_) throw DataError("cannot open file for writing: " + path);
  out_ << join(header) << '\n';
  n_cols_ = header.size();
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != n_cols_) {
    throw ValidationError("CSV row width mismatch writing " + path_);
  }
  out_ << join(fields) << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw DataError("failed writing " + path_);
}

double parse_double_field(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError("cannot parse " + what + " from '" + s + "'");
  }
  return v;
}

long parse_long_field(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError("cannot parse " + what + " from '" + s + "'");
  }
  return v;
}

bool parse_bool_field(const std::string& s, const std::string& what) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw DataError("cannot parse " + what + " from '" + s + "' (expected 0 or 1)");
}

}  // namespace trafficgp
