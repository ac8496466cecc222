#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace weaksde {

/// Shortest decimal that parses back to the same double ('.' separator, locale independent).
std::string format_double(double x);
double parse_double(const std::string& text);

using CsvField = std::variant<double, std::int64_t, std::uint64_t, std::string>;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<CsvField>& fields);
  /// Single numeric column fast path.
  void value(double x);
  void close();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column or -1.
  int column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

/// Reads a file written by CsvWriter (RFC 4180 quoting). Rows must match the header width.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace weaksde
