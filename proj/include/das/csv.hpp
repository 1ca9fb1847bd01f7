#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace das {

// Shortest round-trip decimal form of a double ("nan"/"inf" spelled out).
std::string format_double(double v);

// Joins integers with ';' so a list fits in one CSV field.
std::string join_indices(const std::vector<int>& idx);
std::string join_doubles(const std::vector<double>& vals);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  // Throws std::invalid_argument if the field count does not match the header.
  void add_row(std::vector<std::string> fields);

  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes `contents` to a sibling temp file and renames it over `path`, so
// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Throws std::runtime_error if a file cannot be created next to `path`.
void check_writable(const std::filesystem::path& path);

}  // namespace das
