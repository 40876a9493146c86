#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace trapcal {

// CSV artifact with a fixed column order and full-precision floats ("%.17g"),
// written with '\n' newlines so reruns are byte-identical.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  void add_row(const std::vector<double>& values);

  // Serialized bytes: header line then one row per add_row call.
  std::string str() const;

  // Writes the file and returns its FNV-1a 64 digest as fixed-width hex.
  std::string write(const std::filesystem::path& path) const;

  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

std::string format_double(double value);

std::string digest_hex(const std::string& bytes);

}  // namespace trapcal
