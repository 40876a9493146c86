#include "trapcal/csv.hpp"

#include <cstdio>
#include <fstream>

#include "trapcal/errors.hpp"
#include "trapcal/rng.hpp"

namespace trapcal {

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) {
    throw InvalidParameter("CSV needs at least one column");
  }
}

void CsvWriter::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) {
    throw LengthMismatch("CSV row width does not match the header");
  }
  rows_.push_back(values);
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i > 0) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string digest_hex(const std::string& bytes) {
  const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string CsvWriter::write(const std::filesystem::path& path) const {
  const std::string bytes = str();
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error("cannot write " + path.string());
  }
  file << bytes;
  file.close();
  return digest_hex(bytes);
}

}  // namespace trapcal
