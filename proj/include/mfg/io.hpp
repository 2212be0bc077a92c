#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfg {

// Shortest round-trip decimal form of a double (locale-free, deterministic).
std::string fmt_double(double v);

// FNV-1a 64-bit, hex encoded. Used to fingerprint configs in manifests.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

/// Column-oriented CSV writer with deterministic formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);
  const std::string& str() const { return buf_; }
  void save(const std::filesystem::path& p) const;

 private:
  std::string buf_;
  std::size_t n_cols_;
};

}  // namespace mfg
