#pragma once

#include "windvol/core.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace windvol::io {

/// Minimal CSV table: header plus string cells. Lines starting with '#'
/// carry provenance metadata and are collected separately.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  /// Index of a header column; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_line(std::string_view line, char sep = ',');

double parse_double(std::string_view text);
long parse_long(std::string_view text);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);
/// Fixed number of decimals, for human-facing tables.
std::string format_fixed(double v, int decimals);

/// Writes `content` atomically enough for our purposes (temp file + rename).
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a, hex encoded. Used for config and artifact provenance.
std::string fnv1a_hex(std::string_view data);

}  // namespace windvol::io
