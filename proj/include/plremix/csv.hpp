#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace plremix {

/// Shortest decimal representation that round-trips the exact double.
std::string fmt_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
uint64_t parse_uint64(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// FNV-1a over raw bytes; used to fingerprint datasets in run manifests.
uint64_t fnv1a64(std::string_view bytes);
std::string hex64(uint64_t v);

}  // namespace plremix
