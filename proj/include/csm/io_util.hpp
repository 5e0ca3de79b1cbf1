#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csm {

// Shortest round-trip decimal formatting (std::to_chars). All table output
// goes through this so reruns are byte-identical.
std::string format_double(double value);

// FNV-1a 64-bit, used for the config-hash provenance field in table headers.
std::uint64_t fnv1a64(const std::string& text);
std::string hash_hex(const std::string& text);

// Minimal RFC-4180-style CSV: quoted fields with doubled quotes, CRLF or LF.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

// Linear-interpolation quantile of a sorted sample (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double p);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace csm
