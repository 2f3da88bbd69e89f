#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scbm::text {

bool is_valid_utf8(std::string_view s);

// Strips ASCII whitespace and U+00A0 from both ends.
std::string trim(std::string_view s);

// Simple Unicode case folding (Latin-1, Latin Extended-A, Greek, Cyrillic
// and ASCII). Invalid UTF-8 is passed through byte by byte.
std::string fold_case(std::string_view s);

// Key used to decide whether two lexicon entries are the same concept:
// trim, case fold, and map U+2010/U+2011/U+2212 to '-'.
std::string normalize_concept(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string sha256_hex(std::string_view bytes);
std::vector<std::uint8_t> sha256(std::string_view bytes);

std::string to_hex(std::span<const std::uint8_t> bytes);

// Quotes a CSV field when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace scbm::text
