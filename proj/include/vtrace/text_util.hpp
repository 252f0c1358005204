#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vtrace {

std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string>& lines);

std::string_view trim(std::string_view s);

// Collapses every run of whitespace into one space and trims both ends.
std::string squeeze_whitespace(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Natural ("version aware") ordering: digit runs compare numerically.
bool natural_less(std::string_view a, std::string_view b);

}  // namespace vtrace
