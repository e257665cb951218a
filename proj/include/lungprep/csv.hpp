#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lungprep::csv {

// Splits one CSV record. Double-quoted fields may contain commas; "" inside
// quotes is a literal quote. No embedded newlines.
std::vector<std::string> split(std::string_view line);

// Quotes a field only when it contains a comma or a quote.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

// All lines of a text file with trailing '\r' removed. A final empty line
// produced by a terminating newline is dropped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Strict finite-real parse of the whole string.
double parse_real(std::string_view text, std::string_view context);

std::string trim(std::string_view text);

// printf-style fixed decimals, e.g. fixed(0.5, 6) == "0.500000".
std::string fixed(double value, int decimals);

// Shortest decimal that parses back to the same double.
std::string shortest(double value);

}  // namespace lungprep::csv
