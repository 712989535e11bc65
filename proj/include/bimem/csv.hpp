#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bimem::csv {

// Splits one CSV record on commas. No quoting: every file this project
// writes is purely numeric.
std::vector<std::string_view> split(std::string_view line);

// Strict numeric parses. Throw DataError(line) on malformed fields.
double parse_real(std::string_view field, std::size_t line);
long long parse_int(std::string_view field, std::size_t line);

// %.9g
std::string format_real(double v);

}  // namespace bimem::csv
