#pragma once

#include <string>
#include <string_view>

namespace normlens {

// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

// Strict full-string parse; throws std::invalid_argument on garbage.
double parse_double(std::string_view s);

}  // namespace normlens
