#pragma once

#include <string>
#include <string_view>

namespace orsnn {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
/// Strict parse of the whole string; ParseError naming `what` otherwise.
double parse_double(std::string_view text, const std::string& what);
std::size_t parse_size(std::string_view text, const std::string& what);
std::string trim(std::string_view text);

}  // namespace orsnn
