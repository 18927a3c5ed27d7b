#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gr::bench {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);
/// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);

double parse_real(std::string_view text);
std::uint64_t parse_u64(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace gr::bench
