#pragma once

// Small text helpers shared by the config, CSV and JSON writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ald::text {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on `sep`, trimming each piece; empty input gives an empty list.
std::vector<std::string_view> split(std::string_view s, char sep);

std::vector<double> parse_double_list(std::string_view s);
std::string join_doubles(const std::vector<double>& v, std::string_view sep = ",");

}  // namespace ald::text
