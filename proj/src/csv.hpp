#pragma once

// Minimal CSV helpers shared by the readers and writers in this library.

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gcnwp::csv {

/// Splits one line into fields. Handles double-quoted fields with "" escapes;
/// quoted newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

}  // namespace gcnwp::csv
