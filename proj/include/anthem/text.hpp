#pragma once

// Small text helpers shared by the CSV/JSON writers: locale-independent number
// formatting and an RFC 4180 style CSV reader.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anthem::text {

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point with `digits` decimals, for human-facing output.
std::string format_fixed(double value, int digits);

/// Whole-string parse; surrounding ASCII whitespace allowed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

std::string_view trim(std::string_view s);

using CsvRow = std::vector<std::string>;

/// Parses CSV text. Quoted fields may contain commas, doubled quotes and
/// newlines. Blank lines are skipped. A UTF-8 BOM is ignored.
std::vector<CsvRow> parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace anthem::text
