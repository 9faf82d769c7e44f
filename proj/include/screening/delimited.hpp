#pragma once

// Minimal RFC 4180 comma-separated reader/writer: quoted fields, doubled
// quotes, embedded newlines. Input is treated as UTF-8 bytes.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace screening::delimited {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0; ///< 1-based physical line the row starts on
};

/// Parses the whole text. Blank lines are skipped. A leading UTF-8 BOM is dropped.
/// Throws screening::Error on an unterminated quoted field.
std::vector<Row> parse(std::string_view text, char delimiter = ',');

/// Quotes a field when it contains the delimiter, a quote, or a line break.
std::string escape(std::string_view field, char delimiter = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

} // namespace screening::delimited
