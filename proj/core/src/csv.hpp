#pragma once

// Minimal RFC 4180 reader/writer.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qcomp::detail {

using CsvRow = std::vector<std::string>;

std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);  // no trailing newline

// Returns std::nullopt when a quoted field is never closed or a quote
// appears in the middle of an unquoted field. Accepts LF or CRLF; a final
// newline is optional; blank lines are skipped.
std::optional<std::vector<CsvRow>> csv_parse(std::string_view text);

}  // namespace qcomp::detail
