#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geoprobe {

using CsvRow = std::vector<std::string>;

// RFC 4180 style: quoted fields, doubled quotes, CRLF or LF. Blank lines are
// skipped. Throws ParseError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text, std::string_view source = "<memory>");
std::vector<CsvRow> read_csv_file(const std::filesystem::path& path);

// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace geoprobe
