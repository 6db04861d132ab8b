#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace storeboard {

struct DecodedText {
    std::string text;
    std::size_t replacements = 0; // invalid byte sequences replaced by U+FFFD
};

// Validates UTF-8, replacing each maximal invalid subsequence with U+FFFD.
// A leading byte-order mark is dropped.
DecodedText decode_utf8_lossy(std::string_view bytes);

struct CsvRecord {
    std::size_t line = 0; // 1-based line where the record starts
    std::vector<std::string> fields;
};

// RFC 4180 style: comma-delimited, double-quoted fields with "" escapes,
// embedded newlines inside quotes, LF or CRLF terminators. Blank lines are
// skipped.
std::vector<CsvRecord> parse_csv(std::string_view text);

} // namespace storeboard
