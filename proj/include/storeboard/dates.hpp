#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace storeboard {

// Day number: days since 1970-01-01 (proleptic Gregorian).
using DayNumber = std::int32_t;

enum class DateFormat { DayMonthYearDash, MonthDayYearSlash, Iso };

std::optional<DayNumber> parse_date(std::string_view text, DateFormat format);
std::string format_iso_date(DayNumber day);

// Strict "YYYY-MM-DD"; used for date literals on the wire and in measures.
std::optional<DayNumber> parse_iso_date(std::string_view text);

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};
CivilDate to_civil(DayNumber day);

const char* to_string(DateFormat format);

} // namespace storeboard
