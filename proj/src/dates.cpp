#include "storeboard/dates.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace storeboard {

namespace {

std::optional<int> parse_int(std::string_view text, std::size_t min_digits, std::size_t max_digits) {
    if (text.size() < min_digits || text.size() > max_digits) {
        return std::nullopt;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<DayNumber> make_day(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{static_cast<unsigned>(month)},
                                    std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return static_cast<DayNumber>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

// Splits "a<sep>b<sep>c" into exactly three parts.
bool split3(std::string_view text, char sep, std::string_view (&parts)[3]) {
    auto first = text.find(sep);
    if (first == std::string_view::npos) {
        return false;
    }
    auto second = text.find(sep, first + 1);
    if (second == std::string_view::npos || text.find(sep, second + 1) != std::string_view::npos) {
        return false;
    }
    parts[0] = text.substr(0, first);
    parts[1] = text.substr(first + 1, second - first - 1);
    parts[2] = text.substr(second + 1);
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

std::optional<DayNumber> parse_date(std::string_view text, DateFormat format) {
    text = trim(text);
    std::string_view parts[3];
    switch (format) {
    case DateFormat::DayMonthYearDash: {
        if (!split3(text, '-', parts)) {
            return std::nullopt;
        }
        auto d = parse_int(parts[0], 1, 2);
        auto m = parse_int(parts[1], 1, 2);
        auto y = parse_int(parts[2], 4, 4);
        if (!d || !m || !y) {
            return std::nullopt;
        }
        return make_day(*y, *m, *d);
    }
    case DateFormat::MonthDayYearSlash: {
        if (!split3(text, '/', parts)) {
            return std::nullopt;
        }
        auto m = parse_int(parts[0], 1, 2);
        auto d = parse_int(parts[1], 1, 2);
        auto y = parse_int(parts[2], 4, 4);
        if (!d || !m || !y) {
            return std::nullopt;
        }
        return make_day(*y, *m, *d);
    }
    case DateFormat::Iso:
        return parse_iso_date(text);
    }
    return std::nullopt;
}

std::optional<DayNumber> parse_iso_date(std::string_view text) {
    std::string_view parts[3];
    if (!split3(text, '-', parts)) {
        return std::nullopt;
    }
    auto y = parse_int(parts[0], 4, 4);
    auto m = parse_int(parts[1], 2, 2);
    auto d = parse_int(parts[2], 2, 2);
    if (!d || !m || !y) {
        return std::nullopt;
    }
    return make_day(*y, *m, *d);
}

CivilDate to_civil(DayNumber day) {
    std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day())};
}

std::string format_iso_date(DayNumber day) {
    auto c = to_civil(day);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

const char* to_string(DateFormat format) {
    switch (format) {
    case DateFormat::DayMonthYearDash:
        return "DD-MM-YYYY";
    case DateFormat::MonthDayYearSlash:
        return "MM/DD/YYYY";
    case DateFormat::Iso:
        return "YYYY-MM-DD";
    }
    return "?";
}

} // namespace storeboard
