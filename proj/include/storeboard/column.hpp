#pragma once

#include "storeboard/dates.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace storeboard {

enum class ColumnKind { Text, Categorical, Money, Fraction, Integer, Date };

const char* to_string(ColumnKind kind);
std::optional<ColumnKind> parse_column_kind(std::string_view text);

inline bool is_numeric_kind(ColumnKind k) {
    return k == ColumnKind::Money || k == ColumnKind::Fraction || k == ColumnKind::Integer;
}
inline bool is_dictionary_kind(ColumnKind k) {
    return k == ColumnKind::Text || k == ColumnKind::Categorical;
}

inline constexpr std::uint32_t kMissingCode = std::numeric_limits<std::uint32_t>::max();
inline constexpr DayNumber kMissingDay = std::numeric_limits<DayNumber>::min();

// A single cell value as seen by group keys and the wire format. Dates are
// rendered as ISO strings so that lexicographic order is chronological.
using Scalar = std::variant<std::monostate, double, std::string>;

// Total order: missing < numbers < strings.
bool scalar_less(const Scalar& a, const Scalar& b);
std::string scalar_to_string(const Scalar& s);

class Column {
  public:
    struct Numeric {
        std::vector<double> values; // NaN marks a missing value
    };
    struct Dates {
        std::vector<DayNumber> values; // kMissingDay marks a missing value
    };
    struct Dictionary {
        std::vector<std::uint32_t> codes; // kMissingCode marks a missing value
        std::vector<std::string> dictionary;
    };

    static Column numeric(std::string name, ColumnKind kind, std::vector<double> values);
    static Column dates(std::string name, std::vector<DayNumber> values);
    static Column dictionary(std::string name, ColumnKind kind, std::vector<std::uint32_t> codes,
                             std::vector<std::string> dictionary);

    const std::string& name() const { return name_; }
    ColumnKind kind() const { return kind_; }
    std::size_t size() const;

    bool is_numeric() const { return is_numeric_kind(kind_); }
    bool is_date() const { return kind_ == ColumnKind::Date; }
    bool is_dictionary() const { return is_dictionary_kind(kind_); }

    const std::vector<double>& numbers() const;
    const std::vector<DayNumber>& days() const;
    const std::vector<std::uint32_t>& codes() const;
    const std::vector<std::string>& dictionary_values() const;

    bool is_missing(std::size_t row) const;
    Scalar scalar_at(std::size_t row) const;

    // Numeric view of a cell: the number itself, or the day number for dates.
    std::optional<double> number_at(std::size_t row) const;

    // Dictionary code for a string, if present.
    std::optional<std::uint32_t> find_code(std::string_view value) const;

    bool operator==(const Column& other) const;

  private:
    Column(std::string name, ColumnKind kind, std::variant<Numeric, Dates, Dictionary> data)
        : name_(std::move(name)), kind_(kind), data_(std::move(data)) {}

    std::string name_;
    ColumnKind kind_;
    std::variant<Numeric, Dates, Dictionary> data_;
};

// Interns strings into dense codes in first-seen order.
class DictionaryBuilder {
  public:
    std::uint32_t intern(std::string_view value);
    std::vector<std::string> take() { return std::move(values_); }
    std::size_t size() const { return values_.size(); }

  private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> values_;
};

class ColumnTable {
  public:
    ColumnTable() = default;
    ColumnTable(std::string name, std::vector<Column> columns,
                std::optional<std::string> key_column = std::nullopt);

    const std::string& name() const { return name_; }
    const std::vector<Column>& columns() const { return columns_; }
    const std::optional<std::string>& key_column() const { return key_column_; }
    std::size_t row_count() const { return row_count_; }

    const Column* find(std::string_view column) const;
    const Column& column(std::string_view column) const; // throws UnknownColumn

    bool operator==(const ColumnTable& other) const;

  private:
    std::string name_;
    std::vector<Column> columns_;
    std::optional<std::string> key_column_;
    std::size_t row_count_ = 0;
};

} // namespace storeboard
