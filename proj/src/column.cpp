#include "storeboard/column.hpp"

#include "storeboard/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

namespace storeboard {

const char* to_string(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::Text:
        return "text";
    case ColumnKind::Categorical:
        return "categorical";
    case ColumnKind::Money:
        return "money";
    case ColumnKind::Fraction:
        return "fraction";
    case ColumnKind::Integer:
        return "integer";
    case ColumnKind::Date:
        return "date";
    }
    return "?";
}

std::optional<ColumnKind> parse_column_kind(std::string_view text) {
    for (auto k : {ColumnKind::Text, ColumnKind::Categorical, ColumnKind::Money,
                   ColumnKind::Fraction, ColumnKind::Integer, ColumnKind::Date}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

bool scalar_less(const Scalar& a, const Scalar& b) {
    if (a.index() != b.index()) {
        return a.index() < b.index();
    }
    if (const auto* x = std::get_if<double>(&a)) {
        return *x < std::get<double>(b);
    }
    if (const auto* s = std::get_if<std::string>(&a)) {
        return *s < std::get<std::string>(b);
    }
    return false;
}

std::string scalar_to_string(const Scalar& s) {
    if (const auto* x = std::get_if<double>(&s)) {
        return fmt::format("{}", *x);
    }
    if (const auto* str = std::get_if<std::string>(&s)) {
        return *str;
    }
    return "";
}

Column Column::numeric(std::string name, ColumnKind kind, std::vector<double> values) {
    if (!is_numeric_kind(kind)) {
        throw TypeMismatch("numeric column '" + name + "' declared as " + to_string(kind));
    }
    return Column(std::move(name), kind, Numeric{std::move(values)});
}

Column Column::dates(std::string name, std::vector<DayNumber> values) {
    return Column(std::move(name), ColumnKind::Date, Dates{std::move(values)});
}

Column Column::dictionary(std::string name, ColumnKind kind, std::vector<std::uint32_t> codes,
                          std::vector<std::string> dictionary) {
    if (!is_dictionary_kind(kind)) {
        throw TypeMismatch("dictionary column '" + name + "' declared as " + to_string(kind));
    }
    for (auto c : codes) {
        if (c != kMissingCode && c >= dictionary.size()) {
            throw TypeMismatch("dictionary code out of range in column '" + name + "'");
        }
    }
    return Column(std::move(name), kind, Dictionary{std::move(codes), std::move(dictionary)});
}

std::size_t Column::size() const {
    return std::visit(
        [](const auto& d) -> std::size_t {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Dictionary>) {
                return d.codes.size();
            } else {
                return d.values.size();
            }
        },
        data_);
}

const std::vector<double>& Column::numbers() const {
    if (const auto* n = std::get_if<Numeric>(&data_)) {
        return n->values;
    }
    throw TypeMismatch("column '" + name_ + "' is not numeric");
}

const std::vector<DayNumber>& Column::days() const {
    if (const auto* d = std::get_if<Dates>(&data_)) {
        return d->values;
    }
    throw TypeMismatch("column '" + name_ + "' is not a date column");
}

const std::vector<std::uint32_t>& Column::codes() const {
    if (const auto* d = std::get_if<Dictionary>(&data_)) {
        return d->codes;
    }
    throw TypeMismatch("column '" + name_ + "' is not dictionary-encoded");
}

const std::vector<std::string>& Column::dictionary_values() const {
    if (const auto* d = std::get_if<Dictionary>(&data_)) {
        return d->dictionary;
    }
    throw TypeMismatch("column '" + name_ + "' is not dictionary-encoded");
}

bool Column::is_missing(std::size_t row) const {
    if (const auto* n = std::get_if<Numeric>(&data_)) {
        return std::isnan(n->values[row]);
    }
    if (const auto* d = std::get_if<Dates>(&data_)) {
        return d->values[row] == kMissingDay;
    }
    return std::get<Dictionary>(data_).codes[row] == kMissingCode;
}

Scalar Column::scalar_at(std::size_t row) const {
    if (is_missing(row)) {
        return std::monostate{};
    }
    if (const auto* n = std::get_if<Numeric>(&data_)) {
        return n->values[row];
    }
    if (const auto* d = std::get_if<Dates>(&data_)) {
        return format_iso_date(d->values[row]);
    }
    const auto& dict = std::get<Dictionary>(data_);
    return dict.dictionary[dict.codes[row]];
}

std::optional<double> Column::number_at(std::size_t row) const {
    if (is_missing(row)) {
        return std::nullopt;
    }
    if (const auto* n = std::get_if<Numeric>(&data_)) {
        return n->values[row];
    }
    if (const auto* d = std::get_if<Dates>(&data_)) {
        return static_cast<double>(d->values[row]);
    }
    return std::nullopt;
}

std::optional<std::uint32_t> Column::find_code(std::string_view value) const {
    const auto& dict = dictionary_values();
    auto it = std::find(dict.begin(), dict.end(), value);
    if (it == dict.end()) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - dict.begin());
}

bool Column::operator==(const Column& other) const {
    if (name_ != other.name_ || kind_ != other.kind_ || data_.index() != other.data_.index()) {
        return false;
    }
    if (const auto* n = std::get_if<Numeric>(&data_)) {
        const auto& a = n->values;
        const auto& b = std::get<Numeric>(other.data_).values;
        // bitwise so that NaN cells compare equal
        return a.size() == b.size() &&
               (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
    if (const auto* d = std::get_if<Dates>(&data_)) {
        return d->values == std::get<Dates>(other.data_).values;
    }
    const auto& a = std::get<Dictionary>(data_);
    const auto& b = std::get<Dictionary>(other.data_);
    return a.codes == b.codes && a.dictionary == b.dictionary;
}

std::uint32_t DictionaryBuilder::intern(std::string_view value) {
    auto it = index_.find(std::string(value));
    if (it != index_.end()) {
        return it->second;
    }
    auto code = static_cast<std::uint32_t>(values_.size());
    values_.emplace_back(value);
    index_.emplace(std::string(value), code);
    return code;
}

ColumnTable::ColumnTable(std::string name, std::vector<Column> columns,
                         std::optional<std::string> key_column)
    : name_(std::move(name)), columns_(std::move(columns)), key_column_(std::move(key_column)) {
    row_count_ = columns_.empty() ? 0 : columns_.front().size();
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].size() != row_count_) {
            throw TypeMismatch(fmt::format("table '{}': column '{}' has {} rows, expected {}", name_,
                                           columns_[i].name(), columns_[i].size(), row_count_));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (columns_[j].name() == columns_[i].name()) {
                throw TypeMismatch("table '" + name_ + "': duplicate column '" +
                                   columns_[i].name() + "'");
            }
        }
    }
    if (key_column_) {
        const auto& key = column(*key_column_);
        std::vector<std::string> seen;
        seen.reserve(key.size());
        for (std::size_t r = 0; r < key.size(); ++r) {
            seen.push_back(scalar_to_string(key.scalar_at(r)));
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
            throw TypeMismatch("table '" + name_ + "': key column '" + *key_column_ +
                               "' has duplicate values");
        }
    }
}

const Column* ColumnTable::find(std::string_view column) const {
    for (const auto& c : columns_) {
        if (c.name() == column) {
            return &c;
        }
    }
    return nullptr;
}

const Column& ColumnTable::column(std::string_view column) const {
    if (const auto* c = find(column)) {
        return *c;
    }
    throw UnknownColumn(name_, std::string(column));
}

bool ColumnTable::operator==(const ColumnTable& other) const {
    return name_ == other.name_ && key_column_ == other.key_column_ && columns_ == other.columns_;
}

} // namespace storeboard
