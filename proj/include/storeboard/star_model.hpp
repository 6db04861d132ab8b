#pragma once

#include "storeboard/column.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storeboard {

inline constexpr std::string_view kFactTable = "Fact";

// A column reference, optionally qualified with its table. An empty table
// resolves against the fact table first, then against the dimensions.
struct ColumnRef {
    std::string table;
    std::string column;

    // Accepts "Column" or "Table[Column]".
    static ColumnRef parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const ColumnRef&) const = default;
};

// Set of fact-row ordinals, stored as a bitset over the fact table.
class RowSelection {
  public:
    RowSelection() = default;
    explicit RowSelection(std::size_t universe, bool all = false);

    std::size_t universe() const { return universe_; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }

    bool test(std::size_t row) const { return (words_[row >> 6] >> (row & 63)) & 1U; }
    void set(std::size_t row) { words_[row >> 6] |= std::uint64_t{1} << (row & 63); }
    void reset(std::size_t row) { words_[row >> 6] &= ~(std::uint64_t{1} << (row & 63)); }

    RowSelection& operator&=(const RowSelection& other);
    bool operator==(const RowSelection& other) const = default;

    std::vector<std::uint32_t> ordinals() const;

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            auto bits = words_[w];
            while (bits != 0) {
                auto bit = static_cast<std::size_t>(__builtin_ctzll(bits));
                fn(static_cast<std::uint32_t>(w * 64 + bit));
                bits &= bits - 1;
            }
        }
    }

  private:
    std::size_t universe_ = 0;
    std::vector<std::uint64_t> words_;
};

struct Range {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_inclusive = true;
    bool hi_inclusive = true;

    bool contains(double v) const {
        return (lo_inclusive ? v >= lo : v > lo) && (hi_inclusive ? v <= hi : v < hi);
    }
    bool operator==(const Range&) const = default;
};

Range intersect(const Range& a, const Range& b);

// The restriction a filter context places on one column: a conjunction of
// value sets and at most one (tightened) range. Values in a set are matched
// against the column's rendering: dictionary strings, ISO dates, or numbers
// parsed from text.
struct ColumnPredicate {
    ColumnRef column;
    std::vector<std::vector<std::string>> in_sets; // each sorted, deduplicated
    std::optional<Range> range;

    static ColumnPredicate in(ColumnRef column, std::vector<std::string> values);
    static ColumnPredicate between(ColumnRef column, Range range);

    bool operator==(const ColumnPredicate&) const = default;
};

class FilterContext {
  public:
    FilterContext() = default;

    // Adds a predicate; composes by intersection with any existing predicate
    // on the same (table, column).
    FilterContext& add(ColumnPredicate predicate);

    const std::vector<ColumnPredicate>& predicates() const { return predicates_; }
    bool empty() const { return predicates_.empty(); }

    bool operator==(const FilterContext&) const = default;

  private:
    std::vector<ColumnPredicate> predicates_; // sorted by column
};

FilterContext intersect(const FilterContext& a, const FilterContext& b);

struct Relationship {
    std::string fact_column;
    std::string dimension;
    std::string key_column;
    bool operator==(const Relationship&) const = default;
};

// Provenance recorded at ingest and carried through snapshots.
struct SchemaMetadata {
    std::string source_path;
    std::uint64_t raw_rows = 0;
    std::uint64_t rejected_rows = 0;
    std::uint64_t encoding_fallbacks = 0;
    std::string date_format;
    std::string shipping_payment_source; // "column" or "synthesized"
    std::string fee_table_digest;        // digest of the fee table used, if synthesized
    bool operator==(const SchemaMetadata&) const = default;
};

class StarSchema {
  public:
    struct Binding {
        std::string table;
        const Column* column = nullptr;
        const std::vector<std::uint32_t>* row_map = nullptr; // fact row -> dimension row

        std::size_t row(std::size_t fact_row) const {
            return row_map != nullptr ? (*row_map)[fact_row] : fact_row;
        }
    };

    StarSchema(ColumnTable fact, std::vector<ColumnTable> dimensions,
               std::vector<Relationship> relationships, SchemaMetadata metadata = {});

    const ColumnTable& fact() const { return fact_; }
    const std::vector<ColumnTable>& dimensions() const { return dimensions_; }
    const ColumnTable* dimension(std::string_view name) const;
    const ColumnTable* table(std::string_view name) const;
    const std::vector<Relationship>& relationships() const { return relationships_; }
    const SchemaMetadata& metadata() const { return metadata_; }
    std::size_t row_count() const { return fact_.row_count(); }

    // Throws UnknownColumn.
    Binding bind(const ColumnRef& ref) const;

    bool operator==(const StarSchema& other) const;

  private:
    ColumnTable fact_;
    std::vector<ColumnTable> dimensions_;
    std::vector<Relationship> relationships_;
    SchemaMetadata metadata_;
    std::vector<std::vector<std::uint32_t>> row_maps_; // parallel to dimensions_
};

// Throws UnknownColumn, TypeMismatch.
RowSelection resolve_rows(const StarSchema& schema, const FilterContext& ctx);

// Per-row mask over the predicate's own table (fact or dimension).
std::vector<char> predicate_mask(const Column& column, const ColumnPredicate& predicate);

} // namespace storeboard
