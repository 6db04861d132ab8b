#pragma once

#include "storeboard/column.hpp"
#include "storeboard/dates.hpp"
#include "storeboard/star_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storeboard {

struct ColumnSpec {
    std::string source_name;
    std::string canonical_name;
    ColumnKind kind;
    bool required;
};

// The Global Superstore layout: mandatory columns plus the optional
// ShippingPayment, OrderPriority and PostalCode.
const std::vector<ColumnSpec>& superstore_columns();

// Header matching ignores case, whitespace and punctuation: "Sub-Category",
// "sub category" and "SubCategory" all normalize to "subcategory".
std::string normalize_header(std::string_view name);

struct RejectedRow {
    std::size_t line;
    std::string reason;
};

// One parsed source column. Exactly one of the value vectors is populated,
// by kind: text for text/categorical (empty string = missing), numbers for
// money/fraction/integer (NaN = missing), days for dates.
struct RawColumn {
    ColumnSpec spec;
    std::vector<std::string> text;
    std::vector<double> numbers;
    std::vector<DayNumber> days;
};

struct RawDataset {
    std::string source_path;
    std::size_t row_count = 0;
    std::size_t encoding_fallbacks = 0;
    std::vector<RejectedRow> rejected;
    std::vector<RawColumn> columns; // present columns only, in spec order
    std::map<std::string, DateFormat> date_formats;

    const RawColumn* find(std::string_view canonical_name) const;
    const RawColumn& column(std::string_view canonical_name) const; // throws MissingColumn
};

struct LoadOptions {
    double max_reject_rate = 0.01;
    // Below this many data rows a single bad line dominates the rate, so the
    // TooManyBadRows guard is not applied.
    std::size_t min_rows_for_reject_check = 100;
    std::size_t date_vote_rows = 100;
};

// Throws FileNotFound, MissingColumn, TooManyBadRows.
RawDataset load_csv(const std::filesystem::path& path, std::span<const ColumnSpec> spec,
                    const LoadOptions& options = {});

// Same as load_csv over in-memory bytes.
RawDataset parse_dataset(std::string_view bytes, std::string source_name,
                         std::span<const ColumnSpec> spec, const LoadOptions& options = {});

struct ShippingFee {
    double flat_fee = 0;     // per order line
    double per_unit_fee = 0; // per unit of Quantity
    bool operator==(const ShippingFee&) const = default;
};

// Recovered shipping fee schedule used to synthesize ShippingPayment when
// the dataset carries no payment column.
struct FeeTable {
    std::map<std::string, ShippingFee> by_mode;

    // The schedule committed in config/shipping_fees.json.
    static FeeTable calibrated_default();
    // Throws FileNotFound, ConfigError.
    static FeeTable load(const std::filesystem::path& path);
    static FeeTable from_json_text(std::string_view text);

    std::string digest() const;
    bool operator==(const FeeTable&) const = default;
};

// Throws MissingColumn, ConfigError (ship mode absent from the fee table),
// DanglingKey.
StarSchema build_star_schema(const RawDataset& raw, const FeeTable& fees = FeeTable::calibrated_default());

} // namespace storeboard
