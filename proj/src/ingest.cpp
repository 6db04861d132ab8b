#include "storeboard/ingest.hpp"

#include "storeboard/csv.hpp"
#include "storeboard/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace storeboard {

const std::vector<ColumnSpec>& superstore_columns() {
    static const std::vector<ColumnSpec> columns = {
        {"Order ID", "OrderID", ColumnKind::Text, true},
        {"Order Date", "OrderDate", ColumnKind::Date, true},
        {"Ship Date", "ShipDate", ColumnKind::Date, true},
        {"Ship Mode", "ShipMode", ColumnKind::Categorical, true},
        {"Customer ID", "CustomerID", ColumnKind::Text, true},
        {"Customer Name", "CustomerName", ColumnKind::Text, true},
        {"Segment", "Segment", ColumnKind::Categorical, true},
        {"City", "City", ColumnKind::Categorical, true},
        {"Country", "Country", ColumnKind::Categorical, true},
        {"Market", "Market", ColumnKind::Categorical, true},
        {"Region", "Region", ColumnKind::Categorical, true},
        {"Product ID", "ProductID", ColumnKind::Text, true},
        {"Category", "Category", ColumnKind::Categorical, true},
        {"Sub-Category", "SubCategory", ColumnKind::Categorical, true},
        {"Product Name", "ProductName", ColumnKind::Text, true},
        {"Sales", "Sales", ColumnKind::Money, true},
        {"Quantity", "Quantity", ColumnKind::Integer, true},
        {"Discount", "Discount", ColumnKind::Fraction, true},
        {"Profit", "Profit", ColumnKind::Money, true},
        {"Shipping Cost", "ShippingCost", ColumnKind::Money, true},
        {"Shipping Payment", "ShippingPayment", ColumnKind::Money, false},
        {"Order Priority", "OrderPriority", ColumnKind::Categorical, false},
        {"Postal Code", "PostalCode", ColumnKind::Text, false},
    };
    return columns;
}

std::string normalize_header(std::string_view name) {
    std::string out;
    for (char c : name) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) != 0) {
            out.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    return out;
}

const RawColumn* RawDataset::find(std::string_view canonical_name) const {
    for (const auto& c : columns) {
        if (c.spec.canonical_name == canonical_name) {
            return &c;
        }
    }
    return nullptr;
}

const RawColumn& RawDataset::column(std::string_view canonical_name) const {
    if (const auto* c = find(canonical_name)) {
        return *c;
    }
    throw MissingColumn(std::string(canonical_name));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
        s.remove_suffix(1);
    }
    return s;
}

// Decimal with optional currency sign, thousands separators, or percent.
std::optional<double> parse_decimal(std::string_view text, bool allow_percent) {
    text = trim(text);
    std::string cleaned;
    bool percent = false;
    for (char c : text) {
        if (c == '$' || c == ',') {
            continue;
        }
        cleaned.push_back(c);
    }
    if (allow_percent && !cleaned.empty() && cleaned.back() == '%') {
        percent = true;
        cleaned.pop_back();
    }
    if (cleaned.empty()) {
        return std::nullopt;
    }
    const char* begin = cleaned.data();
    if (*begin == '+') {
        ++begin;
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(begin, cleaned.data() + cleaned.size(), v);
    if (ec != std::errc{} || ptr != cleaned.data() + cleaned.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return percent ? v / 100.0 : v;
}

constexpr std::array<DateFormat, 3> kDateFormats = {
    DateFormat::DayMonthYearDash, DateFormat::MonthDayYearSlash, DateFormat::Iso};

DateFormat vote_date_format(const std::vector<CsvRecord>& records, std::size_t field,
                            std::size_t vote_rows) {
    std::array<std::size_t, kDateFormats.size()> hits{};
    std::size_t seen = 0;
    for (std::size_t r = 1; r < records.size() && seen < vote_rows; ++r) {
        if (field >= records[r].fields.size()) {
            continue;
        }
        ++seen;
        for (std::size_t f = 0; f < kDateFormats.size(); ++f) {
            if (parse_date(records[r].fields[field], kDateFormats[f])) {
                ++hits[f];
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t f = 1; f < kDateFormats.size(); ++f) {
        if (hits[f] > hits[best]) {
            best = f;
        }
    }
    return kDateFormats[best];
}

} // namespace

RawDataset parse_dataset(std::string_view bytes, std::string source_name,
                         std::span<const ColumnSpec> spec, const LoadOptions& options) {
    auto decoded = decode_utf8_lossy(bytes);
    auto records = parse_csv(decoded.text);

    RawDataset out;
    out.source_path = std::move(source_name);
    out.encoding_fallbacks = decoded.replacements;

    std::vector<std::string> header;
    if (!records.empty()) {
        for (const auto& h : records.front().fields) {
            header.push_back(normalize_header(h));
        }
    }

    // Map each spec column to a header position.
    struct Bound {
        const ColumnSpec* spec;
        std::size_t field;
        DateFormat format = DateFormat::DayMonthYearDash;
    };
    std::vector<Bound> bound;
    for (const auto& s : spec) {
        auto a = normalize_header(s.source_name);
        auto b = normalize_header(s.canonical_name);
        auto it = std::find_if(header.begin(), header.end(),
                               [&](const std::string& h) { return h == a || h == b; });
        if (it == header.end()) {
            if (s.required) {
                throw MissingColumn(s.canonical_name);
            }
            continue;
        }
        Bound bnd{&s, static_cast<std::size_t>(it - header.begin())};
        if (s.kind == ColumnKind::Date) {
            bnd.format = vote_date_format(records, bnd.field, options.date_vote_rows);
            out.date_formats[s.canonical_name] = bnd.format;
        }
        bound.push_back(bnd);
    }

    for (const auto& b : bound) {
        out.columns.push_back(RawColumn{*b.spec, {}, {}, {}});
    }

    const std::size_t data_rows = records.empty() ? 0 : records.size() - 1;
    for (auto& c : out.columns) {
        if (is_dictionary_kind(c.spec.kind)) {
            c.text.reserve(data_rows);
        } else if (c.spec.kind == ColumnKind::Date) {
            c.days.reserve(data_rows);
        } else {
            c.numbers.reserve(data_rows);
        }
    }

    std::vector<std::string> text_values(bound.size());
    std::vector<double> number_values(bound.size());
    std::vector<DayNumber> day_values(bound.size());

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::optional<std::string> reason;
        if (rec.fields.size() != header.size()) {
            reason = fmt::format("expected {} fields, found {}", header.size(), rec.fields.size());
        }
        for (std::size_t i = 0; i < bound.size() && !reason; ++i) {
            const auto& b = bound[i];
            auto raw = trim(rec.fields[b.field]);
            const auto& s = *b.spec;
            switch (s.kind) {
            case ColumnKind::Text:
            case ColumnKind::Categorical:
                if (raw.empty() && s.required) {
                    reason = fmt::format("column {}: empty value", s.canonical_name);
                }
                text_values[i] = std::string(raw);
                break;
            case ColumnKind::Date: {
                if (raw.empty() && !s.required) {
                    day_values[i] = kMissingDay;
                    break;
                }
                auto day = parse_date(raw, b.format);
                if (!day) {
                    reason = fmt::format("column {}: cannot parse '{}' as {}", s.canonical_name, raw,
                                         to_string(b.format));
                } else {
                    day_values[i] = *day;
                }
                break;
            }
            case ColumnKind::Money:
            case ColumnKind::Fraction:
            case ColumnKind::Integer: {
                if (raw.empty() && !s.required) {
                    number_values[i] = std::nan("");
                    break;
                }
                auto v = parse_decimal(raw, s.kind == ColumnKind::Fraction);
                if (!v) {
                    reason = fmt::format("column {}: cannot parse '{}' as {}", s.canonical_name, raw,
                                         to_string(s.kind));
                } else if (s.kind == ColumnKind::Fraction && (*v < 0.0 || *v > 1.0)) {
                    reason = fmt::format("column {}: fraction {} outside [0, 1]", s.canonical_name, *v);
                } else if (s.kind == ColumnKind::Integer && *v != std::floor(*v)) {
                    reason = fmt::format("column {}: '{}' is not an integer", s.canonical_name, raw);
                } else {
                    number_values[i] = *v;
                }
                break;
            }
            }
        }
        if (reason) {
            out.rejected.push_back({rec.line, *reason});
            continue;
        }
        for (std::size_t i = 0; i < bound.size(); ++i) {
            auto& c = out.columns[i];
            if (is_dictionary_kind(c.spec.kind)) {
                c.text.push_back(std::move(text_values[i]));
            } else if (c.spec.kind == ColumnKind::Date) {
                c.days.push_back(day_values[i]);
            } else {
                c.numbers.push_back(number_values[i]);
            }
        }
        ++out.row_count;
    }

    if (data_rows >= options.min_rows_for_reject_check &&
        static_cast<double>(out.rejected.size()) >
            options.max_reject_rate * static_cast<double>(data_rows)) {
        throw TooManyBadRows(out.rejected.size(), data_rows);
    }
    return out;
}

RawDataset load_csv(const std::filesystem::path& path, std::span<const ColumnSpec> spec,
                    const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) {
        throw FileNotFound(path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str(), path.string(), spec, options);
}

FeeTable FeeTable::calibrated_default() {
    // Zero recovered fees: the unrecovered cost equals the shipping cost.
    FeeTable t;
    for (const char* mode : {"First Class", "Same Day", "Second Class", "Standard Class"}) {
        t.by_mode[mode] = ShippingFee{0.0, 0.0};
    }
    return t;
}

FeeTable FeeTable::from_json_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("fee table is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("fees") || !doc["fees"].is_object()) {
        throw ConfigError("fee table must be an object with a \"fees\" object");
    }
    FeeTable t;
    for (const auto& [mode, fee] : doc["fees"].items()) {
        if (!fee.is_object() || !fee.contains("flat_fee") || !fee.contains("per_unit_fee") ||
            !fee["flat_fee"].is_number() || !fee["per_unit_fee"].is_number()) {
            throw ConfigError("fee entry '" + mode + "' needs numeric flat_fee and per_unit_fee");
        }
        t.by_mode[mode] = ShippingFee{fee["flat_fee"].get<double>(), fee["per_unit_fee"].get<double>()};
    }
    return t;
}

FeeTable FeeTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound(path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string FeeTable::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [mode, fee] : by_mode) {
        mix(fmt::format("{}={},{};", mode, fee.flat_fee, fee.per_unit_fee));
    }
    return fmt::format("{:016x}", h);
}

namespace {

// Builds one dimension keyed by an ordinal surrogate over distinct attribute
// tuples, in first-seen order. Returns the fact foreign-key vector.
struct DimensionBuild {
    ColumnTable table;
    std::vector<double> fact_keys;
};

DimensionBuild build_dimension(const RawDataset& raw, const std::string& name,
                               const std::string& key_name,
                               const std::vector<std::string>& attributes) {
    std::vector<const RawColumn*> cols;
    for (const auto& a : attributes) {
        if (const auto* c = raw.find(a)) {
            cols.push_back(c);
        }
    }
    std::map<std::vector<std::string_view>, std::uint32_t> tuples;
    std::vector<std::uint32_t> first_row;
    DimensionBuild out;
    out.fact_keys.reserve(raw.row_count);
    std::vector<std::string_view> key(cols.size());
    for (std::size_t r = 0; r < raw.row_count; ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            key[i] = cols[i]->text[r];
        }
        auto [it, inserted] = tuples.emplace(key, static_cast<std::uint32_t>(first_row.size()));
        if (inserted) {
            first_row.push_back(static_cast<std::uint32_t>(r));
        }
        out.fact_keys.push_back(it->second);
    }

    std::vector<Column> columns;
    std::vector<double> keys(first_row.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        keys[i] = static_cast<double>(i);
    }
    columns.push_back(Column::numeric(key_name, ColumnKind::Integer, std::move(keys)));
    for (const auto* c : cols) {
        DictionaryBuilder dict;
        std::vector<std::uint32_t> codes;
        codes.reserve(first_row.size());
        for (auto r : first_row) {
            const auto& v = c->text[r];
            codes.push_back(v.empty() ? kMissingCode : dict.intern(v));
        }
        columns.push_back(
            Column::dictionary(c->spec.canonical_name, c->spec.kind, std::move(codes), dict.take()));
    }
    out.table = ColumnTable(name, std::move(columns), key_name);
    return out;
}

Column dictionary_column(const RawColumn& c) {
    DictionaryBuilder dict;
    std::vector<std::uint32_t> codes;
    codes.reserve(c.text.size());
    for (const auto& v : c.text) {
        codes.push_back(v.empty() ? kMissingCode : dict.intern(v));
    }
    return Column::dictionary(c.spec.canonical_name, c.spec.kind, std::move(codes), dict.take());
}

} // namespace

StarSchema build_star_schema(const RawDataset& raw, const FeeTable& fees) {
    for (const auto& s : superstore_columns()) {
        if (s.required) {
            raw.column(s.canonical_name);
        }
    }

    auto product = build_dimension(raw, "Product", "ProductKey",
                                   {"ProductID", "Category", "SubCategory", "ProductName"});
    auto customer =
        build_dimension(raw, "Customer", "CustomerKey", {"CustomerID", "CustomerName", "Segment"});
    auto geography = build_dimension(raw, "Geography", "GeographyKey",
                                     {"City", "Country", "Market", "Region", "PostalCode"});
    auto ship_mode = build_dimension(raw, "ShipMode", "ShipModeKey", {"ShipMode"});

    // Date dimension over order dates.
    const auto& order_dates = raw.column("OrderDate").days;
    std::map<DayNumber, std::uint32_t> date_index;
    std::vector<DayNumber> date_values;
    std::vector<double> date_fact_keys;
    date_fact_keys.reserve(raw.row_count);
    for (auto d : order_dates) {
        auto [it, inserted] = date_index.emplace(d, static_cast<std::uint32_t>(date_values.size()));
        if (inserted) {
            date_values.push_back(d);
        }
        date_fact_keys.push_back(it->second);
    }
    std::vector<double> date_keys, years, quarters, months;
    for (std::size_t i = 0; i < date_values.size(); ++i) {
        auto c = to_civil(date_values[i]);
        date_keys.push_back(static_cast<double>(i));
        years.push_back(c.year);
        quarters.push_back((c.month - 1) / 3 + 1);
        months.push_back(c.month);
    }
    std::vector<Column> date_columns;
    date_columns.push_back(Column::numeric("DateKey", ColumnKind::Integer, std::move(date_keys)));
    date_columns.push_back(Column::dates("Date", date_values));
    date_columns.push_back(Column::numeric("Year", ColumnKind::Integer, std::move(years)));
    date_columns.push_back(Column::numeric("Quarter", ColumnKind::Integer, std::move(quarters)));
    date_columns.push_back(Column::numeric("Month", ColumnKind::Integer, std::move(months)));
    ColumnTable date_table("Date", std::move(date_columns), "DateKey");

    SchemaMetadata meta;
    meta.source_path = raw.source_path;
    meta.raw_rows = raw.row_count;
    meta.rejected_rows = raw.rejected.size();
    meta.encoding_fallbacks = raw.encoding_fallbacks;
    if (auto it = raw.date_formats.find("OrderDate"); it != raw.date_formats.end()) {
        meta.date_format = to_string(it->second);
    }

    // Shipping payment: explicit column, or synthesized from the fee table.
    std::vector<double> payment;
    if (const auto* p = raw.find("ShippingPayment")) {
        payment = p->numbers;
        for (auto& v : payment) {
            if (std::isnan(v)) {
                v = 0.0;
            }
        }
        meta.shipping_payment_source = "column";
    } else {
        const auto& modes = raw.column("ShipMode").text;
        const auto& quantity = raw.column("Quantity").numbers;
        payment.reserve(raw.row_count);
        for (std::size_t r = 0; r < raw.row_count; ++r) {
            auto it = fees.by_mode.find(modes[r]);
            if (it == fees.by_mode.end()) {
                throw ConfigError("ship mode '" + modes[r] + "' missing from fee table");
            }
            payment.push_back(it->second.flat_fee + it->second.per_unit_fee * quantity[r]);
        }
        meta.shipping_payment_source = "synthesized";
        meta.fee_table_digest = fees.digest();
    }

    std::vector<Column> fact;
    fact.push_back(dictionary_column(raw.column("OrderID")));
    fact.push_back(Column::dates("OrderDate", raw.column("OrderDate").days));
    fact.push_back(Column::dates("ShipDate", raw.column("ShipDate").days));
    if (const auto* p = raw.find("OrderPriority")) {
        fact.push_back(dictionary_column(*p));
    }
    for (const char* name : {"Sales", "Quantity", "Discount", "Profit", "ShippingCost"}) {
        const auto& c = raw.column(name);
        fact.push_back(Column::numeric(name, c.spec.kind, c.numbers));
    }
    fact.push_back(Column::numeric("ShippingPayment", ColumnKind::Money, std::move(payment)));
    fact.push_back(Column::numeric("ProductKey", ColumnKind::Integer, std::move(product.fact_keys)));
    fact.push_back(Column::numeric("CustomerKey", ColumnKind::Integer, std::move(customer.fact_keys)));
    fact.push_back(Column::numeric("GeographyKey", ColumnKind::Integer, std::move(geography.fact_keys)));
    fact.push_back(Column::numeric("DateKey", ColumnKind::Integer, std::move(date_fact_keys)));
    fact.push_back(Column::numeric("ShipModeKey", ColumnKind::Integer, std::move(ship_mode.fact_keys)));

    std::vector<ColumnTable> dims;
    dims.push_back(std::move(product.table));
    dims.push_back(std::move(customer.table));
    dims.push_back(std::move(geography.table));
    dims.push_back(std::move(date_table));
    dims.push_back(std::move(ship_mode.table));

    std::vector<Relationship> rels = {
        {"ProductKey", "Product", "ProductKey"},
        {"CustomerKey", "Customer", "CustomerKey"},
        {"GeographyKey", "Geography", "GeographyKey"},
        {"DateKey", "Date", "DateKey"},
        {"ShipModeKey", "ShipMode", "ShipModeKey"},
    };
    return StarSchema(ColumnTable(std::string(kFactTable), std::move(fact)), std::move(dims),
                      std::move(rels), std::move(meta));
}

} // namespace storeboard
