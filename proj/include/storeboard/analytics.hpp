#pragma once

#include "storeboard/ingest.hpp"
#include "storeboard/measure.hpp"
#include "storeboard/query.hpp"
#include "storeboard/star_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace storeboard {

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct CategoryMargin {
    std::string category;
    double sales = 0;
    double profit = 0;
    double margin = 0;
};

struct CategoryMargins {
    std::vector<CategoryMargin> categories; // ascending by name
    double overall_margin = 0;
};

CategoryMargins category_margins(const StarSchema& schema, const MeasureCatalog& catalog);

struct MarketRow {
    std::string market;
    double sales = 0;
    double profit = 0;
    double margin = 0;
    double order_count = 0;
};

std::vector<MarketRow> market_matrix(const StarSchema& schema, const MeasureCatalog& catalog);

struct DiscountPoint {
    double discount = 0;
    double total_sales = 0;
    double avg_profit_per_order = 0;
};

struct DiscountThreshold {
    std::vector<DiscountPoint> series; // ascending by discount
    // Largest level d with avg profit per order >= 0 at every level <= d.
    // Empty when the lowest level already loses money.
    std::optional<double> threshold;
};

// Throws NoDiscountVariation. `filters` restricts the rows (e.g. one category).
DiscountThreshold discount_threshold(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const FilterContext& filters = {});

struct ShipModeSubsidy {
    std::string ship_mode;
    double subsidy = 0;   // positive = unrecovered cost
    double shipments = 0; // distinct orders
    double per_shipment = 0;
};

struct ShippingSubsidy {
    std::vector<ShipModeSubsidy> modes; // ascending by name
    double total = 0;
    std::string worst_mode; // highest per-shipment subsidy
    std::size_t modes_at_loss = 0;
};

ShippingSubsidy shipping_subsidy(const StarSchema& schema, const MeasureCatalog& catalog);

struct SubCategoryLoss {
    std::string sub_category;
    double net_profit = 0;
    std::optional<double> loss_share; // empty when no sub-category loses money
    double sku_share = 0;
};

struct SubCategoryLosses {
    std::string category;
    std::vector<SubCategoryLoss> sub_categories; // ascending by name
    bool has_losses = false;
};

// Throws InvalidQuery when the category is absent.
SubCategoryLosses subcategory_losses(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const std::string& category);

// Customers are assigned to the first segment (highest min_orders first)
// whose threshold their distinct order count reaches.
struct SegmentationRule {
    struct Segment {
        std::string name;
        std::size_t min_orders = 0;
    };
    std::vector<Segment> segments;

    // Super Loyal (>= threshold orders) and Other.
    static SegmentationRule super_loyal(std::size_t threshold);
};

struct SegmentShare {
    std::string name;
    std::size_t customers = 0;
    double profit = 0;
    double customer_share = 0;
    double profit_share = 0;
};

struct LoyaltyConcentration {
    std::vector<SegmentShare> segments; // rule order, highest threshold first
    std::vector<std::string> empty_segments;
};

// Throws ConfigError for an invalid rule (no segments, duplicate names, or
// no segment admitting customers with one order).
LoyaltyConcentration loyalty_concentration(const StarSchema& schema, const MeasureCatalog& catalog,
                                           const SegmentationRule& rule);

// Super Loyal thresholds T whose shares land within tolerance of the targets.
std::vector<std::size_t> calibrate_loyalty(const StarSchema& schema, const MeasureCatalog& catalog,
                                           double customer_share, double profit_share, double tolerance);

// ---------------------------------------------------------------------------
// Findings report
// ---------------------------------------------------------------------------

enum class FindingStatus { Match, Mismatch, NotComparable };
const char* to_string(FindingStatus s);

struct Finding {
    std::string id;
    std::string description;
    std::optional<double> value;
    std::string unit;
    std::optional<double> expected;
    std::optional<double> tolerance;
    FindingStatus status = FindingStatus::NotComparable;
    std::string note;
};

struct DatasetFingerprint {
    std::string source;
    std::uint64_t fact_rows = 0;
    std::uint64_t rejected_rows = 0;
    std::string checksum; // FNV-1a 64 of the snapshot bytes, hex
};

struct FindingsReport {
    DatasetFingerprint fingerprint;
    std::vector<Finding> findings;
    std::string generated_at; // ISO 8601 UTC

    const Finding* find(std::string_view id) const;
    std::size_t count(FindingStatus s) const;
};

struct Expectation {
    double expected = 0;
    double tolerance = 0;
};

struct ReportConfig {
    // Reference values are compared only on the official file: this many fact
    // rows and nothing rejected at ingest.
    std::uint64_t official_fact_rows = 51290;
    std::size_t loyalty_threshold = 16;
    std::map<std::string, Expectation> expectations; // by finding id
    std::string fee_table_digest;                    // calibrated default

    // Reference values, the committed loyalty threshold and the default fee digest.
    static ReportConfig reference_defaults();
    // Overlays a JSON file ({"official_fact_rows", "loyalty_threshold",
    // "expectations": {id: {"expected", "tolerance"}}}) on the defaults.
    // Throws FileNotFound, ConfigError.
    static ReportConfig load(const std::filesystem::path& path);
    static ReportConfig from_json_text(std::string_view text);
};

// Runs every diagnostic and compares against cfg. Never throws for data
// reasons; failing diagnostics yield findings without a value.
FindingsReport build_findings_report(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const ReportConfig& cfg = ReportConfig::reference_defaults());

std::string render_report_text(const FindingsReport& report);

} // namespace storeboard
