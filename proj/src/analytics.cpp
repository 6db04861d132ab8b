#include "storeboard/analytics.hpp"

#include "storeboard/error.hpp"
#include "storeboard/snapshot.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace storeboard {

namespace {

const ColumnRef kCategory{"Product", "Category"};
const ColumnRef kSubCategory{"Product", "SubCategory"};
const ColumnRef kMarket{"Geography", "Market"};
const ColumnRef kShipMode{"ShipMode", "ShipMode"};
const ColumnRef kCustomerId{"Customer", "CustomerID"};
const ColumnRef kDiscount{"Fact", "Discount"};

std::string key_text(const Scalar& s) { return scalar_to_string(s); }

double cell(const ResultRow& row, std::size_t i) { return row.values[i].value_or(0.0); }

double cell(const std::vector<std::optional<double>>& values, std::size_t i) {
    return values[i].value_or(0.0);
}

double distinct_count(const StarSchema& schema, const MeasureCatalog& catalog, std::string_view column,
                      const FilterContext& filters = {}) {
    Evaluator ev(schema, catalog);
    try {
        return ev.evaluate(parse(fmt::format("DISTINCTCOUNT({})", column)), filters);
    } catch (const EmptyAggregation&) {
        return 0;
    }
}

} // namespace

CategoryMargins category_margins(const StarSchema& schema, const MeasureCatalog& catalog) {
    GroupQuery q;
    q.group_by = {kCategory};
    q.measures = {"Total Sales", "Total Profit", "Profit Margin %"};
    auto r = run(schema, catalog, q);
    CategoryMargins out;
    for (const auto& row : r.rows) {
        out.categories.push_back({key_text(row.keys[0]), cell(row, 0), cell(row, 1), cell(row, 2)});
    }
    out.overall_margin = cell(r.total, 2);
    return out;
}

std::vector<MarketRow> market_matrix(const StarSchema& schema, const MeasureCatalog& catalog) {
    GroupQuery q;
    q.group_by = {kMarket};
    q.measures = {"Total Sales", "Total Profit", "Profit Margin %", "Total Orders"};
    auto r = run(schema, catalog, q);
    std::vector<MarketRow> out;
    for (const auto& row : r.rows) {
        out.push_back({key_text(row.keys[0]), cell(row, 0), cell(row, 1), cell(row, 2), cell(row, 3)});
    }
    return out;
}

DiscountThreshold discount_threshold(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const FilterContext& filters) {
    GroupQuery q;
    q.measures = {"Total Sales", "Avg Profit per Order"};
    q.filters = filters;
    q.bin = BinSpec{kDiscount, BinSpec::Mode::DistinctValues, 0, 0};
    auto r = run_binned(schema, catalog, q);
    if (r.rows.size() < 2) {
        throw NoDiscountVariation();
    }
    DiscountThreshold out;
    bool profitable_so_far = true;
    for (const auto& row : r.rows) {
        DiscountPoint p{std::get<double>(row.keys[0]), cell(row, 0), cell(row, 1)};
        out.series.push_back(p);
        if (profitable_so_far && p.avg_profit_per_order >= 0) {
            out.threshold = p.discount;
        } else {
            profitable_so_far = false;
        }
    }
    return out;
}

ShippingSubsidy shipping_subsidy(const StarSchema& schema, const MeasureCatalog& catalog) {
    GroupQuery q;
    q.group_by = {kShipMode};
    q.measures = {"Shipping Subsidy", "Total Orders"};
    auto r = run(schema, catalog, q);
    ShippingSubsidy out;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& row : r.rows) {
        ShipModeSubsidy m{key_text(row.keys[0]), cell(row, 0), cell(row, 1), 0};
        m.per_shipment = m.shipments > 0 ? m.subsidy / m.shipments : 0;
        if (m.subsidy > 0) {
            ++out.modes_at_loss;
        }
        if (m.per_shipment > worst) {
            worst = m.per_shipment;
            out.worst_mode = m.ship_mode;
        }
        out.modes.push_back(m);
    }
    out.total = cell(r.total, 0);
    return out;
}

SubCategoryLosses subcategory_losses(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const std::string& category) {
    const auto& cat_col = *schema.bind(kCategory).column;
    if (!cat_col.find_code(category)) {
        throw InvalidQuery("unknown category: " + category);
    }
    FilterContext in_cat;
    in_cat.add(ColumnPredicate::in(kCategory, {category}));

    GroupQuery q;
    q.group_by = {kSubCategory};
    q.measures = {"Total Profit"};
    q.filters = in_cat;
    auto r = run(schema, catalog, q);

    double total_loss = 0;
    for (const auto& row : r.rows) {
        total_loss += std::min(0.0, cell(row, 0));
    }
    double skus = distinct_count(schema, catalog, "Product[ProductID]", in_cat);

    SubCategoryLosses out;
    out.category = category;
    out.has_losses = total_loss < 0;
    for (const auto& row : r.rows) {
        SubCategoryLoss s;
        s.sub_category = key_text(row.keys[0]);
        s.net_profit = cell(row, 0);
        if (out.has_losses) {
            s.loss_share = std::min(0.0, s.net_profit) / total_loss;
        }
        auto f = in_cat;
        f.add(ColumnPredicate::in(kSubCategory, {s.sub_category}));
        s.sku_share = skus > 0 ? distinct_count(schema, catalog, "Product[ProductID]", f) / skus : 0;
        out.sub_categories.push_back(s);
    }
    return out;
}

SegmentationRule SegmentationRule::super_loyal(std::size_t threshold) {
    return {{{"Super Loyal", threshold}, {"Other", 0}}};
}

namespace {

struct CustomerStat {
    double orders;
    double profit;
};

std::vector<CustomerStat> customer_stats(const StarSchema& schema, const MeasureCatalog& catalog,
                                         double& total_profit) {
    GroupQuery q;
    q.group_by = {kCustomerId};
    q.measures = {"Total Orders", "Total Profit"};
    auto r = run(schema, catalog, q);
    std::vector<CustomerStat> out;
    for (const auto& row : r.rows) {
        out.push_back({cell(row, 0), cell(row, 1)});
    }
    total_profit = cell(r.total, 1);
    return out;
}

LoyaltyConcentration segment(const std::vector<CustomerStat>& stats, double total_profit,
                             const SegmentationRule& rule) {
    if (rule.segments.empty()) {
        throw ConfigError("segmentation rule has no segments");
    }
    std::set<std::string> names;
    for (const auto& s : rule.segments) {
        if (!names.insert(s.name).second) {
            throw ConfigError("duplicate segment name: " + s.name);
        }
    }
    auto order = rule.segments;
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.min_orders > b.min_orders; });
    if (order.back().min_orders > 1) {
        throw ConfigError("no segment admits customers with a single order");
    }

    LoyaltyConcentration out;
    for (const auto& s : order) {
        out.segments.push_back({s.name, 0, 0, 0, 0});
    }
    for (const auto& c : stats) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (c.orders >= static_cast<double>(order[i].min_orders)) {
                ++out.segments[i].customers;
                out.segments[i].profit += c.profit;
                break;
            }
        }
    }
    for (auto& s : out.segments) {
        s.customer_share = stats.empty() ? 0 : static_cast<double>(s.customers) / static_cast<double>(stats.size());
        s.profit_share = total_profit != 0 ? s.profit / total_profit : 0;
        if (s.customers == 0) {
            out.empty_segments.push_back(s.name);
        }
    }
    return out;
}

} // namespace

LoyaltyConcentration loyalty_concentration(const StarSchema& schema, const MeasureCatalog& catalog,
                                           const SegmentationRule& rule) {
    double total_profit = 0;
    auto stats = customer_stats(schema, catalog, total_profit);
    return segment(stats, total_profit, rule);
}

std::vector<std::size_t> calibrate_loyalty(const StarSchema& schema, const MeasureCatalog& catalog,
                                           double customer_share, double profit_share, double tolerance) {
    double total_profit = 0;
    auto stats = customer_stats(schema, catalog, total_profit);
    double max_orders = 0;
    for (const auto& c : stats) {
        max_orders = std::max(max_orders, c.orders);
    }
    std::vector<std::size_t> out;
    for (std::size_t t = 2; static_cast<double>(t) <= max_orders; ++t) {
        auto seg = segment(stats, total_profit, SegmentationRule::super_loyal(t));
        const auto& top = seg.segments.front();
        if (std::abs(top.customer_share - customer_share) <= tolerance &&
            std::abs(top.profit_share - profit_share) <= tolerance) {
            out.push_back(t);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

const char* to_string(FindingStatus s) {
    switch (s) {
    case FindingStatus::Match:
        return "match";
    case FindingStatus::Mismatch:
        return "mismatch";
    case FindingStatus::NotComparable:
        return "not-comparable";
    }
    return "?";
}

const Finding* FindingsReport::find(std::string_view id) const {
    for (const auto& f : findings) {
        if (f.id == id) {
            return &f;
        }
    }
    return nullptr;
}

std::size_t FindingsReport::count(FindingStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [&](const Finding& f) { return f.status == s; }));
}

ReportConfig ReportConfig::reference_defaults() {
    ReportConfig c;
    c.fee_table_digest = FeeTable::calibrated_default().digest();
    auto& e = c.expectations;
    e["kpi.total_sales"] = {12.64e6, 0.005 * 12.64e6};
    e["kpi.orders"] = {25035, 0};
    e["kpi.customers"] = {1590, 0};
    e["kpi.skus"] = {10292, 0};
    e["kpi.markets"] = {7, 0};
    e["kpi.categories"] = {3, 0};
    e["margin.overall"] = {0.116, 0.003};
    e["margin.furniture"] = {0.0694, 0.002};
    e["margin.office_supplies"] = {0.1317, 0.002};
    e["margin.technology"] = {0.1399, 0.002};
    e["market.apac.sales"] = {3.59e6, 0.01 * 3.59e6};
    e["market.apac.margin"] = {0.125, 0.003};
    e["market.emea.sales"] = {2.94e6, 0.01 * 2.94e6};
    e["market.emea.margin"] = {0.068, 0.003};
    // 12.5% / 6.8% - 1; the band covers the rounding of both margins.
    e["market.apac_margin_advantage"] = {0.84, 0.15};
    e["discount.threshold"] = {0.20, 1e-9};
    e["discount.profitable_levels_above_threshold"] = {0, 0};
    e["shipping.total_subsidy"] = {1.35e6, 0.01 * 1.35e6};
    e["shipping.first_class_subsidy"] = {0.47e6, 0.005e6};
    e["shipping.worst_mode_is_first_class"] = {1, 0};
    e["shipping.modes_at_loss"] = {4, 0};
    e["subcategory.tables.loss_share"] = {0.44, 0.05};
    e["subcategory.tables.sku_share"] = {0.23, 0.03};
    e["loyalty.super_loyal.customer_share"] = {0.55, 0.05};
    e["loyalty.super_loyal.profit_share"] = {0.92, 0.05};
    e["loyalty.super_loyal.customers"] = {879, 80};
    return c;
}

ReportConfig ReportConfig::from_json_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("analytics config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("analytics config must be a JSON object");
    }
    auto c = reference_defaults();
    try {
        if (doc.contains("official_fact_rows")) {
            c.official_fact_rows = doc["official_fact_rows"].get<std::uint64_t>();
        }
        if (doc.contains("loyalty_threshold")) {
            c.loyalty_threshold = doc["loyalty_threshold"].get<std::size_t>();
        }
        if (doc.contains("expectations")) {
            for (const auto& [id, e] : doc["expectations"].items()) {
                c.expectations[id] = {e.at("expected").get<double>(), e.at("tolerance").get<double>()};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("analytics config: ") + e.what());
    }
    return c;
}

ReportConfig ReportConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound(path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

namespace {

class ReportBuilder {
  public:
    ReportBuilder(const ReportConfig& cfg, bool official) : cfg_(cfg), official_(official) {}

    Finding& add(std::string id, std::string description, std::optional<double> value, std::string unit,
                 bool comparable = true, std::string note = {}) {
        Finding f;
        f.id = std::move(id);
        f.description = std::move(description);
        f.value = value;
        f.unit = std::move(unit);
        f.note = std::move(note);
        if (auto it = cfg_.expectations.find(f.id); it != cfg_.expectations.end()) {
            f.expected = it->second.expected;
            f.tolerance = it->second.tolerance;
            if (!official_) {
                f.status = FindingStatus::NotComparable;
                if (f.note.empty()) {
                    f.note = "dataset is not the official variant";
                }
            } else if (!comparable) {
                f.status = FindingStatus::NotComparable;
            } else if (!value || !std::isfinite(*value)) {
                f.status = FindingStatus::Mismatch;
            } else {
                f.status = std::abs(*value - *f.expected) <= *f.tolerance ? FindingStatus::Match
                                                                         : FindingStatus::Mismatch;
            }
        }
        findings_.push_back(std::move(f));
        return findings_.back();
    }

    std::vector<Finding> take() { return std::move(findings_); }

  private:
    const ReportConfig& cfg_;
    bool official_;
    std::vector<Finding> findings_;
};

std::string slug(std::string_view name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') {
        out.pop_back();
    }
    return out;
}

std::string utc_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Runs fn, returning nullopt (with the error text in note) on engine errors.
template <typename Fn>
auto attempt(Fn&& fn, std::string& note) -> std::optional<decltype(fn())> {
    try {
        return fn();
    } catch (const Error& e) {
        note = e.code() + ": " + e.what();
        return std::nullopt;
    }
}

} // namespace

FindingsReport build_findings_report(const StarSchema& schema, const MeasureCatalog& catalog,
                                     const ReportConfig& cfg) {
    FindingsReport report;
    const auto& meta = schema.metadata();
    report.fingerprint.source = meta.source_path;
    report.fingerprint.fact_rows = schema.row_count();
    report.fingerprint.rejected_rows = meta.rejected_rows;
    report.fingerprint.checksum = fmt::format("{:016x}", fnv1a64(serialize_snapshot(schema)));
    report.generated_at = utc_now();

    bool official = schema.row_count() == cfg.official_fact_rows && meta.rejected_rows == 0;
    ReportBuilder b(cfg, official);
    std::string note;

    // Headline KPIs.
    {
        GroupQuery q;
        q.measures = {"Total Sales", "Total Orders"};
        auto r = attempt([&] { return run(schema, catalog, q); }, note);
        b.add("kpi.total_sales", "Total sales", r ? r->total[0] : std::nullopt, "USD", true, note);
        b.add("kpi.orders", "Distinct orders", r ? r->total[1] : std::nullopt, "orders", true, note);
        b.add("kpi.customers", "Distinct customers",
              distinct_count(schema, catalog, "Customer[CustomerID]"), "customers");
        b.add("kpi.skus", "Distinct product ids", distinct_count(schema, catalog, "Product[ProductID]"), "SKUs");
        b.add("kpi.markets", "Markets", distinct_count(schema, catalog, "Geography[Market]"), "markets");
        b.add("kpi.categories", "Product categories", distinct_count(schema, catalog, "Product[Category]"),
              "categories");
    }

    // Category margins.
    note.clear();
    if (auto cm = attempt([&] { return category_margins(schema, catalog); }, note)) {
        b.add("margin.overall", "Overall profit margin", cm->overall_margin, "ratio");
        std::set<std::string> expected_cats{"Furniture", "Office Supplies", "Technology"};
        for (const auto& c : cm->categories) {
            expected_cats.erase(c.category);
            b.add("margin." + slug(c.category), c.category + " profit margin", c.margin, "ratio");
        }
        for (const auto& missing : expected_cats) {
            b.add("margin." + slug(missing), missing + " profit margin", std::nullopt, "ratio", true,
                  "category absent");
        }
    } else {
        b.add("margin.overall", "Overall profit margin", std::nullopt, "ratio", true, note);
    }

    // Markets.
    note.clear();
    auto markets = attempt([&] { return market_matrix(schema, catalog); }, note);
    auto market = [&](std::string_view name) -> const MarketRow* {
        if (!markets) {
            return nullptr;
        }
        for (const auto& m : *markets) {
            if (m.market == name) {
                return &m;
            }
        }
        return nullptr;
    };
    for (const char* name : {"APAC", "EMEA"}) {
        const auto* m = market(name);
        auto id = slug(name);
        std::string why = m ? "" : "market absent";
        b.add("market." + id + ".sales", std::string(name) + " sales",
              m ? std::optional(m->sales) : std::nullopt, "USD", true, why);
        b.add("market." + id + ".margin", std::string(name) + " profit margin",
              m ? std::optional(m->margin) : std::nullopt, "ratio", true, why);
    }
    {
        const auto* apac = market("APAC");
        const auto* emea = market("EMEA");
        std::optional<double> adv;
        if (apac && emea && emea->margin != 0) {
            adv = apac->margin / emea->margin - 1;
        }
        b.add("market.apac_margin_advantage", "APAC margin relative to EMEA, minus one", adv, "ratio");
    }

    // Discount threshold.
    note.clear();
    if (auto dt = attempt([&] { return discount_threshold(schema, catalog); }, note)) {
        b.add("discount.threshold", "Largest discount level with non-negative profit per order",
              dt->threshold, "fraction", true,
              dt->threshold ? "" : "the lowest discount level already loses money");
        double above = 0;
        for (const auto& p : dt->series) {
            if (dt->threshold && p.discount > *dt->threshold && p.avg_profit_per_order >= 0) {
                ++above;
            }
        }
        b.add("discount.profitable_levels_above_threshold",
              "Discount levels above the threshold that still profit per order", above, "levels");
    } else {
        b.add("discount.threshold", "Largest discount level with non-negative profit per order", std::nullopt,
              "fraction", true, note);
    }
    // Per-category thresholds are informational.
    if (auto cm = attempt([&] { return category_margins(schema, catalog); }, note)) {
        for (const auto& c : cm->categories) {
            FilterContext f;
            f.add(ColumnPredicate::in(kCategory, {c.category}));
            std::string why;
            auto dt = attempt([&] { return discount_threshold(schema, catalog, f); }, why);
            b.add("discount.threshold." + slug(c.category), c.category + " discount threshold",
                  dt ? dt->threshold : std::nullopt, "fraction", true, why);
        }
    }

    // Shipping subsidy.
    note.clear();
    bool fees_comparable =
        meta.shipping_payment_source == "column" || meta.fee_table_digest == cfg.fee_table_digest;
    std::string fee_note = fees_comparable ? "" : "fee table is not the calibrated default";
    if (auto ss = attempt([&] { return shipping_subsidy(schema, catalog); }, note)) {
        const ShipModeSubsidy* first = nullptr;
        for (const auto& m : ss->modes) {
            if (m.ship_mode == "First Class") {
                first = &m;
            }
        }
        b.add("shipping.total_subsidy", "Unrecovered shipping cost, all modes", ss->total, "USD",
              fees_comparable, fee_note);
        b.add("shipping.first_class_subsidy", "Unrecovered shipping cost, First Class",
              first ? std::optional(first->subsidy) : std::nullopt, "USD", fees_comparable, fee_note);
        b.add("shipping.worst_mode_is_first_class",
              "Highest per-shipment subsidy is First Class (worst: " + ss->worst_mode + ")",
              ss->worst_mode == "First Class" ? 1.0 : 0.0, "bool", fees_comparable, fee_note);
        b.add("shipping.modes_at_loss", "Ship modes with unrecovered cost",
              static_cast<double>(ss->modes_at_loss), "modes", fees_comparable, fee_note);
    } else {
        b.add("shipping.total_subsidy", "Unrecovered shipping cost, all modes", std::nullopt, "USD", true, note);
    }

    // Furniture sub-category losses.
    note.clear();
    if (auto sl = attempt([&] { return subcategory_losses(schema, catalog, "Furniture"); }, note)) {
        const SubCategoryLoss* tables = nullptr;
        for (const auto& s : sl->sub_categories) {
            if (s.sub_category == "Tables") {
                tables = &s;
            }
        }
        std::string why = !sl->has_losses ? "no Furniture sub-category loses money"
                          : !tables       ? "Tables absent"
                                          : "";
        b.add("subcategory.tables.loss_share", "Tables share of Furniture losses",
              tables ? tables->loss_share : std::nullopt, "ratio", sl->has_losses, why);
        b.add("subcategory.tables.sku_share", "Tables share of Furniture SKUs",
              tables ? std::optional(tables->sku_share) : std::nullopt, "ratio", true, tables ? "" : why);
    } else {
        b.add("subcategory.tables.loss_share", "Tables share of Furniture losses", std::nullopt, "ratio", true,
              note);
        b.add("subcategory.tables.sku_share", "Tables share of Furniture SKUs", std::nullopt, "ratio", true, note);
    }

    // Loyalty concentration under the committed threshold. When it does not
    // reproduce the reference shares, look for thresholds that would; if none
    // exists the segmentation cannot be recovered and the findings are
    // not comparable.
    note.clear();
    if (auto lc = attempt(
            [&] {
                return loyalty_concentration(schema, catalog, SegmentationRule::super_loyal(cfg.loyalty_threshold));
            },
            note)) {
        const auto& top = lc->segments.front();
        bool comparable = true;
        std::string why = fmt::format("Super Loyal = at least {} orders", cfg.loyalty_threshold);
        if (official) {
            auto ec = cfg.expectations.find("loyalty.super_loyal.customer_share");
            auto ep = cfg.expectations.find("loyalty.super_loyal.profit_share");
            if (ec != cfg.expectations.end() && ep != cfg.expectations.end()) {
                bool reproduces = std::abs(top.customer_share - ec->second.expected) <= ec->second.tolerance &&
                                  std::abs(top.profit_share - ep->second.expected) <= ep->second.tolerance;
                if (!reproduces) {
                    auto ts = calibrate_loyalty(schema, catalog, ec->second.expected, ep->second.expected,
                                                std::max(ec->second.tolerance, ep->second.tolerance));
                    if (ts.empty()) {
                        comparable = false;
                        why += "; no threshold reproduces both shares";
                    } else {
                        why += fmt::format("; thresholds reproducing both shares: {}", fmt::join(ts, ", "));
                    }
                }
            }
        }
        if (!lc->empty_segments.empty()) {
            why += fmt::format("; empty segments: {}", fmt::join(lc->empty_segments, ", "));
        }
        b.add("loyalty.super_loyal.customer_share", "Super Loyal share of customers", top.customer_share, "ratio",
              comparable, why);
        b.add("loyalty.super_loyal.profit_share", "Super Loyal share of profit", top.profit_share, "ratio",
              comparable, why);
        b.add("loyalty.super_loyal.customers", "Super Loyal customers", static_cast<double>(top.customers),
              "customers", comparable, why);
    } else {
        b.add("loyalty.super_loyal.customer_share", "Super Loyal share of customers", std::nullopt, "ratio", true,
              note);
    }

    report.findings = b.take();
    return report;
}

std::string render_report_text(const FindingsReport& report) {
    std::string out;
    const auto& fp = report.fingerprint;
    out += fmt::format("dataset  {}\nrows     {} ({} rejected)\nchecksum {}\ngenerated {}\n\n", fp.source,
                       fp.fact_rows, fp.rejected_rows, fp.checksum, report.generated_at);
    for (const auto& f : report.findings) {
        std::string value = f.value ? fmt::format("{:.6g}", *f.value) : "n/a";
        std::string expected = f.expected ? fmt::format("{:.6g} +/- {:.3g}", *f.expected, *f.tolerance) : "";
        out += fmt::format("{:<16} {:<46} {:>14} {:<10} {}", to_string(f.status), f.id, value, f.unit, expected);
        if (!f.note.empty()) {
            out += "  # " + f.note;
        }
        out += '\n';
    }
    out += fmt::format("\n{} match, {} mismatch, {} not comparable\n", report.count(FindingStatus::Match),
                       report.count(FindingStatus::Mismatch), report.count(FindingStatus::NotComparable));
    return out;
}

} // namespace storeboard
