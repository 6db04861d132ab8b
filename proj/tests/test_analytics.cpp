#include "doctest.h"

#include "fixture.hpp"

#include "storeboard/analytics.hpp"
#include "storeboard/error.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace storeboard;
using fixture::Line;

namespace {

Line line(std::string order, std::string category, std::string sub, double sales, double profit) {
    Line l;
    l.order_id = std::move(order);
    l.category = std::move(category);
    l.sub_category = std::move(sub);
    l.product_id = "P-" + l.sub_category;
    l.sales = sales;
    l.profit = profit;
    return l;
}

bool close(double a, double b, double rel = 1e-9) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Oracle: per discount level, summed profit over distinct orders.
std::map<double, double> oracle_profit_per_order(const std::vector<Line>& lines) {
    std::map<double, double> profit;
    std::map<double, std::set<std::string>> orders;
    for (const auto& l : lines) {
        profit[l.discount] += l.profit;
        orders[l.discount].insert(l.order_id);
    }
    std::map<double, double> out;
    for (const auto& [d, p] : profit) {
        out[d] = p / static_cast<double>(orders[d].size());
    }
    return out;
}

std::optional<double> oracle_threshold(const std::vector<Line>& lines) {
    std::optional<double> t;
    for (const auto& [d, v] : oracle_profit_per_order(lines)) {
        if (v < 0) {
            break;
        }
        t = d;
    }
    return t;
}

ReportConfig baseline_config(const FindingsReport& r, std::uint64_t rows) {
    ReportConfig cfg = ReportConfig::reference_defaults();
    cfg.official_fact_rows = rows;
    cfg.expectations.clear();
    for (const auto& f : r.findings) {
        if (f.value) {
            cfg.expectations[f.id] = {*f.value, 1e-9 * std::max(1.0, std::abs(*f.value))};
        }
    }
    return cfg;
}

} // namespace

TEST_CASE("category margins and market matrix against hand sums") {
    std::vector<Line> lines{
        line("O-1", "Furniture", "Tables", 200, -40),   line("O-1", "Furniture", "Chairs", 100, 30),
        line("O-2", "Technology", "Phones", 400, 80),   line("O-3", "Office Supplies", "Paper", 50, 5),
        line("O-4", "Technology", "Copiers", 250, 20),
    };
    lines[2].market = "EMEA";
    lines[2].region = "Africa";
    lines[2].country = "Egypt";
    lines[2].city = "Cairo";
    auto schema = fixture::schema_of(lines);
    auto cat = register_builtin_catalog();

    auto cm = category_margins(schema, cat);
    REQUIRE(cm.categories.size() == 3);
    CHECK(cm.categories[0].category == "Furniture");
    CHECK(cm.categories[0].margin == doctest::Approx(-10.0 / 300));
    CHECK(cm.categories[1].margin == doctest::Approx(5.0 / 50));
    CHECK(cm.categories[2].margin == doctest::Approx(100.0 / 650));
    CHECK(cm.overall_margin == doctest::Approx(95.0 / 1000));

    auto mm = market_matrix(schema, cat);
    REQUIRE(mm.size() == 2);
    CHECK(mm[0].market == "APAC");
    CHECK(mm[0].sales == doctest::Approx(600));
    CHECK(mm[0].order_count == 3);
    CHECK(mm[1].market == "EMEA");
    CHECK(mm[1].margin == doctest::Approx(0.2));
}

TEST_CASE("discount threshold examples") {
    auto cat = register_builtin_catalog();

    SUBCASE("sign flip at 0.3 gives 0.25") {
        std::vector<Line> lines;
        double levels[] = {0.0, 0.1, 0.2, 0.25, 0.3};
        for (int i = 0; i < 5; ++i) {
            auto l = line("O-" + std::to_string(i), "Furniture", "Tables", 100, levels[i] < 0.3 ? 10 : -10);
            l.discount = levels[i];
            lines.push_back(l);
        }
        auto dt = discount_threshold(fixture::schema_of(lines), cat);
        REQUIRE(dt.threshold);
        CHECK(*dt.threshold == 0.25);
        CHECK(dt.series.size() == 5);
    }
    SUBCASE("everything profitable gives the largest level") {
        std::vector<Line> lines;
        for (int i = 0; i < 4; ++i) {
            auto l = line("O-" + std::to_string(i), "Furniture", "Tables", 100, 1);
            l.discount = 0.1 * i;
            lines.push_back(l);
        }
        auto dt = discount_threshold(fixture::schema_of(lines), cat);
        CHECK(*dt.threshold == doctest::Approx(0.3));
    }
    SUBCASE("a loss at the lowest level leaves no threshold") {
        std::vector<Line> lines{line("O-1", "Furniture", "Tables", 100, -1), line("O-2", "Furniture", "Tables", 100, 5)};
        lines[1].discount = 0.2;
        CHECK_FALSE(discount_threshold(fixture::schema_of(lines), cat).threshold);
    }
    SUBCASE("a profitable level after a losing one does not extend the threshold") {
        std::vector<Line> lines;
        double profit[] = {5, -5, 5};
        for (int i = 0; i < 3; ++i) {
            auto l = line("O-" + std::to_string(i), "Furniture", "Tables", 100, profit[i]);
            l.discount = 0.1 * i;
            lines.push_back(l);
        }
        CHECK(*discount_threshold(fixture::schema_of(lines), cat).threshold == 0.0);
    }
    SUBCASE("one level is no variation") {
        std::vector<Line> lines{line("O-1", "Furniture", "Tables", 100, 1), line("O-2", "Furniture", "Tables", 50, 1)};
        CHECK_THROWS_AS(discount_threshold(fixture::schema_of(lines), cat), NoDiscountVariation);
    }
}

TEST_CASE("discount series matches the oracle on random tables") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        auto lines = fixture::random_lines(rng, 20 + trial % 50);
        auto schema = fixture::schema_of(lines);
        auto expected = oracle_profit_per_order(lines);
        if (expected.size() < 2) {
            CHECK_THROWS_AS(discount_threshold(schema, cat), NoDiscountVariation);
            continue;
        }
        auto dt = discount_threshold(schema, cat);
        REQUIRE(dt.series.size() == expected.size());
        std::size_t i = 0;
        for (const auto& [d, v] : expected) {
            CHECK(dt.series[i].discount == d);
            CHECK(close(dt.series[i].avg_profit_per_order, v));
            ++i;
        }
        CHECK(dt.threshold == oracle_threshold(lines));
    }
}

TEST_CASE("threshold is monotone under a uniform profit raise") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 80; ++trial) {
        auto lines = fixture::random_lines(rng, 40);
        auto before = oracle_threshold(lines);
        if (oracle_profit_per_order(lines).size() < 2) {
            continue;
        }
        double raise = std::uniform_real_distribution<double>(0.5, 80)(rng);
        for (auto& l : lines) {
            l.profit += raise;
        }
        auto t0 = discount_threshold(fixture::schema_of(lines), cat).threshold;
        for (auto& l : lines) {
            l.profit -= raise;
        }
        auto t1 = discount_threshold(fixture::schema_of(lines), cat).threshold;
        CHECK(t1 == before);
        if (t1) {
            REQUIRE(t0);
            CHECK(*t0 >= *t1);
        }
    }
}

TEST_CASE("shipping subsidy with explicit payments matches the oracle") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        auto lines = fixture::random_lines(rng, 30 + trial, true);
        std::map<std::string, double> subsidy;
        std::map<std::string, std::set<std::string>> orders;
        double total = 0;
        for (const auto& l : lines) {
            subsidy[l.ship_mode] += l.shipping_cost - *l.shipping_payment;
            orders[l.ship_mode].insert(l.order_id);
            total += l.shipping_cost - *l.shipping_payment;
        }
        auto ss = shipping_subsidy(fixture::schema_of(lines), cat);
        REQUIRE(ss.modes.size() == subsidy.size());
        std::string worst;
        double worst_v = -1e300;
        std::size_t at_loss = 0;
        for (const auto& m : ss.modes) {
            CHECK(close(m.subsidy, subsidy.at(m.ship_mode)));
            CHECK(m.shipments == orders.at(m.ship_mode).size());
            double per = subsidy.at(m.ship_mode) / static_cast<double>(orders.at(m.ship_mode).size());
            if (per > worst_v) {
                worst_v = per;
                worst = m.ship_mode;
            }
            at_loss += subsidy.at(m.ship_mode) > 0 ? 1 : 0;
        }
        CHECK(close(ss.total, total));
        CHECK(ss.worst_mode == worst);
        CHECK(ss.modes_at_loss == at_loss);
    }
}

TEST_CASE("synthesized payments use the fee table") {
    std::vector<Line> lines{line("O-1", "Furniture", "Tables", 100, 1), line("O-2", "Furniture", "Tables", 100, 1)};
    lines[0].ship_mode = "First Class";
    lines[0].quantity = 3;
    lines[0].shipping_cost = 20;
    lines[1].shipping_cost = 4;
    auto fees = FeeTable::calibrated_default();
    fees.by_mode["First Class"] = {2, 1};
    fees.by_mode["Standard Class"] = {1, 0.5};
    auto ss = shipping_subsidy(fixture::schema_of(lines, fees), register_builtin_catalog());
    REQUIRE(ss.modes.size() == 2);
    CHECK(ss.modes[0].subsidy == doctest::Approx(20 - 5));
    CHECK(ss.modes[1].subsidy == doctest::Approx(4 - 1.5));
    CHECK(ss.worst_mode == "First Class");
}

TEST_CASE("sub-category losses") {
    auto cat = register_builtin_catalog();
    SUBCASE("hand fixture") {
        std::vector<Line> lines{
            line("O-1", "Furniture", "Tables", 100, -30), line("O-2", "Furniture", "Tables", 100, -10),
            line("O-3", "Furniture", "Bookcases", 100, -60), line("O-4", "Furniture", "Chairs", 100, 50),
        };
        lines[1].product_id = "P-Tables-2";
        auto sl = subcategory_losses(fixture::schema_of(lines), cat, "Furniture");
        REQUIRE(sl.has_losses);
        REQUIRE(sl.sub_categories.size() == 3);
        CHECK(sl.sub_categories[0].sub_category == "Bookcases");
        CHECK(*sl.sub_categories[0].loss_share == doctest::Approx(0.6));
        CHECK(*sl.sub_categories[1].loss_share == 0.0);
        CHECK(*sl.sub_categories[2].loss_share == doctest::Approx(0.4));
        CHECK(sl.sub_categories[2].sku_share == doctest::Approx(0.5));
    }
    SUBCASE("no losses") {
        std::vector<Line> lines{line("O-1", "Furniture", "Tables", 100, 3)};
        auto sl = subcategory_losses(fixture::schema_of(lines), cat, "Furniture");
        CHECK_FALSE(sl.has_losses);
        CHECK_FALSE(sl.sub_categories[0].loss_share);

        auto cfg = ReportConfig::reference_defaults();
        cfg.official_fact_rows = 1;
        auto r = build_findings_report(fixture::schema_of(lines), cat, cfg);
        CHECK(r.find("subcategory.tables.loss_share")->status == FindingStatus::NotComparable);
    }
    SUBCASE("unknown category") {
        std::vector<Line> lines{line("O-1", "Furniture", "Tables", 100, 3)};
        CHECK_THROWS_AS(subcategory_losses(fixture::schema_of(lines), cat, "Toys"), InvalidQuery);
    }
}

TEST_CASE("loss and SKU shares close to one") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        auto lines = fixture::random_lines(rng, 60);
        auto schema = fixture::schema_of(lines);
        std::set<std::string> cats;
        for (const auto& l : lines) {
            cats.insert(l.category);
        }
        for (const auto& c : cats) {
            auto sl = subcategory_losses(schema, cat, c);
            double loss = 0, sku = 0;
            for (const auto& s : sl.sub_categories) {
                loss += s.loss_share.value_or(0);
                sku += s.sku_share;
                CHECK(s.loss_share.value_or(0) >= 0);
            }
            if (sl.has_losses) {
                CHECK(loss == doctest::Approx(1.0).epsilon(1e-12));
            }
            CHECK(sku == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("loyalty segmentation against the oracle") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        auto lines = fixture::random_lines(rng, 80);
        std::map<std::string, std::set<std::string>> orders;
        std::map<std::string, double> profit;
        double total = 0;
        for (const auto& l : lines) {
            orders[l.customer_id].insert(l.order_id);
            profit[l.customer_id] += l.profit;
            total += l.profit;
        }
        std::size_t t = 1 + trial % 12;
        auto lc = loyalty_concentration(fixture::schema_of(lines), cat, SegmentationRule::super_loyal(t));
        std::size_t loyal = 0;
        double loyal_profit = 0;
        for (const auto& [c, o] : orders) {
            if (o.size() >= t) {
                ++loyal;
                loyal_profit += profit[c];
            }
        }
        REQUIRE(lc.segments.size() == 2);
        CHECK(lc.segments[0].customers == loyal);
        CHECK(close(lc.segments[0].profit, loyal_profit));
        CHECK(lc.segments[0].customer_share + lc.segments[1].customer_share == doctest::Approx(1.0));
        if (total != 0) {
            CHECK(lc.segments[0].profit_share + lc.segments[1].profit_share == doctest::Approx(1.0));
        }
        CHECK((loyal == 0) == (std::count(lc.empty_segments.begin(), lc.empty_segments.end(), "Super Loyal") == 1));
    }
}

TEST_CASE("segmentation rules and calibration") {
    auto cat = register_builtin_catalog();
    std::vector<Line> lines;
    // C-1: 3 orders, profit 90; C-2: 1 order, profit 10.
    for (int i = 0; i < 3; ++i) {
        lines.push_back(line("O-" + std::to_string(i), "Furniture", "Tables", 100, 30));
    }
    lines.push_back(line("O-9", "Furniture", "Tables", 100, 10));
    lines.back().customer_id = "C-2";
    lines.back().customer_name = "Customer Two";
    auto schema = fixture::schema_of(lines);

    SegmentationRule three{{{"Gold", 3}, {"Silver", 2}, {"Rest", 0}}};
    auto lc = loyalty_concentration(schema, cat, three);
    CHECK(lc.segments[0].profit_share == doctest::Approx(0.9));
    CHECK(lc.empty_segments == std::vector<std::string>{"Silver"});

    CHECK_THROWS_AS(loyalty_concentration(schema, cat, SegmentationRule{}), ConfigError);
    CHECK_THROWS_AS(loyalty_concentration(schema, cat, SegmentationRule{{{"A", 3}, {"A", 0}}}), ConfigError);
    CHECK_THROWS_AS(loyalty_concentration(schema, cat, SegmentationRule{{{"A", 3}, {"B", 2}}}), ConfigError);

    CHECK(calibrate_loyalty(schema, cat, 0.5, 0.9, 0.01) == std::vector<std::size_t>{2, 3});
    CHECK(calibrate_loyalty(schema, cat, 0.2, 0.9, 0.01).empty());
}

TEST_CASE("report on a non-official dataset is not comparable") {
    auto cat = register_builtin_catalog();
    std::mt19937_64 rng(3);
    auto lines = fixture::random_lines(rng, 120);
    auto r = build_findings_report(fixture::schema_of(lines), cat);
    CHECK(r.fingerprint.fact_rows == 120);
    CHECK(r.count(FindingStatus::Match) == 0);
    CHECK(r.count(FindingStatus::Mismatch) == 0);
    for (const char* id : {"kpi.total_sales", "margin.overall", "discount.threshold", "shipping.total_subsidy",
                           "subcategory.tables.sku_share", "loyalty.super_loyal.profit_share"}) {
        REQUIRE(r.find(id));
        CHECK(r.find(id)->expected);
    }

    auto empty = build_findings_report(fixture::schema_of(std::vector<Line>{}), cat);
    CHECK(empty.fingerprint.fact_rows == 0);
    CHECK(empty.count(FindingStatus::Match) + empty.count(FindingStatus::Mismatch) == 0);
}

TEST_CASE("report is deterministic apart from its timestamp") {
    auto cat = register_builtin_catalog();
    auto lines = fixture::synthetic_superstore(3000, 11);
    auto schema = fixture::schema_of(lines);
    auto a = build_findings_report(schema, cat);
    auto b = build_findings_report(schema, cat);
    b.generated_at = a.generated_at;
    CHECK(render_report_text(a) == render_report_text(b));
    CHECK(a.fingerprint.checksum.size() == 16);
}

TEST_CASE("perturbing one profit flips exactly the affected findings") {
    auto cat = register_builtin_catalog();
    auto lines = fixture::synthetic_superstore(2500, 21);
    auto base_report = build_findings_report(fixture::schema_of(lines), cat);
    auto cfg = baseline_config(base_report, lines.size());

    auto baseline = build_findings_report(fixture::schema_of(lines), cat, cfg);
    for (const auto& f : baseline.findings) {
        if (f.expected) {
            INFO(f.id);
            CHECK(f.status == FindingStatus::Match);
        }
    }

    auto it = std::find_if(lines.begin(), lines.end(),
                           [](const Line& l) { return l.category == "Furniture" && l.profit > 1; });
    REQUIRE(it != lines.end());
    it->profit = -it->profit;
    auto perturbed = build_findings_report(fixture::schema_of(lines), cat, cfg);

    std::set<std::string> flipped, moved;
    for (std::size_t i = 0; i < perturbed.findings.size(); ++i) {
        const auto& before = baseline.findings[i];
        const auto& after = perturbed.findings[i];
        REQUIRE(before.id == after.id);
        if (!before.expected) {
            continue;
        }
        if (after.status != FindingStatus::Match) {
            flipped.insert(after.id);
        }
        if (!close(*before.value, after.value.value_or(NAN), 1e-9)) {
            moved.insert(after.id);
        }
    }
    CHECK(flipped == moved);
    CHECK(flipped.count("margin.overall") == 1);
    CHECK(flipped.count("margin.furniture") == 1);
    for (const char* id : {"kpi.total_sales", "kpi.orders", "kpi.customers", "kpi.skus", "margin.technology",
                           "margin.office_supplies", "shipping.total_subsidy", "loyalty.super_loyal.customers"}) {
        CHECK(flipped.count(id) == 0);
    }
}

TEST_CASE("report config overlays JSON on the reference defaults") {
    auto cfg = ReportConfig::from_json_text(
        R"({"loyalty_threshold": 12, "expectations": {"margin.overall": {"expected": 0.2, "tolerance": 0.01}}})");
    CHECK(cfg.loyalty_threshold == 12);
    CHECK(cfg.official_fact_rows == 51290);
    CHECK(cfg.expectations.at("margin.overall").expected == 0.2);
    CHECK(cfg.expectations.at("kpi.orders").expected == 25035);
    CHECK_THROWS_AS(ReportConfig::from_json_text("[1]"), ConfigError);
    CHECK_THROWS_AS(ReportConfig::from_json_text(R"({"expectations": {"x": {"expected": 1}}})"), ConfigError);
    CHECK_THROWS_AS(ReportConfig::load("/nonexistent/analytics.json"), FileNotFound);
}

TEST_CASE("reference expectations") {
    // Published reference values.
    auto cfg = ReportConfig::reference_defaults();
    auto e = [&](const char* id) { return cfg.expectations.at(id).expected; };
    CHECK(e("kpi.total_sales") == 12.64e6);
    CHECK(e("kpi.orders") == 25035);
    CHECK(e("kpi.customers") == 1590);
    CHECK(e("kpi.skus") == 10292);
    CHECK(e("margin.overall") == 0.116);
    CHECK(e("margin.furniture") == 0.0694);
    CHECK(e("margin.technology") == 0.1399);
    CHECK(e("margin.office_supplies") == 0.1317);
    CHECK(e("market.apac.margin") == 0.125);
    CHECK(e("market.emea.margin") == 0.068);
    CHECK(e("shipping.total_subsidy") == 1.35e6);
    CHECK(e("shipping.first_class_subsidy") == 0.47e6);
    CHECK(e("subcategory.tables.loss_share") == 0.44);
    CHECK(e("loyalty.super_loyal.customers") == 879);
    CHECK(cfg.fee_table_digest == FeeTable::calibrated_default().digest());
}
