#include "doctest.h"

#include "fixture.hpp"
#include "generators.hpp"
#include "oracle.hpp"

#include "storeboard/error.hpp"
#include "storeboard/measure.hpp"

#include <cmath>
#include <cstring>
#include <optional>
#include <random>
#include <set>

using namespace storeboard;
using namespace oracle;

namespace {

ColumnRef col(const char* name) { return {"", name}; }

// ---------------------------------------------------------------------------
// Oracle interpreter over fixture lines
// ---------------------------------------------------------------------------

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

Rows all_rows(const std::vector<fixture::Line>& lines) {
    Rows out;
    for (const auto& l : lines) {
        out.push_back(&l);
    }
    return out;
}

} // namespace

TEST_CASE("parse: the builtin formulas") {
    CHECK(parse("DIVIDE(SUM(Profit), SUM(Sales), 0)") ==
          divide(aggregate(AggFunc::Sum, col("Profit")), aggregate(AggFunc::Sum, col("Sales")), number(0)));
    CHECK(parse("DIVIDE([Total Profit], [Total Orders], 0)") ==
          divide(measure_ref("Total Profit"), measure_ref("Total Orders"), number(0)));
    CHECK(parse("SUM(ShippingCost) - SUM(ShippingPayment)") ==
          binary(BinaryOp::Sub, aggregate(AggFunc::Sum, col("ShippingCost")),
                 aggregate(AggFunc::Sum, col("ShippingPayment"))));
}

TEST_CASE("parse: precedence and associativity") {
    CHECK(parse("1 + 2 * 3") == binary(BinaryOp::Add, number(1), binary(BinaryOp::Mul, number(2), number(3))));
    CHECK(parse("8 - 4 - 2") == binary(BinaryOp::Sub, binary(BinaryOp::Sub, number(8), number(4)), number(2)));
    CHECK(parse("(1 + 2) * 3") == binary(BinaryOp::Mul, binary(BinaryOp::Add, number(1), number(2)), number(3)));
    CHECK(parse("-SUM(Profit)") == negate(aggregate(AggFunc::Sum, col("Profit"))));
    CHECK(parse("-2") == number(-2));
    CHECK(parse("sum( Product[Category] )") == aggregate(AggFunc::Sum, {"Product", "Category"}));
    CHECK(parse("CALCULATE(SUM(Profit), Profit < 0, Market IN {\"APAC\", \"EU\"})") ==
          calculate(aggregate(AggFunc::Sum, col("Profit")),
                    {FilterAtom{col("Profit"), CompareOp::Lt, {0.0}},
                     FilterAtom{col("Market"), CompareOp::In, {std::string("APAC"), std::string("EU")}}}));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse("SUMX(Sales)"), UnknownFunction);
    CHECK_THROWS_AS(parse("DIVIDE(1, 2)"), SyntaxError);
    CHECK_THROWS_AS(parse("1 +"), SyntaxError);
    CHECK_THROWS_AS(parse("SUM(Sales"), SyntaxError);
    CHECK_THROWS_AS(parse("[Total"), SyntaxError);
    CHECK_THROWS_AS(parse("CALCULATE(SUM(Sales))"), SyntaxError);
    CHECK_THROWS_AS(parse("1 2"), SyntaxError);
    try {
        parse("SUM(Sales) + * 2");
        FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.position == 13);
    }
}

TEST_CASE("print: canonical forms") {
    CHECK(print(divide(aggregate(AggFunc::Sum, col("Profit")), aggregate(AggFunc::Sum, col("Sales")), number(0))) ==
          "DIVIDE(SUM(Profit), SUM(Sales), 0)");
    CHECK(print(number(0)) == "0");
    CHECK(print(parse("(1 - 2) - (3 - 4)")) == "1 - 2 - (3 - 4)");
    CHECK(print(negate(number(3))) == "-(3)");
}

TEST_CASE("property: parse(print(e)) == e for 1000 random ASTs") {
    gen::AstGen gen{std::mt19937_64(77)};
    for (int i = 0; i < 1000; ++i) {
        auto e = gen.expr(1 + static_cast<int>(gen.pick(6)));
        auto text = print(e);
        INFO(text);
        CHECK(parse(text) == e);
        CHECK(print(parse(text)) == text);
    }
}

TEST_CASE("builtin catalog and version subsets") {
    auto c = register_builtin_catalog();
    CHECK(c.size() == 7);
    for (const auto& e : c.entries()) {
        CHECK(parse(print(e.expr)) == e.expr);
        CHECK(parse(e.source) == e.expr);
    }
    CHECK(catalog_for_version("v1").names() == std::vector<std::string>{"Total Sales", "Total Orders"});
    CHECK(catalog_for_version("v2").size() == 5);
    CHECK(catalog_for_version("v3").size() == 5);
    CHECK(catalog_for_version("v4").size() == 7);
    CHECK_THROWS_AS(catalog_for_version("v9"), UnknownMeasure);

    CHECK(c.is_additive("Total Sales"));
    CHECK(c.is_additive("Shipping Subsidy"));
    CHECK(c.is_additive("Total Loss"));
    CHECK_FALSE(c.is_additive("Total Orders"));
    CHECK_FALSE(c.is_additive("Profit Margin %"));
}

TEST_CASE("catalog rejects duplicates and cycles") {
    MeasureCatalog c;
    c.add("A", "[B] + 1");
    CHECK_THROWS_AS(c.add("A", "1"), InvalidQuery);
    CHECK_THROWS_AS(c.add("B", "[A] * 2"), CycleDetected);
    CHECK_THROWS_AS(c.add("C", "[C]"), CycleDetected);
    c.add("B", "2");
    CHECK(c.size() == 2);
}

TEST_CASE("evaluation: hand-computed fixtures") {
    // 12 lines over 5 orders.
    std::vector<fixture::Line> lines(12);
    const char* orders[] = {"A", "A", "B", "C", "C", "C", "D", "E", "E", "B", "D", "A"};
    const double profit[] = {10, -4, 7, 2.5, 3, -1, 20, -8, 1, 0, 4, 6};
    const double sales[] = {100, 40, 70, 25, 30, 10, 200, 80, 10, 5, 40, 60};
    for (int i = 0; i < 12; ++i) {
        lines[i].order_id = orders[i];
        lines[i].profit = profit[i];
        lines[i].sales = sales[i];
        lines[i].category = i % 2 == 0 ? "Furniture" : "Technology";
    }
    auto schema = fixture::schema_of(lines);
    auto catalog = register_builtin_catalog();
    Evaluator ev(schema, catalog);
    FilterContext all;

    CHECK(ev.evaluate(parse("[Total Orders]"), all) == 5);
    CHECK(ev.evaluate(parse("[Avg Profit per Order]"), all) == doctest::Approx(40.5 / 5));
    CHECK(ev.evaluate(parse("[Total Loss]"), all) == -13);
    CHECK(ev.evaluate(parse("[Profit Margin %]"), all) == doctest::Approx(40.5 / 670));
    CHECK(ev.evaluate(parse("COUNT(OrderID)"), all) == 12);
    CHECK(ev.evaluate(parse("MIN(Profit) + MAX(Profit)"), all) == 12);

    // Margin of the union is the ratio of sums, not the mean of group margins.
    FilterContext furn, tech;
    furn.add(ColumnPredicate::in(col("Category"), {"Furniture"}));
    tech.add(ColumnPredicate::in(col("Category"), {"Technology"}));
    auto m = parse("[Profit Margin %]");
    double mf = ev.evaluate(m, furn);
    double mt = ev.evaluate(m, tech);
    double mu = ev.evaluate(m, all);
    CHECK(mf != doctest::Approx(mt));
    CHECK(mu != doctest::Approx((mf + mt) / 2));
    CHECK(mu == doctest::Approx((10 + 7 + 3 + 20 - 8 + 0 + (-4 + 2.5 - 1 + 1 + 4 + 6)) / 670.0));
}

TEST_CASE("evaluation: empty selections and errors") {
    std::mt19937_64 rng(8);
    auto lines = fixture::random_lines(rng, 30);
    auto schema = fixture::schema_of(lines);
    auto catalog = register_builtin_catalog();
    Evaluator ev(schema, catalog);
    FilterContext none;
    none.add(ColumnPredicate::in(col("Market"), {"Atlantis"}));

    CHECK(ev.evaluate(parse("SUM(Sales)"), none) == 0);
    CHECK(ev.evaluate(parse("COUNT(Sales)"), none) == 0);
    CHECK(ev.evaluate(parse("DISTINCTCOUNT(OrderID)"), none) == 0);
    CHECK(ev.evaluate(parse("[Profit Margin %]"), none) == 0);
    CHECK(ev.evaluate(parse("DIVIDE(1, SUM(Sales), -7)"), none) == -7);
    CHECK_THROWS_AS(ev.evaluate(parse("MIN(Sales)"), none), EmptyAggregation);
    CHECK_THROWS_AS(ev.evaluate(parse("AVERAGE(Sales)"), none), EmptyAggregation);
    CHECK_THROWS_AS(ev.evaluate(parse("[Nope]"), FilterContext{}), UnknownMeasure);
    CHECK_THROWS_AS(ev.evaluate(parse("SUM(Colour)"), FilterContext{}), UnknownColumn);
    CHECK_THROWS_AS(ev.evaluate(parse("SUM(Market)"), FilterContext{}), TypeMismatch);
}

TEST_CASE("property: random expressions agree with the oracle interpreter") {
    gen::AstGen gen{std::mt19937_64(99), true};
    auto catalog = register_builtin_catalog();
    std::mt19937_64 rng(100);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto lines = fixture::random_lines(rng, 1 + gen.pick(200), true);
        auto schema = fixture::schema_of(lines);
        Evaluator ev(schema, catalog);
        auto rows = all_rows(lines);
        for (int k = 0; k < 5; ++k) {
            auto e = gen.expr(1 + static_cast<int>(gen.pick(5)));
            INFO(print(e));
            std::optional<double> expected;
            try {
                expected = interpret(e, rows, catalog);
            } catch (const Empty&) {
            }
            if (expected) {
                CHECK(same(ev.evaluate(e, FilterContext{}), *expected));
                ++compared;
            } else {
                CHECK_THROWS_AS(ev.evaluate(e, FilterContext{}), EmptyAggregation);
            }
        }
    }
    CHECK(compared > 500);
}

TEST_CASE("property: additivity, DISTINCTCOUNT <= COUNT, Divide contract, Calculate containment") {
    std::mt19937_64 rng(31);
    auto catalog = register_builtin_catalog();
    for (int trial = 0; trial < 60; ++trial) {
        auto lines = fixture::random_lines(rng, 20 + trial * 3, true);
        auto schema = fixture::schema_of(lines);
        Evaluator ev(schema, catalog);

        for (const char* by : {"Market", "Category", "ShipMode", "Segment"}) {
            std::set<std::string> groups;
            for (const auto& l : lines) {
                groups.insert(scalar_to_string(fixture::value_of(l, by)));
            }
            for (const char* m : {"[Total Sales]", "[Total Profit]", "[Shipping Subsidy]", "[Total Loss]"}) {
                auto e = parse(m);
                double whole = ev.evaluate(e, FilterContext{});
                double parts = 0;
                for (const auto& g : groups) {
                    FilterContext ctx;
                    ctx.add(ColumnPredicate::in(col(by), {g}));
                    parts += ev.evaluate(e, ctx);
                }
                CHECK(std::abs(parts - whole) <= 1e-9 * std::max(1.0, std::abs(whole)));
            }
        }

        for (const char* c : {"OrderID", "Market", "Sales", "Discount", "CustomerID"}) {
            FilterContext ctx;
            ctx.add(ColumnPredicate::between(col("Discount"), Range{0, 0.2}));
            CHECK(ev.evaluate(aggregate(AggFunc::DistinctCount, col(c)), ctx) <=
                  ev.evaluate(aggregate(AggFunc::Count, col(c)), ctx));
        }

        FilterContext ctx;
        ctx.add(ColumnPredicate::in(col("Market"), {"APAC", "EU", "US"}));
        auto den = parse("SUM(Discount) - 0.1 * COUNT(Discount)");
        auto d = divide(parse("SUM(Profit)"), den, number(-123.5));
        double dv = ev.evaluate(d, ctx);
        if (ev.evaluate(den, ctx) == 0) {
            CHECK(dv == -123.5);
        } else {
            CHECK(dv == ev.evaluate(parse("SUM(Profit)"), ctx) / ev.evaluate(den, ctx));
        }

        FilterAtom p{col("Profit"), CompareOp::Lt, {0.0}};
        auto inner = parse("SUM(Profit) * 2 + DISTINCTCOUNT(OrderID)");
        auto with_calc = ev.evaluate(calculate(inner, {p}), ctx);
        FilterContext narrowed = ctx;
        narrowed.add(p.to_predicate());
        auto direct = ev.evaluate(inner, narrowed);
        CHECK(std::memcmp(&with_calc, &direct, sizeof(double)) == 0);
    }
}
