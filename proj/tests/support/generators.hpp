#pragma once

// Random query and expression generators shared by the property tests and
// the acceptance runner.

#include "oracle.hpp"

#include "storeboard/measure.hpp"
#include "storeboard/query.hpp"

#include <cmath>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace gen {

using namespace storeboard;
using oracle::OraclePredicate;

inline ColumnRef col(const char* name) { return {"", name}; }

// Builtins plus one measure per aggregate kind and a CALCULATE.
inline MeasureCatalog query_catalog() {
    auto c = register_builtin_catalog();
    c.add("Avg Discount", "AVERAGE(Discount)");
    c.add("Smallest Sale", "MIN(Sales)");
    c.add("Line Count", "COUNT(OrderID)");
    c.add("Customers", "DISTINCTCOUNT(CustomerID)");
    c.add("Big Sale Profit", "CALCULATE([Total Profit], Sales >= 300)");
    return c;
}

struct QueryGen {
    std::mt19937_64 rng;
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

    GroupQuery make(const std::vector<fixture::Line>& lines, const MeasureCatalog& catalog,
                    std::vector<OraclePredicate>& preds, int kind) {
        static const char* kGroups[] = {"Market", "Category", "SubCategory", "ShipMode", "Segment",
                                        "Region", "Discount", "Quantity", "OrderDate", "CustomerID"};
        GroupQuery q;
        std::size_t groups = kind == 0 ? pick(3) : pick(2);
        for (std::size_t i = 0; i < groups; ++i) {
            q.group_by.push_back(col(kGroups[pick(std::size(kGroups))]));
        }
        auto names = catalog.names();
        for (std::size_t i = 0, n = 1 + pick(3); i < n; ++i) {
            q.measures.push_back(names[pick(names.size())]);
        }
        preds.clear();
        for (std::size_t i = 0, n = pick(3); i < n; ++i) {
            preds.push_back(oracle::random_predicate(rng, lines));
            q.filters.add(preds.back().engine());
        }
        if (kind == 1) {
            static const char* kBin[] = {"Discount", "Sales", "Profit", "ShippingCost"};
            BinSpec b;
            b.column = col(kBin[pick(std::size(kBin))]);
            if (pick(2) == 0) {
                b.mode = BinSpec::Mode::FixedWidth;
                static const double kWidths[] = {0.05, 0.1, 0.3, 1.0, 7.5, 50, 1000};
                b.width = kWidths[pick(std::size(kWidths))];
                b.origin = pick(3) == 0 ? -0.025 : 0.0;
            }
            q.bin = b;
        }
        if (kind == 2 || pick(4) == 0) {
            q.order_by = OrderBy{q.measures[pick(q.measures.size())],
                                 pick(2) == 0 ? SortDirection::Ascending : SortDirection::Descending};
            q.limit = pick(6);
        }
        return q;
    }
};

// ---------------------------------------------------------------------------
// Random ASTs
// ---------------------------------------------------------------------------

struct AstGen {
    std::mt19937_64 rng;
    bool evaluable = false; // restrict to columns and measures that exist

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

    double number() {
        switch (pick(5)) {
        case 0:
            return static_cast<double>(pick(10));
        case 1:
            return -static_cast<double>(pick(1000)) / 8.0;
        case 2:
            return std::ldexp(static_cast<double>(pick(1 << 20)), -static_cast<int>(pick(40)));
        case 3:
            return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
        default:
            return std::pow(10.0, static_cast<double>(pick(40)) - 20.0);
        }
    }

    ColumnRef column(bool numeric) {
        static const char* kNumeric[] = {"Sales", "Profit", "Discount", "Quantity", "ShippingCost"};
        static const char* kAny[] = {"OrderID", "Market", "Category", "CustomerID", "ProductID", "Sales", "Discount"};
        static const char* kTables[] = {"", "Fact", "Product", "Geography"};
        if (evaluable) {
            return numeric ? col(kNumeric[pick(std::size(kNumeric))]) : col(kAny[pick(std::size(kAny))]);
        }
        std::string name = pick(2) == 0 ? "x" : "Col_";
        name += std::to_string(pick(100));
        return {kTables[pick(std::size(kTables))], name};
    }

    std::string measure_name() {
        static const char* kNames[] = {"Total Sales", "Total Profit", "Total Orders", "Profit Margin %",
                                       "Avg Profit per Order", "Shipping Subsidy", "Total Loss"};
        if (evaluable) {
            return kNames[pick(std::size(kNames))];
        }
        return std::string(kNames[pick(std::size(kNames))]) + (pick(2) == 0 ? " (v2)" : "");
    }

    FilterAtom filter() {
        FilterAtom f;
        if (evaluable && pick(2) == 0) {
            static const char* kCats[] = {"Market", "Category", "ShipMode", "Segment"};
            static const char* kVals[] = {"APAC", "EU", "Furniture", "Technology", "First Class", "Consumer", "nope"};
            f.column = col(kCats[pick(std::size(kCats))]);
            f.op = pick(2) == 0 ? CompareOp::Eq : CompareOp::In;
            std::size_t k = f.op == CompareOp::In ? 1 + pick(3) : 1;
            for (std::size_t i = 0; i < k; ++i) {
                f.values.emplace_back(std::string(kVals[pick(std::size(kVals))]));
            }
            return f;
        }
        f.column = column(true);
        static const CompareOp kOps[] = {CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge, CompareOp::Eq};
        f.op = kOps[pick(std::size(kOps))];
        if (!evaluable && pick(4) == 0) {
            f.op = CompareOp::In;
            f.values.emplace_back(std::string("a \"quoted\" value"));
            f.values.emplace_back(number());
        } else if (!evaluable && pick(4) == 0) {
            f.values.emplace_back(std::string("text"));
        } else {
            f.values.emplace_back(evaluable ? static_cast<double>(pick(40)) - 10.0 : number());
        }
        return f;
    }

    MeasureExpr expr(int depth) {
        std::size_t choice = depth <= 1 ? pick(3) : pick(8);
        switch (choice) {
        case 0:
            return storeboard::number(number());
        case 1: {
            static const AggFunc kFuncs[] = {AggFunc::Sum, AggFunc::Count, AggFunc::DistinctCount,
                                             AggFunc::Min, AggFunc::Max, AggFunc::Average};
            auto f = kFuncs[pick(std::size(kFuncs))];
            bool numeric = f != AggFunc::Count && f != AggFunc::DistinctCount;
            return aggregate(f, column(numeric));
        }
        case 2:
            return measure_ref(measure_name());
        case 3:
            return divide(expr(depth - 1), expr(depth - 1), expr(depth - 1));
        case 4:
        case 5: {
            static const BinaryOp kOps[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div};
            return binary(kOps[pick(4)], expr(depth - 1), expr(depth - 1));
        }
        case 6:
            return negate(expr(depth - 1));
        default: {
            std::vector<FilterAtom> filters;
            for (std::size_t i = 0, n = 1 + pick(2); i < n; ++i) {
                filters.push_back(filter());
            }
            return calculate(expr(depth - 1), std::move(filters));
        }
        }
    }
};

} // namespace gen
