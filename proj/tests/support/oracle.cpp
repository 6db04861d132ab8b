#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

bool OraclePredicate::accepts(const fixture::Line& l) const {
    auto v = fixture::value_of(l, column);
    if (is_range) {
        const auto* d = std::get_if<double>(&v);
        return d != nullptr && range.contains(*d);
    }
    return std::find(values.begin(), values.end(), scalar_to_string(v)) != values.end();
}

ColumnPredicate OraclePredicate::engine() const {
    return is_range ? ColumnPredicate::between(ColumnRef::parse(column), range)
                    : ColumnPredicate::in(ColumnRef::parse(column), values);
}

std::vector<std::uint32_t> scan(std::span<const fixture::Line> lines, std::span<const OraclePredicate> preds) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t r = 0; r < lines.size(); ++r) {
        if (std::all_of(preds.begin(), preds.end(), [&](const auto& p) { return p.accepts(lines[r]); })) {
            out.push_back(r);
        }
    }
    return out;
}

OraclePredicate random_predicate(std::mt19937_64& rng, std::span<const fixture::Line> lines) {
    static const char* kText[] = {"Market", "Category", "SubCategory", "ShipMode", "Segment", "CustomerID", "OrderID"};
    static const char* kNumeric[] = {"Discount", "Sales", "Profit", "Quantity", "ShippingCost"};
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    OraclePredicate p;
    if (pick(2) == 0) {
        p.column = kText[pick(std::size(kText))];
        std::size_t k = 1 + pick(3);
        for (std::size_t i = 0; i < k; ++i) {
            p.values.push_back(scalar_to_string(fixture::value_of(lines[pick(lines.size())], p.column)));
        }
        if (pick(5) == 0) {
            p.values.push_back("no such value");
        }
    } else {
        p.column = kNumeric[pick(std::size(kNumeric))];
        p.is_range = true;
        auto a = std::get<double>(fixture::value_of(lines[pick(lines.size())], p.column));
        auto b = std::get<double>(fixture::value_of(lines[pick(lines.size())], p.column));
        p.range.lo = std::min(a, b);
        p.range.hi = std::max(a, b);
        p.range.lo_inclusive = pick(2) == 0;
        p.range.hi_inclusive = pick(2) == 0;
        if (pick(4) == 0) {
            p.range.lo = -std::numeric_limits<double>::infinity();
        }
    }
    return p;
}

bool filter_accepts(const FilterAtom& f, const fixture::Line& l) {
    auto v = fixture::value_of(l, f.column.column);
    if (std::holds_alternative<std::monostate>(v)) {
        return false;
    }
    auto equals = [&](const Literal& lit) {
        if (const auto* s = std::get_if<std::string>(&lit)) {
            return scalar_to_string(v) == *s;
        }
        const auto* d = std::get_if<double>(&v);
        return d != nullptr && *d == std::get<double>(lit);
    };
    if (f.op == CompareOp::Eq || f.op == CompareOp::In) {
        for (const auto& lit : f.values) {
            if (equals(lit)) {
                return true;
            }
        }
        return false;
    }
    double x = std::get<double>(v);
    double y = std::get<double>(f.values.front());
    switch (f.op) {
    case CompareOp::Lt:
        return x < y;
    case CompareOp::Le:
        return x <= y;
    case CompareOp::Gt:
        return x > y;
    case CompareOp::Ge:
        return x >= y;
    default:
        return false;
    }
}

double interpret(const MeasureExpr& e, const Rows& rows, const MeasureCatalog& catalog);

double oracle_agg(const ColumnAgg& a, const Rows& rows) {
    std::vector<Scalar> values;
    for (const auto* l : rows) {
        auto v = fixture::value_of(*l, a.column.column);
        if (!std::holds_alternative<std::monostate>(v)) {
            values.push_back(v);
        }
    }
    switch (a.func) {
    case AggFunc::Count:
        return static_cast<double>(values.size());
    case AggFunc::DistinctCount: {
        std::set<std::string> seen;
        for (const auto& v : values) {
            seen.insert(scalar_to_string(v));
        }
        return static_cast<double>(seen.size());
    }
    case AggFunc::Sum: {
        double s = 0;
        for (const auto& v : values) {
            s += std::get<double>(v);
        }
        return s;
    }
    case AggFunc::Average: {
        if (values.empty()) {
            throw Empty{};
        }
        double s = 0;
        for (const auto& v : values) {
            s += std::get<double>(v);
        }
        return s / static_cast<double>(values.size());
    }
    case AggFunc::Min:
    case AggFunc::Max: {
        if (values.empty()) {
            throw Empty{};
        }
        double best = std::get<double>(values.front());
        for (const auto& v : values) {
            double x = std::get<double>(v);
            best = a.func == AggFunc::Min ? std::min(best, x) : std::max(best, x);
        }
        return best;
    }
    }
    return 0;
}

double interpret(const MeasureExpr& e, const Rows& rows, const MeasureCatalog& catalog) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberLiteral>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, ColumnAgg>) {
                return oracle_agg(n, rows);
            } else if constexpr (std::is_same_v<T, MeasureRef>) {
                return interpret(catalog.find(n.name)->expr, rows, catalog);
            } else if constexpr (std::is_same_v<T, Divide>) {
                double den = interpret(n.denominator, rows, catalog);
                return den == 0 ? interpret(n.alternate, rows, catalog) : interpret(n.numerator, rows, catalog) / den;
            } else if constexpr (std::is_same_v<T, Binary>) {
                double a = interpret(n.left, rows, catalog);
                double b = interpret(n.right, rows, catalog);
                switch (n.op) {
                case BinaryOp::Add:
                    return a + b;
                case BinaryOp::Sub:
                    return a - b;
                case BinaryOp::Mul:
                    return a * b;
                case BinaryOp::Div:
                    return a / b;
                }
                return 0;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return -interpret(n.operand, rows, catalog);
            } else {
                Rows kept;
                for (const auto* l : rows) {
                    bool ok = true;
                    for (const auto& f : n.filters) {
                        ok = ok && filter_accepts(f, *l);
                    }
                    if (ok) {
                        kept.push_back(l);
                    }
                }
                return interpret(n.inner, kept, catalog);
            }
        },
        e.node().value);
}

QueryResult run_query(std::span<const fixture::Line> lines, std::span<const OraclePredicate> preds,
                      const MeasureCatalog& catalog, const GroupQuery& q) {
    Rows selected;
    for (auto r : scan(lines, preds)) {
        selected.push_back(&lines[r]);
    }
    auto cell = [&](const std::string& m, const Rows& rows) -> std::optional<double> {
        try {
            return interpret(catalog.find(m)->expr, rows, catalog);
        } catch (const Empty&) {
            return std::nullopt;
        }
    };

    QueryResult out;
    out.measures = q.measures;
    for (const auto& g : q.group_by) {
        out.key_columns.push_back(g.to_string());
    }
    if (q.bin) {
        out.key_columns.push_back(q.bin->column.to_string());
    }
    for (const auto& m : q.measures) {
        out.total.push_back(cell(m, selected));
    }

    if (q.group_by.empty() && !q.bin) {
        out.rows.push_back({{}, out.total});
    } else {
        // Linear search over groups keeps the oracle obviously correct.
        std::vector<std::pair<std::vector<Scalar>, Rows>> groups;
        for (const auto* l : selected) {
            std::vector<Scalar> key;
            for (const auto& g : q.group_by) {
                key.push_back(fixture::value_of(*l, g.column));
            }
            if (q.bin) {
                auto v = fixture::value_of(*l, q.bin->column.column);
                if (!std::holds_alternative<double>(v)) {
                    continue;
                }
                double x = std::get<double>(v);
                if (q.bin->mode == BinSpec::Mode::DistinctValues) {
                    key.emplace_back(x);
                } else {
                    // The k with origin + k*w <= x < origin + (k+1)*w, edges
                    // widened downward by 1e-9 * w.
                    double tol = 1e-9 * q.bin->width;
                    auto guess = static_cast<long long>(std::floor((x - q.bin->origin) / q.bin->width));
                    long long k = guess - 2;
                    while (!(q.bin->origin + static_cast<double>(k + 1) * q.bin->width - tol > x)) {
                        ++k;
                    }
                    key.emplace_back(q.bin->origin + static_cast<double>(k) * q.bin->width);
                }
            }
            auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
            if (it == groups.end()) {
                groups.push_back({key, {l}});
            } else {
                it->second.push_back(l);
            }
        }
        std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
            return std::lexicographical_compare(a.first.begin(), a.first.end(), b.first.begin(), b.first.end(),
                                                scalar_less);
        });
        for (const auto& [key, rows] : groups) {
            ResultRow row{key, {}};
            for (const auto& m : q.measures) {
                row.values.push_back(cell(m, rows));
            }
            out.rows.push_back(std::move(row));
        }
    }

    if (q.order_by) {
        std::size_t idx = 0;
        while (q.measures[idx] != q.order_by->measure) {
            ++idx;
        }
        bool asc = q.order_by->direction == SortDirection::Ascending;
        // Insertion sort: stable by construction.
        for (std::size_t i = 1; i < out.rows.size(); ++i) {
            for (std::size_t j = i; j > 0; --j) {
                const auto& a = out.rows[j - 1].values[idx];
                const auto& b = out.rows[j].values[idx];
                bool swap = b.has_value() && (!a.has_value() || (asc ? *b < *a : *b > *a));
                if (!swap) {
                    break;
                }
                std::swap(out.rows[j - 1], out.rows[j]);
            }
        }
    }
    if (q.limit && out.rows.size() > *q.limit) {
        out.rows.resize(*q.limit);
    }
    return out;
}

} // namespace oracle
