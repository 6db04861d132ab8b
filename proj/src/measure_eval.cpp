#include "storeboard/measure.hpp"

#include "storeboard/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace storeboard {

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

void MeasureCatalog::add(std::string name, std::string source) {
    if (contains(name)) {
        throw InvalidQuery("duplicate measure name: [" + name + "]");
    }
    auto expr = parse(source);

    // A new entry can only close a cycle through itself.
    std::vector<std::string> path{name};
    std::function<void(const MeasureExpr&)> walk = [&](const MeasureExpr& e) {
        for (const auto& ref : referenced_measures(e)) {
            if (ref == name) {
                std::string chain;
                for (const auto& p : path) {
                    chain += "[" + p + "] -> ";
                }
                throw CycleDetected(chain + "[" + name + "]");
            }
            if (std::find(path.begin(), path.end(), ref) != path.end()) {
                continue;
            }
            if (const auto* dep = find(ref)) {
                path.push_back(ref);
                walk(dep->expr);
                path.pop_back();
            }
        }
    };
    walk(expr);
    entries_.push_back({std::move(name), std::move(source), std::move(expr)});
}

const MeasureCatalog::Entry* MeasureCatalog::find(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<std::string> MeasureCatalog::names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        out.push_back(e.name);
    }
    return out;
}

MeasureCatalog MeasureCatalog::subset(std::span<const std::string> names) const {
    for (const auto& n : names) {
        if (!contains(n)) {
            throw UnknownMeasure(n);
        }
    }
    MeasureCatalog out;
    for (const auto& e : entries_) {
        if (std::find(names.begin(), names.end(), e.name) != names.end()) {
            out.entries_.push_back(e);
        }
    }
    return out;
}

bool MeasureCatalog::is_additive(std::string_view name) const {
    std::vector<std::string_view> visiting;
    std::function<bool(const MeasureExpr&)> additive = [&](const MeasureExpr& e) -> bool {
        return std::visit(
            [&](const auto& n) -> bool {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, ColumnAgg>) {
                    return n.func == AggFunc::Sum || n.func == AggFunc::Count;
                } else if constexpr (std::is_same_v<T, Binary>) {
                    return (n.op == BinaryOp::Add || n.op == BinaryOp::Sub) && additive(n.left) &&
                           additive(n.right);
                } else if constexpr (std::is_same_v<T, Negate>) {
                    return additive(n.operand);
                } else if constexpr (std::is_same_v<T, Calculate>) {
                    return additive(n.inner);
                } else if constexpr (std::is_same_v<T, MeasureRef>) {
                    const auto* dep = find(n.name);
                    if (dep == nullptr ||
                        std::find(visiting.begin(), visiting.end(), n.name) != visiting.end()) {
                        return false;
                    }
                    visiting.push_back(n.name);
                    bool ok = additive(dep->expr);
                    visiting.pop_back();
                    return ok;
                } else {
                    return false;
                }
            },
            e.node().value);
    };
    const auto* entry = find(name);
    return entry != nullptr && additive(entry->expr);
}

namespace {

struct BuiltinMeasure {
    const char* name;
    const char* source;
};

constexpr BuiltinMeasure kBuiltins[] = {
    {"Total Sales", "SUM(Sales)"},
    {"Total Profit", "SUM(Profit)"},
    {"Total Orders", "DISTINCTCOUNT(OrderID)"},
    {"Profit Margin %", "DIVIDE(SUM(Profit), SUM(Sales), 0)"},
    {"Avg Profit per Order", "DIVIDE([Total Profit], [Total Orders], 0)"},
    {"Shipping Subsidy", "SUM(ShippingCost) - SUM(ShippingPayment)"},
    {"Total Loss", "CALCULATE(SUM(Profit), Profit < 0)"},
};

} // namespace

MeasureCatalog register_builtin_catalog() {
    MeasureCatalog c;
    for (const auto& m : kBuiltins) {
        c.add(m.name, m.source);
    }
    return c;
}

MeasureCatalog catalog_for_version(std::string_view version) {
    auto full = register_builtin_catalog();
    if (version == "v1") {
        std::vector<std::string> names{"Total Sales", "Total Orders"};
        return full.subset(names);
    }
    if (version == "v2" || version == "v3") {
        std::vector<std::string> names{"Total Sales", "Total Profit", "Total Orders",
                                       "Profit Margin %", "Avg Profit per Order"};
        return full.subset(names);
    }
    if (version == "v4") {
        return full;
    }
    throw UnknownMeasure("catalog for version " + std::string(version));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Evaluator::Evaluator(const StarSchema& schema, const MeasureCatalog& catalog)
    : schema_(schema), catalog_(catalog) {}

double Evaluator::evaluate(const MeasureExpr& expr, const FilterContext& ctx) {
    auto rows = resolve_rows(schema_, ctx).ordinals();
    return evaluate(expr, rows);
}

double Evaluator::evaluate(const MeasureExpr& expr, std::span<const std::uint32_t> rows) {
    stack_.clear();
    return eval(expr, rows);
}

double Evaluator::evaluate_measure(std::string_view name, std::span<const std::uint32_t> rows) {
    const auto* entry = catalog_.find(name);
    if (entry == nullptr) {
        throw UnknownMeasure(std::string(name));
    }
    stack_.assign(1, entry->name);
    return eval(entry->expr, rows);
}

const StarSchema::Binding& Evaluator::binding(const ColumnRef& ref) {
    auto it = bindings_.find(ref);
    if (it == bindings_.end()) {
        it = bindings_.emplace(ref, schema_.bind(ref)).first;
    }
    return it->second;
}

const RowSelection& Evaluator::filter_selection(const MeasureExpr& expr, const Calculate& calc) {
    auto it = filter_cache_.find(&expr.node());
    if (it == filter_cache_.end()) {
        FilterContext ctx;
        for (const auto& f : calc.filters) {
            ctx.add(f.to_predicate());
        }
        it = filter_cache_.emplace(&expr.node(), std::pair{expr.share(), resolve_rows(schema_, ctx)}).first;
    }
    return it->second.second;
}

double Evaluator::eval(const MeasureExpr& expr, std::span<const std::uint32_t> rows) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberLiteral>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, ColumnAgg>) {
                return aggregate_rows(n, rows);
            } else if constexpr (std::is_same_v<T, MeasureRef>) {
                if (std::find(stack_.begin(), stack_.end(), n.name) != stack_.end()) {
                    std::string chain;
                    for (const auto& s : stack_) {
                        chain += "[" + s + "] -> ";
                    }
                    throw CycleDetected(chain + "[" + n.name + "]");
                }
                const auto* entry = catalog_.find(n.name);
                if (entry == nullptr) {
                    throw UnknownMeasure(n.name);
                }
                stack_.push_back(n.name);
                double v = eval(entry->expr, rows);
                stack_.pop_back();
                return v;
            } else if constexpr (std::is_same_v<T, Divide>) {
                double den = eval(n.denominator, rows);
                if (den == 0.0) {
                    return eval(n.alternate, rows);
                }
                return eval(n.numerator, rows) / den;
            } else if constexpr (std::is_same_v<T, Binary>) {
                double a = eval(n.left, rows);
                double b = eval(n.right, rows);
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
                return 0.0;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return -eval(n.operand, rows);
            } else if constexpr (std::is_same_v<T, Calculate>) {
                const auto& sel = filter_selection(expr, n);
                std::vector<std::uint32_t> kept;
                kept.reserve(rows.size());
                for (auto r : rows) {
                    if (sel.test(r)) {
                        kept.push_back(r);
                    }
                }
                return eval(n.inner, kept);
            }
        },
        expr.node().value);
}

double Evaluator::aggregate_rows(const ColumnAgg& agg, std::span<const std::uint32_t> rows) {
    const auto& b = binding(agg.column);
    const Column& col = *b.column;
    auto describe = [&] { return std::string(to_string(agg.func)) + "(" + agg.column.to_string() + ")"; };

    switch (agg.func) {
    case AggFunc::Count: {
        double n = 0;
        for (auto r : rows) {
            if (!col.is_missing(b.row(r))) {
                n += 1;
            }
        }
        return n;
    }
    case AggFunc::DistinctCount: {
        if (col.is_dictionary()) {
            const auto& codes = col.codes();
            if (stamps_.size() < col.dictionary_values().size()) {
                stamps_.assign(col.dictionary_values().size(), 0);
                stamp_ = 0;
            }
            if (++stamp_ == 0) {
                std::fill(stamps_.begin(), stamps_.end(), 0);
                stamp_ = 1;
            }
            double n = 0;
            for (auto r : rows) {
                auto c = codes[b.row(r)];
                if (c != kMissingCode && stamps_[c] != stamp_) {
                    stamps_[c] = stamp_;
                    n += 1;
                }
            }
            return n;
        }
        std::vector<double> values;
        values.reserve(rows.size());
        for (auto r : rows) {
            if (auto v = col.number_at(b.row(r))) {
                values.push_back(*v);
            }
        }
        std::sort(values.begin(), values.end());
        return static_cast<double>(std::unique(values.begin(), values.end()) - values.begin());
    }
    case AggFunc::Sum:
    case AggFunc::Average: {
        if (!col.is_numeric()) {
            throw TypeMismatch(describe() + " needs a numeric column");
        }
        const auto& values = col.numbers();
        double sum = 0;
        std::size_t n = 0;
        for (auto r : rows) {
            double v = values[b.row(r)];
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        if (agg.func == AggFunc::Sum) {
            return sum;
        }
        if (n == 0) {
            throw EmptyAggregation(describe());
        }
        return sum / static_cast<double>(n);
    }
    case AggFunc::Min:
    case AggFunc::Max: {
        if (col.is_dictionary()) {
            throw TypeMismatch(describe() + " needs a numeric or date column");
        }
        std::optional<double> best;
        for (auto r : rows) {
            if (auto v = col.number_at(b.row(r))) {
                if (!best || (agg.func == AggFunc::Min ? *v < *best : *v > *best)) {
                    best = *v;
                }
            }
        }
        if (!best) {
            throw EmptyAggregation(describe());
        }
        return *best;
    }
    }
    return 0.0;
}

double evaluate(const MeasureExpr& expr, const StarSchema& schema, const FilterContext& ctx,
                const MeasureCatalog& catalog) {
    Evaluator ev(schema, catalog);
    return ev.evaluate(expr, ctx);
}

} // namespace storeboard
