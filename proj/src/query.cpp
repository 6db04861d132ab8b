#include "storeboard/query.hpp"

#include "storeboard/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace storeboard {

namespace {

// Encodes a cell as an integer whose order matches the Scalar order within
// one column: dictionary codes are remapped to string rank, doubles are
// mapped to order-preserving bit patterns.
std::uint64_t ordered_bits(double v) {
    auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
    return (bits >> 63) != 0 ? ~bits : bits | (std::uint64_t{1} << 63);
}

struct KeyColumn {
    StarSchema::Binding binding;
    std::vector<std::uint64_t> rank; // dictionary code -> rank among sorted strings
};

KeyColumn make_key_column(const StarSchema& schema, const ColumnRef& ref) {
    KeyColumn k{schema.bind(ref), {}};
    const Column& col = *k.binding.column;
    if (col.is_dictionary()) {
        const auto& dict = col.dictionary_values();
        std::vector<std::uint32_t> order(dict.size());
        for (std::uint32_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dict[a] < dict[b]; });
        k.rank.resize(dict.size());
        for (std::uint32_t r = 0; r < order.size(); ++r) {
            k.rank[order[r]] = r;
        }
    }
    return k;
}

// Missing sorts first, matching scalar_less.
std::uint64_t key_of(const KeyColumn& k, std::size_t fact_row) {
    const Column& col = *k.binding.column;
    auto row = k.binding.row(fact_row);
    if (col.is_missing(row)) {
        return 0;
    }
    if (col.is_dictionary()) {
        return k.rank[col.codes()[row]] + 1;
    }
    if (col.is_date()) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(col.days()[row]) + (std::int64_t{1} << 40));
    }
    return ordered_bits(col.numbers()[row]);
}

std::optional<double> measure_cell(Evaluator& ev, const std::string& name,
                                   std::span<const std::uint32_t> rows) {
    try {
        return ev.evaluate_measure(name, rows);
    } catch (const EmptyAggregation&) {
        return std::nullopt;
    }
}

void check_query(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q) {
    for (const auto& m : q.measures) {
        if (!catalog.contains(m)) {
            throw UnknownMeasure(m);
        }
    }
    for (const auto& g : q.group_by) {
        schema.bind(g);
    }
    if (q.bin) {
        auto b = schema.bind(q.bin->column);
        if (!b.column->is_numeric()) {
            throw TypeMismatch("bin column " + q.bin->column.to_string() + " is not numeric");
        }
        if (q.bin->mode == BinSpec::Mode::FixedWidth &&
            !(q.bin->width > 0 && std::isfinite(q.bin->width) && std::isfinite(q.bin->origin))) {
            throw InvalidQuery("bin width must be a positive finite number");
        }
    }
    if (q.order_by &&
        std::find(q.measures.begin(), q.measures.end(), q.order_by->measure) == q.measures.end()) {
        throw InvalidQuery("order_by measure [" + q.order_by->measure + "] is not among the query measures");
    }
}

} // namespace

long long bin_index(double v, double width, double origin) {
    // Values within this distance below an edge count as on it, so decimal
    // levels like 0.15 land in [0.15, 0.2) despite 3 * 0.05 > 0.15 in binary.
    const double tol = 1e-9 * width;
    auto edge = [&](long long k) { return origin + static_cast<double>(k) * width; };
    auto k = static_cast<long long>(std::floor((v - origin) / width));
    while (v < edge(k) - tol) {
        --k;
    }
    while (v >= edge(k + 1) - tol) {
        ++k;
    }
    return k;
}

QueryResult run(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q) {
    check_query(schema, catalog, q);

    QueryResult result;
    result.measures = q.measures;
    for (const auto& g : q.group_by) {
        result.key_columns.push_back(g.to_string());
    }
    if (q.bin) {
        result.key_columns.push_back(q.bin->column.to_string());
    }

    auto selected = resolve_rows(schema, q.filters).ordinals();
    Evaluator ev(schema, catalog);

    for (const auto& m : q.measures) {
        result.total.push_back(measure_cell(ev, m, selected));
    }

    if (q.group_by.empty() && !q.bin) {
        result.rows.push_back({{}, result.total});
    } else {
        std::vector<KeyColumn> keys;
        for (const auto& g : q.group_by) {
            keys.push_back(make_key_column(schema, g));
        }
        std::optional<StarSchema::Binding> bin_binding;
        if (q.bin) {
            bin_binding = schema.bind(q.bin->column);
        }

        struct Group {
            std::vector<std::uint32_t> rows;
            std::vector<Scalar> keys;
        };
        std::map<std::vector<std::uint64_t>, Group> groups;
        std::vector<std::uint64_t> key(keys.size() + (q.bin ? 1 : 0));
        for (auto r : selected) {
            for (std::size_t i = 0; i < keys.size(); ++i) {
                key[i] = key_of(keys[i], r);
            }
            double bin_edge = 0;
            if (q.bin) {
                auto v = bin_binding->column->number_at(bin_binding->row(r));
                if (!v) {
                    continue;
                }
                if (q.bin->mode == BinSpec::Mode::DistinctValues) {
                    bin_edge = *v == 0.0 ? 0.0 : *v;
                } else {
                    auto k = bin_index(*v, q.bin->width, q.bin->origin);
                    bin_edge = q.bin->origin + static_cast<double>(k) * q.bin->width;
                }
                key.back() = ordered_bits(bin_edge);
            }
            auto [it, inserted] = groups.try_emplace(key);
            if (inserted) {
                for (const auto& k : keys) {
                    it->second.keys.push_back(k.binding.column->scalar_at(k.binding.row(r)));
                }
                if (q.bin) {
                    it->second.keys.emplace_back(bin_edge);
                }
            }
            it->second.rows.push_back(r);
        }

        result.rows.reserve(groups.size());
        for (auto& [k, g] : groups) {
            ResultRow row{std::move(g.keys), {}};
            for (const auto& m : q.measures) {
                row.values.push_back(measure_cell(ev, m, g.rows));
            }
            result.rows.push_back(std::move(row));
        }
    }

    if (q.order_by) {
        auto idx = static_cast<std::size_t>(
            std::find(q.measures.begin(), q.measures.end(), q.order_by->measure) - q.measures.begin());
        bool ascending = q.order_by->direction == SortDirection::Ascending;
        // Rows are already in key order, so a stable sort keeps key order on ties.
        std::stable_sort(result.rows.begin(), result.rows.end(), [&](const ResultRow& a, const ResultRow& b) {
            const auto& x = a.values[idx];
            const auto& y = b.values[idx];
            if (!x || !y) {
                return x.has_value() && !y.has_value();
            }
            return ascending ? *x < *y : *x > *y;
        });
    }
    if (q.limit && result.rows.size() > *q.limit) {
        result.rows.resize(*q.limit);
    }
    return result;
}

QueryResult run_binned(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q) {
    if (!q.bin) {
        throw InvalidQuery("binned query needs a bin specification");
    }
    return run(schema, catalog, q);
}

QueryResult top_n(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q) {
    if (!q.order_by || !q.limit) {
        throw InvalidQuery("top-n query needs order_by and limit");
    }
    return run(schema, catalog, q);
}

} // namespace storeboard
