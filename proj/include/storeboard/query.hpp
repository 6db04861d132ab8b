#pragma once

#include "storeboard/measure.hpp"
#include "storeboard/star_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace storeboard {

enum class SortDirection { Ascending, Descending };

struct OrderBy {
    std::string measure;
    SortDirection direction = SortDirection::Descending;
    bool operator==(const OrderBy&) const = default;
};

// Bins are lower-inclusive, upper-exclusive: a value v falls in bin k when
// origin + k*width <= v < origin + (k+1)*width. Edges are compared with a
// tolerance of 1e-9 * width so that decimal data sitting exactly on an edge
// joins the upper bin. The bin key is its lower edge.
struct BinSpec {
    enum class Mode { DistinctValues, FixedWidth };

    ColumnRef column;
    Mode mode = Mode::DistinctValues;
    double width = 0;
    double origin = 0;
    bool operator==(const BinSpec&) const = default;
};

struct GroupQuery {
    std::vector<ColumnRef> group_by; // empty: scalar (KPI) query
    std::vector<std::string> measures;
    FilterContext filters;
    std::optional<BinSpec> bin; // keyed after the group_by columns
    std::optional<OrderBy> order_by;
    std::optional<std::size_t> limit;
    bool operator==(const GroupQuery&) const = default;
};

struct ResultRow {
    std::vector<Scalar> keys;
    std::vector<std::optional<double>> values; // nullopt: EmptyAggregation in this cell
    bool operator==(const ResultRow&) const = default;
};

struct QueryResult {
    std::vector<std::string> key_columns;
    std::vector<std::string> measures;
    std::vector<ResultRow> rows;
    std::vector<std::optional<double>> total; // measures under q.filters, ungrouped
    bool operator==(const QueryResult&) const = default;
};

// Rows come back in ascending key order unless order_by is set. A scalar
// query always yields exactly one row with no keys. Missing values form
// their own group (keyed by a missing Scalar), except in the bin column,
// where rows without a value join no bin.
//
// Throws UnknownMeasure, UnknownColumn, TypeMismatch, InvalidQuery.
QueryResult run(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q);

// run() for a query that must carry a BinSpec.
QueryResult run_binned(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q);

// run() for a query that must carry order_by and limit. Ties on the measure
// fall back to ascending group keys; null cells sort last.
QueryResult top_n(const StarSchema& schema, const MeasureCatalog& catalog, const GroupQuery& q);

// Bin index of v under a fixed-width spec.
long long bin_index(double v, double width, double origin);

} // namespace storeboard
