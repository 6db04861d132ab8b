#pragma once

// Brute-force reference implementations used as test oracles. Everything
// here reads fixture::Line records directly and shares no code with the
// engine beyond the AST and value types.

#include "fixture.hpp"

#include "storeboard/measure.hpp"
#include "storeboard/query.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace oracle {

using namespace storeboard;

// A predicate as the oracle sees it: evaluated against fixture lines.
struct OraclePredicate {
    std::string column;
    std::vector<std::string> values; // in-set when non-empty
    Range range;
    bool is_range = false;

    bool accepts(const fixture::Line& l) const;
    ColumnPredicate engine() const;
};

std::vector<std::uint32_t> scan(std::span<const fixture::Line> lines, std::span<const OraclePredicate> preds);
OraclePredicate random_predicate(std::mt19937_64& rng, std::span<const fixture::Line> lines);

// Thrown where the engine raises EmptyAggregation.
struct Empty {};

using Rows = std::vector<const fixture::Line*>;

bool filter_accepts(const FilterAtom& f, const fixture::Line& l);
double interpret(const MeasureExpr& e, const Rows& rows, const MeasureCatalog& catalog);

// Nested-loop group-by over lines already restricted by preds.
QueryResult run_query(std::span<const fixture::Line> lines, std::span<const OraclePredicate> preds,
                      const MeasureCatalog& catalog, const GroupQuery& q);

} // namespace oracle
