#pragma once

#include "storeboard/star_model.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace storeboard {

// ---------------------------------------------------------------------------
// AST
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-'? primary
//   primary := number | '[' name ']' | func '(' args ')' | '(' expr ')'
//   func    := SUM | COUNT | DISTINCTCOUNT | MIN | MAX | AVERAGE | DIVIDE | CALCULATE
//   column  := ident | ident '[' ident ']'
//   filter  := column ('<' | '<=' | '>' | '>=' | '=') literal
//            | column IN '{' literal (',' literal)* '}'
//   literal := number | '-' number | '"' text '"'
//
// Aggregations take a single column. DIVIDE takes exactly three arguments
// (numerator, denominator, alternate). CALCULATE takes an expression followed
// by one or more filters.
// ---------------------------------------------------------------------------

enum class AggFunc { Sum, Count, DistinctCount, Min, Max, Average };
enum class BinaryOp { Add, Sub, Mul, Div };
enum class CompareOp { Lt, Le, Gt, Ge, Eq, In };

const char* to_string(AggFunc f);
const char* to_string(BinaryOp op);
const char* to_string(CompareOp op);

using Literal = std::variant<double, std::string>;

// One CALCULATE filter argument, kept as written so printing round-trips.
struct FilterAtom {
    ColumnRef column;
    CompareOp op;
    std::vector<Literal> values; // one value unless op == In

    ColumnPredicate to_predicate() const; // throws TypeMismatch
    bool operator==(const FilterAtom&) const = default;
};

struct Node;

class MeasureExpr {
  public:
    MeasureExpr() = default;
    explicit MeasureExpr(Node node);

    const Node& node() const { return *node_; }
    const std::shared_ptr<const Node>& share() const { return node_; }
    bool valid() const { return node_ != nullptr; }

    bool operator==(const MeasureExpr& other) const;

  private:
    std::shared_ptr<const Node> node_;
};

struct NumberLiteral {
    double value;
};
struct ColumnAgg {
    AggFunc func;
    ColumnRef column;
};
struct MeasureRef {
    std::string name;
};
struct Divide {
    MeasureExpr numerator;
    MeasureExpr denominator;
    MeasureExpr alternate;
};
struct Binary {
    BinaryOp op;
    MeasureExpr left;
    MeasureExpr right;
};
struct Negate {
    MeasureExpr operand;
};
struct Calculate {
    MeasureExpr inner;
    std::vector<FilterAtom> filters;
};

struct Node {
    std::variant<NumberLiteral, ColumnAgg, MeasureRef, Divide, Binary, Negate, Calculate> value;
};

// Convenience constructors.
MeasureExpr number(double v);
MeasureExpr aggregate(AggFunc f, ColumnRef column);
MeasureExpr measure_ref(std::string name);
MeasureExpr divide(MeasureExpr num, MeasureExpr den, MeasureExpr alt);
MeasureExpr binary(BinaryOp op, MeasureExpr left, MeasureExpr right);
MeasureExpr negate(MeasureExpr operand);
MeasureExpr calculate(MeasureExpr inner, std::vector<FilterAtom> filters);

// Throws SyntaxError, UnknownFunction.
MeasureExpr parse(std::string_view source);

// Canonical text; parse(print(e)) == e.
std::string print(const MeasureExpr& expr);

// Names of measures referenced directly by expr.
std::vector<std::string> referenced_measures(const MeasureExpr& expr);
// Columns aggregated or filtered anywhere in expr (not following references).
std::vector<ColumnRef> referenced_columns(const MeasureExpr& expr);

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

class MeasureCatalog {
  public:
    struct Entry {
        std::string name;
        std::string source;
        MeasureExpr expr;
    };

    // Parses source and registers it. Throws SyntaxError, UnknownFunction,
    // InvalidQuery (duplicate name), CycleDetected.
    void add(std::string name, std::string source);

    const Entry* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::vector<std::string> names() const;

    // Entries named in `names`, in catalog order. Throws UnknownMeasure.
    MeasureCatalog subset(std::span<const std::string> names) const;

    // True if the measure (transitively) reads only SUM / COUNT aggregations
    // combined by + and -. Such measures total across groups.
    bool is_additive(std::string_view name) const;

  private:
    std::vector<Entry> entries_;
};

// The seven-measure catalog used by the final dashboard.
MeasureCatalog register_builtin_catalog();

// Per-version subsets: "v1" (2 measures), "v2"/"v3" (5), "v4" (7).
// Throws UnknownMeasure for other labels.
MeasureCatalog catalog_for_version(std::string_view version);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// Evaluates expressions over sets of fact rows. Holds per-instance caches,
// so one evaluator serves one thread; the schema and catalog are shared
// read-only.
class Evaluator {
  public:
    Evaluator(const StarSchema& schema, const MeasureCatalog& catalog);

    // Throws UnknownMeasure, UnknownColumn, CycleDetected, EmptyAggregation,
    // TypeMismatch.
    double evaluate(const MeasureExpr& expr, const FilterContext& ctx);
    double evaluate(const MeasureExpr& expr, std::span<const std::uint32_t> rows);
    double evaluate_measure(std::string_view name, std::span<const std::uint32_t> rows);

  private:
    double eval(const MeasureExpr& expr, std::span<const std::uint32_t> rows);
    double aggregate_rows(const ColumnAgg& agg, std::span<const std::uint32_t> rows);
    const StarSchema::Binding& binding(const ColumnRef& ref);
    const RowSelection& filter_selection(const MeasureExpr& expr, const Calculate& calc);

    const StarSchema& schema_;
    const MeasureCatalog& catalog_;
    std::vector<std::string> stack_;
    std::map<ColumnRef, StarSchema::Binding> bindings_;
    // Keyed by node address; each entry holds the node so the address
    // cannot be reused by a later expression.
    std::map<const Node*, std::pair<std::shared_ptr<const Node>, RowSelection>> filter_cache_;
    std::vector<std::uint32_t> stamps_;
    std::uint32_t stamp_ = 0;
};

double evaluate(const MeasureExpr& expr, const StarSchema& schema, const FilterContext& ctx,
                const MeasureCatalog& catalog);

} // namespace storeboard
