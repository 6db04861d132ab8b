#pragma once

#include "storeboard/query.hpp"

#include <iosfwd>
#include <string_view>

namespace storeboard {

// Exit codes: 0 success, 1 check or lint failure, 2 usage or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// --filter mini syntax:
//   Col=a,b      in-set
//   Col>=x  Col>x  Col<=x  Col<x
//   Col=lo..hi   closed range
// Col is a ColumnRef ("Market" or "Geography[Market]"). Throws BadRequest.
ColumnPredicate parse_filter(std::string_view text);

// --bin mini syntax: "Col" bins by distinct values, "Col:width[:origin]"
// by fixed width. Throws BadRequest.
BinSpec parse_bin(std::string_view text);

// Aligned text table; a totals row follows grouped results.
std::string render_table(const QueryResult& result);

} // namespace storeboard
