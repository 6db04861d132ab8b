#pragma once

// JSON encodings shared by the server, the CLI and the spec loader. Field
// names are lower_snake_case; missing measure cells are explicit nulls.

#include "storeboard/analytics.hpp"
#include "storeboard/dashboard.hpp"
#include "storeboard/query.hpp"
#include "storeboard/star_model.hpp"

#include <nlohmann/json.hpp>

namespace storeboard::wire {

using Json = nlohmann::json;

Json to_json(const Scalar& s);
Json to_json(const FilterContext& ctx);
Json to_json(const GroupQuery& q);
Json to_json(const QueryResult& r);
Json to_json(const FindingsReport& r);
Json to_json(const NarrativeScore& s);
Json to_json(const std::vector<Violation>& v);
Json to_json(const std::vector<SpecChange>& changes);
Json to_json(const DashboardSpec& spec);

// Decoders throw BadRequest with a JSON path in the message.
FilterContext filter_context_from_json(const Json& j, const std::string& path = "filters");
GroupQuery group_query_from_json(const Json& j, const std::string& path = "query");
FindingsReport findings_report_from_json(const Json& j);

// Throws SpecFormatError listing every structural problem found.
DashboardSpec spec_from_json(const Json& j);

// Tables, columns and kinds with row counts, relationships and provenance.
Json schema_to_json(const StarSchema& schema);

} // namespace storeboard::wire
