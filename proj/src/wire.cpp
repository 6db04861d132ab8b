#include "storeboard/wire.hpp"

#include "storeboard/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <initializer_list>

namespace storeboard::wire {

namespace {

// ---------------------------------------------------------------------------
// Throwing accessors; messages carry the JSON path.
// ---------------------------------------------------------------------------

[[noreturn]] void bad(const std::string& path, const std::string& msg) { throw BadRequest(path + ": " + msg); }

const Json& require(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) {
        bad(path, "expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        bad(path, fmt::format("missing field \"{}\"", key));
    }
    return *it;
}

const Json* optional_field(const Json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::string as_string(const Json& j, const std::string& path) {
    if (!j.is_string()) {
        bad(path, "expected a string");
    }
    return j.get<std::string>();
}

double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) {
        bad(path, "expected a number");
    }
    return j.get<double>();
}

bool as_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) {
        bad(path, "expected true or false");
    }
    return j.get<bool>();
}

const Json& as_array(const Json& j, const std::string& path) {
    if (!j.is_array()) {
        bad(path, "expected an array");
    }
    return j;
}

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        bad(path, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || k == a;
        }
        if (!ok) {
            bad(path, fmt::format("unknown field \"{}\"", k));
        }
    }
}

std::string idx(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

template <typename T, typename Parse>
T enum_field(const Json& j, const std::string& path, Parse parse, const char* what) {
    auto s = as_string(j, path);
    auto v = parse(s);
    if (!v) {
        bad(path, fmt::format("unknown {} \"{}\"", what, s));
    }
    return *v;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json optional_number(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Problem collection for spec documents.
// ---------------------------------------------------------------------------

struct Problems {
    std::vector<std::string> list;

    template <typename Fn>
    bool attempt(Fn&& fn) {
        try {
            fn();
            return true;
        } catch (const BadRequest& e) {
            list.emplace_back(e.what());
            return false;
        }
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Encoders
// ---------------------------------------------------------------------------

Json to_json(const Scalar& s) {
    if (const auto* d = std::get_if<double>(&s)) {
        return number_or_null(*d);
    }
    if (const auto* t = std::get_if<std::string>(&s)) {
        return *t;
    }
    return nullptr;
}

Json to_json(const FilterContext& ctx) {
    Json out = Json::array();
    for (const auto& p : ctx.predicates()) {
        auto column = p.column.to_string();
        for (const auto& set : p.in_sets) {
            out.push_back({{"column", column}, {"in", set}});
        }
        if (p.range) {
            Json r = {{"lo_inclusive", p.range->lo_inclusive}, {"hi_inclusive", p.range->hi_inclusive}};
            r["lo"] = number_or_null(p.range->lo);
            r["hi"] = number_or_null(p.range->hi);
            out.push_back({{"column", column}, {"range", r}});
        }
    }
    return out;
}

Json to_json(const GroupQuery& q) {
    Json out;
    out["group_by"] = Json::array();
    for (const auto& g : q.group_by) {
        out["group_by"].push_back(g.to_string());
    }
    out["measures"] = q.measures;
    out["filters"] = to_json(q.filters);
    if (q.bin) {
        Json b = {{"column", q.bin->column.to_string()}};
        if (q.bin->mode == BinSpec::Mode::DistinctValues) {
            b["mode"] = "distinct-values";
        } else {
            b["mode"] = "fixed-width";
            b["width"] = q.bin->width;
            b["origin"] = q.bin->origin;
        }
        out["bin"] = b;
    }
    if (q.order_by) {
        out["order_by"] = {{"measure", q.order_by->measure},
                           {"direction", q.order_by->direction == SortDirection::Ascending ? "asc" : "desc"}};
    }
    if (q.limit) {
        out["limit"] = *q.limit;
    }
    return out;
}

Json to_json(const QueryResult& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        Json keys = Json::array();
        for (const auto& k : row.keys) {
            keys.push_back(to_json(k));
        }
        Json values = Json::array();
        for (const auto& v : row.values) {
            values.push_back(optional_number(v));
        }
        rows.push_back({{"keys", keys}, {"values", values}});
    }
    Json total = Json::array();
    for (const auto& v : r.total) {
        total.push_back(optional_number(v));
    }
    return {{"key_columns", r.key_columns}, {"measures", r.measures}, {"rows", rows}, {"total", total}};
}

Json to_json(const FindingsReport& r) {
    Json findings = Json::array();
    for (const auto& f : r.findings) {
        findings.push_back({{"id", f.id},
                            {"description", f.description},
                            {"value", optional_number(f.value)},
                            {"unit", f.unit},
                            {"expected", optional_number(f.expected)},
                            {"tolerance", optional_number(f.tolerance)},
                            {"status", to_string(f.status)},
                            {"note", f.note}});
    }
    return {{"fingerprint",
             {{"source", r.fingerprint.source},
              {"fact_rows", r.fingerprint.fact_rows},
              {"rejected_rows", r.fingerprint.rejected_rows},
              {"checksum", r.fingerprint.checksum}}},
            {"generated_at", r.generated_at},
            {"findings", findings},
            {"summary",
             {{"match", r.count(FindingStatus::Match)},
              {"mismatch", r.count(FindingStatus::Mismatch)},
              {"not_comparable", r.count(FindingStatus::NotComparable)}}}};
}

Json to_json(const NarrativeScore& s) {
    Json scores = Json::object();
    for (std::size_t i = 0; i < kElementCount; ++i) {
        scores[to_string(static_cast<Element>(i))] = s.scores[i];
    }
    Json gaps = Json::array();
    for (const auto& g : s.gaps) {
        gaps.push_back({{"element", to_string(g.element)}, {"description", g.description}});
    }
    return {{"scores", scores},
            {"gaps", gaps},
            {"structural",
             {{"annotation_count", s.structural.annotation_count},
              {"whitespace_ratio", s.structural.whitespace_ratio},
              {"semantic_color_coverage", s.structural.semantic_color_coverage},
              {"measure_count", s.structural.measure_count}}},
            {"all_ones", s.all_ones()}};
}

Json to_json(const std::vector<Violation>& v) {
    Json out = Json::array();
    for (const auto& x : v) {
        out.push_back({{"path", x.path}, {"message", x.message}});
    }
    return out;
}

Json to_json(const std::vector<SpecChange>& changes) {
    Json out = Json::array();
    for (const auto& c : changes) {
        Json j = {{"kind", to_string(c.kind)}, {"aspect", c.aspect}, {"item", c.item}};
        if (c.kind == SpecChange::Kind::Delta) {
            j["delta"] = c.delta;
        }
        out.push_back(j);
    }
    return out;
}

namespace {

const char* sign_name(ColorRule::Sign s) {
    switch (s) {
    case ColorRule::Sign::Negative:
        return "negative";
    case ColorRule::Sign::NonNegative:
        return "non-negative";
    case ColorRule::Sign::Positive:
        return "positive";
    }
    return "?";
}

std::optional<ColorRule::Sign> parse_sign(std::string_view s) {
    if (s == "negative") {
        return ColorRule::Sign::Negative;
    }
    if (s == "non-negative") {
        return ColorRule::Sign::NonNegative;
    }
    if (s == "positive") {
        return ColorRule::Sign::Positive;
    }
    return std::nullopt;
}

} // namespace

Json to_json(const DashboardSpec& spec) {
    auto builtin = register_builtin_catalog();
    Json catalog = Json::array();
    for (const auto& e : spec.catalog_entries) {
        const auto* b = builtin.find(e.name);
        if (b != nullptr && b->source == e.source) {
            catalog.push_back(e.name);
        } else {
            catalog.push_back({{"name", e.name}, {"expression", e.source}});
        }
    }
    Json narrative = Json::object();
    if (spec.narrative.hook) {
        narrative["hook"] = {{"headline_measures", {spec.narrative.hook->first_measure, spec.narrative.hook->second_measure}},
                             {"tension_text", spec.narrative.hook->tension_text}};
    }
    narrative["declared_flow"] = Json::array();
    for (auto p : spec.narrative.declared_flow) {
        narrative["declared_flow"].push_back(to_string(p));
    }
    narrative["questions"] = spec.narrative.questions;

    Json sections = Json::array();
    for (const auto& s : spec.sections) {
        Json visuals = Json::array();
        for (const auto& v : s.visuals) {
            Json annotations = Json::array();
            for (const auto& a : v.annotations) {
                annotations.push_back({{"text", a.text},
                                       {"kind", to_string(a.kind)},
                                       {"anchor", {{"x", a.anchor_x}, {"y", a.anchor_y}}},
                                       {"layer", to_string(a.layer)}});
            }
            Json rules = Json::array();
            for (const auto& r : v.color_rules) {
                Json when;
                if (r.measure_sign) {
                    when = {{"measure", r.measure_sign->measure}, {"sign", sign_name(r.measure_sign->sign)}};
                } else if (r.category_match) {
                    when = {{"column", r.category_match->column}, {"in", r.category_match->values}};
                }
                rules.push_back({{"when", when}, {"role", to_string(r.role)}});
            }
            Json vj = {{"kind", to_string(v.kind)},
                       {"title", v.title},
                       {"query", to_json(v.query)},
                       {"layout", {{"x", v.layout.x}, {"y", v.layout.y}, {"w", v.layout.w}, {"h", v.layout.h}}},
                       {"annotations", annotations},
                       {"color_rules", rules}};
            if (v.emphasis) {
                vj["emphasis"] = {{"target", v.emphasis->target},
                                  {"style", to_string(v.emphasis->style)},
                                  {"rationale", v.emphasis->rationale}};
            }
            visuals.push_back(vj);
        }
        Json sj = {{"heading", s.heading}, {"purpose", to_string(s.purpose)}, {"visuals", visuals}};
        if (s.question) {
            sj["question"] = *s.question;
        }
        sections.push_back(sj);
    }
    return {{"version_label", spec.version_label},
            {"title", spec.title},
            {"canvas", {{"width", spec.canvas_width}, {"height", spec.canvas_height}}},
            {"catalog", catalog},
            {"narrative", narrative},
            {"sections", sections}};
}

Json schema_to_json(const StarSchema& schema) {
    auto table_json = [](const ColumnTable& t) {
        Json cols = Json::array();
        for (const auto& c : t.columns()) {
            cols.push_back({{"name", c.name()}, {"kind", to_string(c.kind())}});
        }
        Json j = {{"name", t.name()}, {"row_count", t.row_count()}, {"columns", cols}};
        j["key"] = t.key_column() ? Json(*t.key_column()) : Json(nullptr);
        return j;
    };
    Json tables = Json::array();
    tables.push_back(table_json(schema.fact()));
    for (const auto& d : schema.dimensions()) {
        tables.push_back(table_json(d));
    }
    Json rels = Json::array();
    for (const auto& r : schema.relationships()) {
        rels.push_back({{"fact_column", r.fact_column}, {"dimension", r.dimension}, {"key_column", r.key_column}});
    }
    MeasureCatalog none;
    Evaluator ev(schema, none);
    auto distinct = [&](const char* column) -> Json {
        try {
            return ev.evaluate(parse(fmt::format("DISTINCTCOUNT({})", column)), FilterContext{});
        } catch (const EmptyAggregation&) {
            return 0;
        }
    };
    const auto& m = schema.metadata();
    return {{"tables", tables},
            {"relationships", rels},
            {"fact_rows", schema.row_count()},
            {"distinct_orders", distinct("OrderID")},
            {"distinct_customers", distinct("Customer[CustomerID]")},
            {"distinct_skus", distinct("Product[ProductID]")},
            {"metadata",
             {{"source_path", m.source_path},
              {"raw_rows", m.raw_rows},
              {"rejected_rows", m.rejected_rows},
              {"encoding_fallbacks", m.encoding_fallbacks},
              {"date_format", m.date_format},
              {"shipping_payment_source", m.shipping_payment_source},
              {"fee_table_digest", m.fee_table_digest}}}};
}

// ---------------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------------

namespace {

ColumnRef column_ref(const Json& j, const std::string& path) {
    auto text = as_string(j, path);
    if (text.empty()) {
        bad(path, "empty column reference");
    }
    return ColumnRef::parse(text);
}

std::string value_text(const Json& j, const std::string& path) {
    if (j.is_string()) {
        return j.get<std::string>();
    }
    if (j.is_number()) {
        return fmt::format("{}", j.get<double>());
    }
    bad(path, "expected a string or number");
}

double bound(const Json& r, const char* key, double dflt, const std::string& path) {
    const auto* v = optional_field(r, key);
    return v ? as_number(*v, path + "." + key) : dflt;
}

} // namespace

FilterContext filter_context_from_json(const Json& j, const std::string& path) {
    FilterContext ctx;
    if (j.is_null()) {
        return ctx;
    }
    as_array(j, path);
    for (std::size_t i = 0; i < j.size(); ++i) {
        auto p = idx(path, i);
        const auto& f = j[i];
        check_keys(f, p, {"column", "in", "range"});
        auto col = column_ref(require(f, "column", p), p + ".column");
        bool has_in = f.contains("in"), has_range = f.contains("range");
        if (has_in == has_range) {
            bad(p, "a filter needs exactly one of \"in\" or \"range\"");
        }
        if (has_in) {
            const auto& values = as_array(f["in"], p + ".in");
            std::vector<std::string> vs;
            for (std::size_t k = 0; k < values.size(); ++k) {
                vs.push_back(value_text(values[k], idx(p + ".in", k)));
            }
            ctx.add(ColumnPredicate::in(col, std::move(vs)));
        } else {
            const auto& r = f["range"];
            auto rp = p + ".range";
            check_keys(r, rp, {"lo", "hi", "lo_inclusive", "hi_inclusive"});
            Range range;
            range.lo = bound(r, "lo", range.lo, rp);
            range.hi = bound(r, "hi", range.hi, rp);
            if (const auto* v = optional_field(r, "lo_inclusive")) {
                range.lo_inclusive = as_bool(*v, rp + ".lo_inclusive");
            }
            if (const auto* v = optional_field(r, "hi_inclusive")) {
                range.hi_inclusive = as_bool(*v, rp + ".hi_inclusive");
            }
            if (std::isnan(range.lo) || std::isnan(range.hi)) {
                bad(rp, "bounds must be numbers");
            }
            ctx.add(ColumnPredicate::between(col, range));
        }
    }
    return ctx;
}

GroupQuery group_query_from_json(const Json& j, const std::string& path) {
    check_keys(j, path, {"group_by", "measures", "filters", "bin", "order_by", "limit"});
    GroupQuery q;
    if (const auto* g = optional_field(j, "group_by")) {
        as_array(*g, path + ".group_by");
        for (std::size_t i = 0; i < g->size(); ++i) {
            q.group_by.push_back(column_ref((*g)[i], idx(path + ".group_by", i)));
        }
    }
    const auto& ms = as_array(require(j, "measures", path), path + ".measures");
    if (ms.empty()) {
        bad(path + ".measures", "at least one measure is required");
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
        q.measures.push_back(as_string(ms[i], idx(path + ".measures", i)));
    }
    if (const auto* f = optional_field(j, "filters")) {
        q.filters = filter_context_from_json(*f, path + ".filters");
    }
    if (const auto* b = optional_field(j, "bin")) {
        auto bp = path + ".bin";
        check_keys(*b, bp, {"column", "mode", "width", "origin"});
        BinSpec spec;
        spec.column = column_ref(require(*b, "column", bp), bp + ".column");
        auto mode = as_string(require(*b, "mode", bp), bp + ".mode");
        if (mode == "distinct-values") {
            spec.mode = BinSpec::Mode::DistinctValues;
        } else if (mode == "fixed-width") {
            spec.mode = BinSpec::Mode::FixedWidth;
            spec.width = as_number(require(*b, "width", bp), bp + ".width");
            if (const auto* o = optional_field(*b, "origin")) {
                spec.origin = as_number(*o, bp + ".origin");
            }
        } else {
            bad(bp + ".mode", "expected \"distinct-values\" or \"fixed-width\"");
        }
        q.bin = spec;
    }
    if (const auto* o = optional_field(j, "order_by")) {
        auto op = path + ".order_by";
        check_keys(*o, op, {"measure", "direction"});
        OrderBy ob;
        ob.measure = as_string(require(*o, "measure", op), op + ".measure");
        if (const auto* d = optional_field(*o, "direction")) {
            auto dir = as_string(*d, op + ".direction");
            if (dir == "asc") {
                ob.direction = SortDirection::Ascending;
            } else if (dir != "desc") {
                bad(op + ".direction", "expected \"asc\" or \"desc\"");
            }
        }
        q.order_by = ob;
    }
    if (const auto* l = optional_field(j, "limit")) {
        if (!l->is_number_integer() || l->get<long long>() < 0) {
            bad(path + ".limit", "expected a non-negative integer");
        }
        q.limit = l->get<std::size_t>();
    }
    return q;
}

FindingsReport findings_report_from_json(const Json& j) {
    FindingsReport r;
    const auto& fp = require(j, "fingerprint", "report");
    r.fingerprint.source = as_string(require(fp, "source", "fingerprint"), "fingerprint.source");
    r.fingerprint.fact_rows = require(fp, "fact_rows", "fingerprint").get<std::uint64_t>();
    r.fingerprint.rejected_rows = require(fp, "rejected_rows", "fingerprint").get<std::uint64_t>();
    r.fingerprint.checksum = as_string(require(fp, "checksum", "fingerprint"), "fingerprint.checksum");
    r.generated_at = as_string(require(j, "generated_at", "report"), "generated_at");
    const auto& fs = as_array(require(j, "findings", "report"), "findings");
    auto opt = [](const Json& f, const char* key) -> std::optional<double> {
        const auto* v = optional_field(f, key);
        return v ? std::optional(v->get<double>()) : std::nullopt;
    };
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto& f = fs[i];
        auto p = idx("findings", i);
        Finding x;
        x.id = as_string(require(f, "id", p), p + ".id");
        x.description = as_string(require(f, "description", p), p + ".description");
        x.unit = as_string(require(f, "unit", p), p + ".unit");
        x.note = as_string(require(f, "note", p), p + ".note");
        x.value = opt(f, "value");
        x.expected = opt(f, "expected");
        x.tolerance = opt(f, "tolerance");
        auto status = as_string(require(f, "status", p), p + ".status");
        if (status == "match") {
            x.status = FindingStatus::Match;
        } else if (status == "mismatch") {
            x.status = FindingStatus::Mismatch;
        } else if (status == "not-comparable") {
            x.status = FindingStatus::NotComparable;
        } else {
            bad(p + ".status", "unknown status " + status);
        }
        r.findings.push_back(std::move(x));
    }
    return r;
}

DashboardSpec spec_from_json(const Json& j) {
    Problems pr;
    DashboardSpec spec;
    if (!j.is_object()) {
        throw SpecFormatError({"$: expected an object"});
    }
    pr.attempt([&] { check_keys(j, "$", {"version_label", "title", "canvas", "catalog", "narrative", "sections"}); });
    pr.attempt([&] { spec.version_label = as_string(require(j, "version_label", "$"), "version_label"); });
    pr.attempt([&] { spec.title = as_string(require(j, "title", "$"), "title"); });
    pr.attempt([&] {
        const auto& c = require(j, "canvas", "$");
        check_keys(c, "canvas", {"width", "height"});
        spec.canvas_width = as_number(require(c, "width", "canvas"), "canvas.width");
        spec.canvas_height = as_number(require(c, "height", "canvas"), "canvas.height");
        if (!(spec.canvas_width > 0 && spec.canvas_height > 0)) {
            bad("canvas", "width and height must be positive");
        }
    });

    pr.attempt([&] {
        const auto& cat = as_array(require(j, "catalog", "$"), "catalog");
        auto builtin = register_builtin_catalog();
        for (std::size_t i = 0; i < cat.size(); ++i) {
            auto p = idx("catalog", i);
            pr.attempt([&] {
                if (cat[i].is_string()) {
                    auto name = cat[i].get<std::string>();
                    const auto* e = builtin.find(name);
                    if (e == nullptr) {
                        bad(p, "\"" + name + "\" is not a builtin measure; give {\"name\", \"expression\"}");
                    }
                    spec.catalog_entries.push_back(*e);
                } else {
                    check_keys(cat[i], p, {"name", "expression"});
                    auto name = as_string(require(cat[i], "name", p), p + ".name");
                    auto source = as_string(require(cat[i], "expression", p), p + ".expression");
                    try {
                        spec.catalog_entries.push_back({name, source, parse(source)});
                    } catch (const Error& e) {
                        bad(p + ".expression", e.what());
                    }
                }
            });
        }
    });

    pr.attempt([&] {
        const auto& n = require(j, "narrative", "$");
        check_keys(n, "narrative", {"hook", "declared_flow", "questions"});
        if (const auto* h = optional_field(n, "hook")) {
            pr.attempt([&] {
                check_keys(*h, "narrative.hook", {"headline_measures", "tension_text"});
                const auto& hm = as_array(require(*h, "headline_measures", "narrative.hook"),
                                          "narrative.hook.headline_measures");
                if (hm.size() != 2) {
                    bad("narrative.hook.headline_measures", "expected exactly two measure names");
                }
                Hook hook;
                hook.first_measure = as_string(hm[0], "narrative.hook.headline_measures[0]");
                hook.second_measure = as_string(hm[1], "narrative.hook.headline_measures[1]");
                hook.tension_text =
                    as_string(require(*h, "tension_text", "narrative.hook"), "narrative.hook.tension_text");
                spec.narrative.hook = hook;
            });
        }
        if (const auto* f = optional_field(n, "declared_flow")) {
            as_array(*f, "narrative.declared_flow");
            for (std::size_t i = 0; i < f->size(); ++i) {
                pr.attempt([&] {
                    spec.narrative.declared_flow.push_back(
                        enum_field<Purpose>((*f)[i], idx("narrative.declared_flow", i), parse_purpose, "purpose"));
                });
            }
        }
        if (const auto* q = optional_field(n, "questions")) {
            as_array(*q, "narrative.questions");
            for (std::size_t i = 0; i < q->size(); ++i) {
                pr.attempt([&] { spec.narrative.questions.push_back(as_string((*q)[i], idx("narrative.questions", i))); });
            }
        }
    });

    pr.attempt([&] {
        const auto& secs = as_array(require(j, "sections", "$"), "sections");
        for (std::size_t si = 0; si < secs.size(); ++si) {
            auto sp = idx("sections", si);
            const auto& sj = secs[si];
            Section s;
            pr.attempt([&] { check_keys(sj, sp, {"heading", "purpose", "question", "visuals"}); });
            pr.attempt([&] { s.heading = as_string(require(sj, "heading", sp), sp + ".heading"); });
            pr.attempt([&] {
                s.purpose = enum_field<Purpose>(require(sj, "purpose", sp), sp + ".purpose", parse_purpose, "purpose");
            });
            pr.attempt([&] {
                if (const auto* q = optional_field(sj, "question")) {
                    s.question = as_string(*q, sp + ".question");
                }
            });
            pr.attempt([&] {
                const auto& vis = as_array(require(sj, "visuals", sp), sp + ".visuals");
                for (std::size_t vi = 0; vi < vis.size(); ++vi) {
                    auto vp = idx(sp + ".visuals", vi);
                    const auto& vj = vis[vi];
                    Visual v;
                    pr.attempt([&] {
                        check_keys(vj, vp,
                                   {"kind", "title", "query", "layout", "annotations", "color_rules", "emphasis"});
                    });
                    pr.attempt([&] {
                        v.kind = enum_field<VisualKind>(require(vj, "kind", vp), vp + ".kind", parse_visual_kind,
                                                        "visual kind");
                    });
                    pr.attempt([&] {
                        if (const auto* t = optional_field(vj, "title")) {
                            v.title = as_string(*t, vp + ".title");
                        }
                    });
                    pr.attempt([&] { v.query = group_query_from_json(require(vj, "query", vp), vp + ".query"); });
                    pr.attempt([&] {
                        const auto& l = require(vj, "layout", vp);
                        auto lp = vp + ".layout";
                        check_keys(l, lp, {"x", "y", "w", "h"});
                        v.layout = {as_number(require(l, "x", lp), lp + ".x"), as_number(require(l, "y", lp), lp + ".y"),
                                    as_number(require(l, "w", lp), lp + ".w"), as_number(require(l, "h", lp), lp + ".h")};
                    });
                    if (const auto* as = optional_field(vj, "annotations")) {
                        pr.attempt([&] {
                            as_array(*as, vp + ".annotations");
                            for (std::size_t ai = 0; ai < as->size(); ++ai) {
                                auto ap = idx(vp + ".annotations", ai);
                                pr.attempt([&] {
                                    const auto& aj = (*as)[ai];
                                    check_keys(aj, ap, {"text", "kind", "anchor", "layer"});
                                    Annotation a;
                                    a.text = as_string(require(aj, "text", ap), ap + ".text");
                                    a.kind = enum_field<AnnotationKind>(require(aj, "kind", ap), ap + ".kind",
                                                                        parse_annotation_kind, "annotation kind");
                                    if (const auto* an = optional_field(aj, "anchor")) {
                                        check_keys(*an, ap + ".anchor", {"x", "y"});
                                        a.anchor_x = as_number(require(*an, "x", ap + ".anchor"), ap + ".anchor.x");
                                        a.anchor_y = as_number(require(*an, "y", ap + ".anchor"), ap + ".anchor.y");
                                    }
                                    if (const auto* la = optional_field(aj, "layer")) {
                                        a.layer = enum_field<AnnotationLayer>(*la, ap + ".layer", parse_annotation_layer,
                                                                              "annotation layer");
                                    }
                                    v.annotations.push_back(a);
                                });
                            }
                        });
                    }
                    if (const auto* rs = optional_field(vj, "color_rules")) {
                        pr.attempt([&] {
                            as_array(*rs, vp + ".color_rules");
                            for (std::size_t ri = 0; ri < rs->size(); ++ri) {
                                auto rp = idx(vp + ".color_rules", ri);
                                pr.attempt([&] {
                                    const auto& rj = (*rs)[ri];
                                    check_keys(rj, rp, {"when", "role"});
                                    ColorRule r;
                                    r.role = enum_field<ColorRole>(require(rj, "role", rp), rp + ".role",
                                                                   parse_color_role, "color role");
                                    const auto& w = require(rj, "when", rp);
                                    auto wp = rp + ".when";
                                    if (w.contains("measure")) {
                                        check_keys(w, wp, {"measure", "sign"});
                                        ColorRule::MeasureSign ms;
                                        ms.measure = as_string(w["measure"], wp + ".measure");
                                        ms.sign = enum_field<ColorRule::Sign>(require(w, "sign", wp), wp + ".sign",
                                                                              parse_sign, "sign");
                                        r.measure_sign = ms;
                                    } else if (w.contains("column")) {
                                        check_keys(w, wp, {"column", "in"});
                                        ColorRule::CategoryMatch cm;
                                        cm.column = as_string(w["column"], wp + ".column");
                                        const auto& in = as_array(require(w, "in", wp), wp + ".in");
                                        for (std::size_t k = 0; k < in.size(); ++k) {
                                            cm.values.push_back(value_text(in[k], idx(wp + ".in", k)));
                                        }
                                        r.category_match = cm;
                                    } else {
                                        bad(wp, "expected {\"measure\", \"sign\"} or {\"column\", \"in\"}");
                                    }
                                    v.color_rules.push_back(r);
                                });
                            }
                        });
                    }
                    if (const auto* e = optional_field(vj, "emphasis")) {
                        pr.attempt([&] {
                            auto ep = vp + ".emphasis";
                            check_keys(*e, ep, {"target", "style", "rationale"});
                            EmphasisRule er;
                            er.target = as_string(require(*e, "target", ep), ep + ".target");
                            er.style = enum_field<EmphasisStyle>(require(*e, "style", ep), ep + ".style",
                                                                 parse_emphasis_style, "emphasis style");
                            er.rationale = as_string(require(*e, "rationale", ep), ep + ".rationale");
                            v.emphasis = er;
                        });
                    }
                    s.visuals.push_back(std::move(v));
                }
            });
            spec.sections.push_back(std::move(s));
        }
    });

    if (!pr.list.empty()) {
        throw SpecFormatError(std::move(pr.list));
    }
    return spec;
}

} // namespace storeboard::wire
