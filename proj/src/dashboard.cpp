#include "storeboard/dashboard.hpp"

#include "storeboard/error.hpp"
#include "storeboard/wire.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace storeboard {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<const char*, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (s == names[i]) {
            return static_cast<E>(i);
        }
    }
    return std::nullopt;
}

constexpr std::array<const char*, 7> kPurposes{"kpi-overview",         "category-breakdown", "market-comparison",
                                               "discount-analysis",    "shipping-diagnostics",
                                               "customer-analysis",    "other"};
constexpr std::array<const char*, 8> kVisualKinds{"kpi-card",   "bar",         "waterfall", "bubble",
                                                  "dual-axis",  "stacked-bar", "donut",     "table"};
constexpr std::array<const char*, 4> kAnnotationKinds{"label", "callout", "question", "interpretation"};
constexpr std::array<const char*, 2> kLayers{"always", "expert-toggle"};
constexpr std::array<const char*, 4> kRoles{"loss-red", "profit-green", "primary-blue", "secondary-grey"};
constexpr std::array<const char*, 2> kStyles{"border-highlight", "dim-others"};
constexpr std::array<const char*, 6> kElements{"hook",
                                               "progressive-focus",
                                               "iterative-questioning",
                                               "annotations-second-voice",
                                               "quantified-comparisons",
                                               "pacing-hierarchy"};

} // namespace

const char* to_string(Purpose p) { return kPurposes[static_cast<std::size_t>(p)]; }
const char* to_string(VisualKind k) { return kVisualKinds[static_cast<std::size_t>(k)]; }
const char* to_string(AnnotationKind k) { return kAnnotationKinds[static_cast<std::size_t>(k)]; }
const char* to_string(AnnotationLayer l) { return kLayers[static_cast<std::size_t>(l)]; }
const char* to_string(ColorRole r) { return kRoles[static_cast<std::size_t>(r)]; }
const char* to_string(EmphasisStyle s) { return kStyles[static_cast<std::size_t>(s)]; }
const char* to_string(Element e) { return kElements[static_cast<std::size_t>(e)]; }

std::optional<Purpose> parse_purpose(std::string_view s) { return lookup<Purpose>(kPurposes, s); }
std::optional<VisualKind> parse_visual_kind(std::string_view s) { return lookup<VisualKind>(kVisualKinds, s); }
std::optional<AnnotationKind> parse_annotation_kind(std::string_view s) {
    return lookup<AnnotationKind>(kAnnotationKinds, s);
}
std::optional<AnnotationLayer> parse_annotation_layer(std::string_view s) {
    return lookup<AnnotationLayer>(kLayers, s);
}
std::optional<ColorRole> parse_color_role(std::string_view s) { return lookup<ColorRole>(kRoles, s); }
std::optional<EmphasisStyle> parse_emphasis_style(std::string_view s) { return lookup<EmphasisStyle>(kStyles, s); }

const char* to_string(SpecChange::Kind k) {
    switch (k) {
    case SpecChange::Kind::Added:
        return "added";
    case SpecChange::Kind::Removed:
        return "removed";
    case SpecChange::Kind::Delta:
        return "delta";
    }
    return "?";
}

bool ColorRule::matches(const QueryResult& result, const ResultRow& row) const {
    if (measure_sign) {
        auto it = std::find(result.measures.begin(), result.measures.end(), measure_sign->measure);
        if (it == result.measures.end()) {
            return false;
        }
        const auto& v = row.values[static_cast<std::size_t>(it - result.measures.begin())];
        if (!v) {
            return false;
        }
        switch (measure_sign->sign) {
        case Sign::Negative:
            return *v < 0;
        case Sign::NonNegative:
            return *v >= 0;
        case Sign::Positive:
            return *v > 0;
        }
    }
    if (category_match) {
        auto want = ColumnRef::parse(category_match->column);
        for (std::size_t i = 0; i < result.key_columns.size(); ++i) {
            auto have = ColumnRef::parse(result.key_columns[i]);
            if (have.column != want.column || (!want.table.empty() && want.table != have.table)) {
                continue;
            }
            auto text = scalar_to_string(row.keys[i]);
            return std::find(category_match->values.begin(), category_match->values.end(), text) !=
                   category_match->values.end();
        }
    }
    return false;
}

MeasureCatalog DashboardSpec::catalog() const {
    MeasureCatalog c;
    for (const auto& e : catalog_entries) {
        c.add(e.name, e.source);
    }
    return c;
}

std::size_t DashboardSpec::annotation_count() const {
    std::size_t n = 0;
    for (const auto& s : sections) {
        for (const auto& v : s.visuals) {
            n += v.annotations.size();
        }
    }
    return n;
}

bool DashboardSpec::operator==(const DashboardSpec& other) const {
    if (catalog_entries.size() != other.catalog_entries.size()) {
        return false;
    }
    for (std::size_t i = 0; i < catalog_entries.size(); ++i) {
        if (catalog_entries[i].name != other.catalog_entries[i].name ||
            catalog_entries[i].source != other.catalog_entries[i].source) {
            return false;
        }
    }
    return version_label == other.version_label && title == other.title && canvas_width == other.canvas_width &&
           canvas_height == other.canvas_height && sections == other.sections && narrative == other.narrative;
}

SpecFormatError::SpecFormatError(std::vector<std::string> problems_)
    : Error("SpecFormatError", "invalid dashboard spec: " + (problems_.empty() ? std::string("?") : problems_[0]) +
                                   (problems_.size() > 1 ? fmt::format(" (+{} more)", problems_.size() - 1) : "")),
      problems(std::move(problems_)) {}

DashboardSpec parse_spec(std::string_view json_text) {
    wire::Json j;
    try {
        j = wire::Json::parse(json_text);
    } catch (const wire::Json::exception& e) {
        throw SpecFormatError({std::string("$: not valid JSON: ") + e.what()});
    }
    return wire::spec_from_json(j);
}

DashboardSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFound(path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_spec(buffer.str());
}

std::string spec_to_json_text(const DashboardSpec& spec) { return wire::to_json(spec).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

double union_area(const std::vector<Box>& boxes) {
    std::vector<double> xs, ys;
    for (const auto& b : boxes) {
        if (b.w > 0 && b.h > 0) {
            xs.insert(xs.end(), {b.x, b.x + b.w});
            ys.insert(ys.end(), {b.y, b.y + b.h});
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    // Coordinate compression: every grid cell is either fully covered or not.
    double area = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            double cx = (xs[i] + xs[i + 1]) / 2;
            double cy = (ys[j] + ys[j + 1]) / 2;
            bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) {
                return b.w > 0 && b.h > 0 && cx > b.x && cx < b.x + b.w && cy > b.y && cy < b.y + b.h;
            });
            if (covered) {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    return area;
}

double whitespace_ratio(const DashboardSpec& spec) {
    std::vector<Box> boxes;
    for (const auto& s : spec.sections) {
        for (const auto& v : s.visuals) {
            // Clip to the canvas.
            double x0 = std::clamp(v.layout.x, 0.0, spec.canvas_width);
            double y0 = std::clamp(v.layout.y, 0.0, spec.canvas_height);
            double x1 = std::clamp(v.layout.x + v.layout.w, 0.0, spec.canvas_width);
            double y1 = std::clamp(v.layout.y + v.layout.h, 0.0, spec.canvas_height);
            boxes.push_back({x0, y0, x1 - x0, y1 - y0});
        }
    }
    double canvas = spec.canvas_width * spec.canvas_height;
    return (canvas - union_area(boxes)) / canvas;
}

// ---------------------------------------------------------------------------
// Color coverage
// ---------------------------------------------------------------------------

namespace {

bool reads_profit(const MeasureCatalog& catalog, const std::string& name, std::set<std::string>& seen) {
    if (!seen.insert(name).second) {
        return false;
    }
    const auto* e = catalog.find(name);
    if (e == nullptr) {
        return false;
    }
    for (const auto& c : referenced_columns(e->expr)) {
        if (c.column == "Profit") {
            return true;
        }
    }
    for (const auto& r : referenced_measures(e->expr)) {
        if (reads_profit(catalog, r, seen)) {
            return true;
        }
    }
    return false;
}

bool is_profit_sign_visual(const MeasureCatalog& catalog, const Visual& v) {
    for (const auto& m : v.query.measures) {
        std::set<std::string> seen;
        if (reads_profit(catalog, m, seen)) {
            return true;
        }
    }
    return false;
}

bool has_sign_rule(const Visual& v, ColorRole role) {
    return std::any_of(v.color_rules.begin(), v.color_rules.end(),
                       [&](const ColorRule& r) { return r.role == role && r.measure_sign.has_value(); });
}

std::optional<MeasureCatalog> try_catalog(const DashboardSpec& spec) {
    try {
        return spec.catalog();
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace

double semantic_color_coverage(const DashboardSpec& spec) {
    auto catalog = try_catalog(spec);
    if (!catalog) {
        return 0;
    }
    std::size_t profit_visuals = 0, covered = 0;
    for (const auto& s : spec.sections) {
        for (const auto& v : s.visuals) {
            if (!is_profit_sign_visual(*catalog, v)) {
                continue;
            }
            ++profit_visuals;
            if (has_sign_rule(v, ColorRole::LossRed) && has_sign_rule(v, ColorRole::ProfitGreen)) {
                ++covered;
            }
        }
    }
    return profit_visuals == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(profit_visuals);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Violation> validate(const DashboardSpec& spec, const StarSchema* schema) {
    std::vector<Violation> out;
    auto add = [&](std::string path, std::string message) { out.push_back({std::move(path), std::move(message)}); };

    std::optional<MeasureCatalog> catalog;
    try {
        catalog = spec.catalog();
    } catch (const Error& e) {
        add("catalog", e.what());
    }
    auto known = [&](const std::string& m) { return catalog && catalog->contains(m); };

    if (!(spec.canvas_width > 0 && spec.canvas_height > 0)) {
        add("canvas", "width and height must be positive");
    }
    if (spec.sections.empty()) {
        add("sections", "a dashboard needs at least one section");
    }
    if (spec.narrative.hook) {
        const auto& h = *spec.narrative.hook;
        if (h.first_measure == h.second_measure) {
            add("narrative.hook.headline_measures", "the two headline measures must differ");
        }
        for (const auto* m : {&h.first_measure, &h.second_measure}) {
            if (!known(*m)) {
                add("narrative.hook.headline_measures", "measure [" + *m + "] is not in the spec's catalog");
            }
        }
    }

    for (std::size_t si = 0; si < spec.sections.size(); ++si) {
        const auto& s = spec.sections[si];
        auto sp = fmt::format("sections[{}]", si);
        if (s.visuals.empty()) {
            add(sp + ".visuals", "a section needs at least one visual");
        }
        for (std::size_t vi = 0; vi < s.visuals.size(); ++vi) {
            const auto& v = s.visuals[vi];
            auto vp = fmt::format("{}.visuals[{}]", sp, vi);
            for (const auto& m : v.query.measures) {
                if (!known(m)) {
                    add(vp + ".query.measures", "measure [" + m + "] is not in the spec's catalog");
                }
            }
            const auto& l = v.layout;
            if (!(l.w > 0 && l.h > 0 && l.x >= 0 && l.y >= 0 && l.x + l.w <= spec.canvas_width &&
                  l.y + l.h <= spec.canvas_height)) {
                add(vp + ".layout", "layout box must have positive size and lie within the canvas");
            }
            if (v.kind == VisualKind::DualAxis && v.query.measures.size() != 2) {
                add(vp, fmt::format("dual-axis visual carries {} measures, expected 2", v.query.measures.size()));
            }
            if (v.kind == VisualKind::Bubble && v.query.measures.size() < 3) {
                add(vp, fmt::format("bubble visual encodes {} quantities, expected at least 3",
                                    v.query.measures.size()));
            }
            for (std::size_t ai = 0; ai < v.annotations.size(); ++ai) {
                if (v.annotations[ai].text.empty()) {
                    add(fmt::format("{}.annotations[{}].text", vp, ai), "annotation text is empty");
                }
            }
            for (std::size_t ri = 0; ri < v.color_rules.size(); ++ri) {
                const auto& r = v.color_rules[ri];
                auto rp = fmt::format("{}.color_rules[{}]", vp, ri);
                if (r.measure_sign &&
                    std::find(v.query.measures.begin(), v.query.measures.end(), r.measure_sign->measure) ==
                        v.query.measures.end()) {
                    add(rp, "rule tests measure [" + r.measure_sign->measure + "], which the visual does not show");
                }
                if (r.category_match) {
                    auto want = ColumnRef::parse(r.category_match->column);
                    bool grouped = std::any_of(v.query.group_by.begin(), v.query.group_by.end(), [&](const ColumnRef& g) {
                        return g.column == want.column && (want.table.empty() || g.table == want.table);
                    });
                    if (!grouped) {
                        add(rp, "rule matches column " + r.category_match->column + ", which the visual does not group by");
                    }
                }
                for (std::size_t earlier = 0; earlier < ri; ++earlier) {
                    const auto& e = v.color_rules[earlier];
                    if (e.measure_sign == r.measure_sign && e.category_match == r.category_match) {
                        add(rp, fmt::format("same predicate as color_rules[{}]; first match wins, so it never applies",
                                            earlier));
                        break;
                    }
                }
            }
            if (v.emphasis && v.emphasis->target.empty()) {
                add(vp + ".emphasis.target", "emphasis target is empty");
            }

            if (schema != nullptr && catalog) {
                try {
                    auto result = run(*schema, *catalog, v.query);
                    if (v.emphasis && !v.emphasis->target.empty()) {
                        bool present = std::any_of(result.rows.begin(), result.rows.end(), [&](const ResultRow& row) {
                            return std::any_of(row.keys.begin(), row.keys.end(), [&](const Scalar& k) {
                                return scalar_to_string(k) == v.emphasis->target;
                            });
                        });
                        if (!present) {
                            add(vp + ".emphasis.target",
                                "emphasis target \"" + v.emphasis->target + "\" is not among the visual's groups");
                        }
                    }
                } catch (const Error& e) {
                    add(vp + ".query", e.what());
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lint
// ---------------------------------------------------------------------------

bool NarrativeScore::all_ones() const {
    return std::all_of(scores.begin(), scores.end(), [](double s) { return s == 1.0; });
}

namespace {

std::size_t lcs(const std::vector<Purpose>& a, const std::vector<Purpose>& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
        }
    }
    return t[a.size()][b.size()];
}

bool has_question(const Section& s) {
    if (s.question && !s.question->empty()) {
        return true;
    }
    for (const auto& v : s.visuals) {
        for (const auto& a : v.annotations) {
            if (a.kind == AnnotationKind::Question) {
                return true;
            }
        }
    }
    return false;
}

bool labels_values(const Visual& v) {
    return std::any_of(v.annotations.begin(), v.annotations.end(), [](const Annotation& a) {
        return a.kind == AnnotationKind::Label || a.kind == AnnotationKind::Callout;
    });
}

} // namespace

NarrativeScore lint(const DashboardSpec& spec) {
    NarrativeScore out;
    auto set = [&](Element e, double score, std::string gap) {
        score = std::clamp(score, 0.0, 1.0);
        out.scores[static_cast<std::size_t>(e)] = score;
        if (score < 1.0) {
            out.gaps.push_back({e, std::move(gap)});
        }
    };

    // Hook.
    if (!spec.narrative.hook) {
        set(Element::Hook, 0, "no hook: the narrative names no headline measure pair");
    } else {
        const auto& h = *spec.narrative.hook;
        std::set<std::string> shown;
        for (const auto& s : spec.sections) {
            if (s.purpose != Purpose::KpiOverview) {
                continue;
            }
            for (const auto& v : s.visuals) {
                shown.insert(v.query.measures.begin(), v.query.measures.end());
            }
        }
        std::vector<std::string> missing;
        for (const auto* m : {&h.first_measure, &h.second_measure}) {
            if (shown.count(*m) == 0) {
                missing.push_back("[" + *m + "]");
            }
        }
        set(Element::Hook, missing.empty() ? 1.0 : 0.0,
            fmt::format("hook measure {} not shown in a kpi-overview section", fmt::join(missing, " and ")));
    }

    // Progressive focus.
    {
        const auto& flow = spec.narrative.declared_flow;
        std::vector<Purpose> actual;
        for (const auto& s : spec.sections) {
            actual.push_back(s.purpose);
        }
        if (flow.empty()) {
            set(Element::ProgressiveFocus, 0, "no declared flow");
        } else {
            double score = static_cast<double>(lcs(flow, actual)) / static_cast<double>(flow.size());
            bool kpi_first = !actual.empty() && actual.front() == Purpose::KpiOverview;
            if (!kpi_first) {
                score *= 0.5;
            }
            set(Element::ProgressiveFocus, score,
                fmt::format("sections realize {} of {} declared steps in order{}", lcs(flow, actual), flow.size(),
                            kpi_first ? "" : "; the first section is not a kpi-overview"));
        }
    }

    // Iterative questioning.
    {
        std::size_t non_kpi = 0, asked = 0;
        for (const auto& s : spec.sections) {
            if (s.purpose == Purpose::KpiOverview) {
                continue;
            }
            ++non_kpi;
            asked += has_question(s) ? 1 : 0;
        }
        if (non_kpi == 0) {
            set(Element::IterativeQuestioning, 0, "no analytical sections to pose questions in");
        } else {
            set(Element::IterativeQuestioning, 2.0 * static_cast<double>(asked) / static_cast<double>(non_kpi),
                fmt::format("{} of {} analytical sections pose a question; half are needed", asked, non_kpi));
        }
    }

    // Annotations.
    out.structural.annotation_count = spec.annotation_count();
    set(Element::AnnotationsSecondVoice, static_cast<double>(out.structural.annotation_count) / 18.0,
        fmt::format("{} annotations; 18 carry the second voice", out.structural.annotation_count));

    // Quantified comparisons.
    {
        std::size_t comparisons = 0, labeled = 0;
        std::vector<std::string> unlabeled;
        for (const auto& s : spec.sections) {
            for (const auto& v : s.visuals) {
                if (v.kind == VisualKind::Bubble || v.kind == VisualKind::DualAxis || v.kind == VisualKind::StackedBar) {
                    ++comparisons;
                    if (labels_values(v)) {
                        ++labeled;
                    } else {
                        unlabeled.push_back(v.title.empty() ? to_string(v.kind) : v.title);
                    }
                }
            }
        }
        double score = comparisons == 0 ? 1.0 : static_cast<double>(labeled) / static_cast<double>(comparisons);
        set(Element::QuantifiedComparisons, score,
            fmt::format("comparison visuals without value labels: {}", fmt::join(unlabeled, ", ")));
    }

    // Pacing and hierarchy.
    out.structural.whitespace_ratio = whitespace_ratio(spec);
    set(Element::PacingHierarchy, (out.structural.whitespace_ratio - 0.15) / 0.20,
        fmt::format("whitespace ratio {:.3f}; 0.35 gives the reading path room", out.structural.whitespace_ratio));

    out.structural.semantic_color_coverage = semantic_color_coverage(spec);
    out.structural.measure_count = spec.catalog_entries.size();
    return out;
}

// ---------------------------------------------------------------------------
// Diff
// ---------------------------------------------------------------------------

std::vector<SpecChange> diff_versions(const DashboardSpec& a, const DashboardSpec& b) {
    std::vector<SpecChange> out;
    auto set_diff = [&](const std::string& aspect, const std::set<std::string>& x, const std::set<std::string>& y) {
        for (const auto& item : y) {
            if (x.count(item) == 0) {
                out.push_back({SpecChange::Kind::Added, aspect, item, 0});
            }
        }
        for (const auto& item : x) {
            if (y.count(item) == 0) {
                out.push_back({SpecChange::Kind::Removed, aspect, item, 0});
            }
        }
    };
    auto measures = [](const DashboardSpec& s) {
        std::set<std::string> out;
        for (const auto& e : s.catalog_entries) {
            out.insert(e.name);
        }
        return out;
    };
    auto flow = [](const DashboardSpec& s) {
        std::set<std::string> out;
        for (auto p : s.narrative.declared_flow) {
            out.insert(to_string(p));
        }
        return out;
    };
    auto sections = [](const DashboardSpec& s) {
        std::set<std::string> out;
        for (const auto& sec : s.sections) {
            out.insert(to_string(sec.purpose));
        }
        return out;
    };
    set_diff("measure", measures(a), measures(b));
    set_diff("flow", flow(a), flow(b));
    set_diff("section", sections(a), sections(b));

    auto delta = [&](const std::string& aspect, double x, double y) {
        if (x != y) {
            out.push_back({SpecChange::Kind::Delta, aspect, "", y - x});
        }
    };
    delta("annotations", static_cast<double>(a.annotation_count()), static_cast<double>(b.annotation_count()));
    delta("color_coverage", semantic_color_coverage(a), semantic_color_coverage(b));
    delta("whitespace", whitespace_ratio(a), whitespace_ratio(b));
    return out;
}

} // namespace storeboard
