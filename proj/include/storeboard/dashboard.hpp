#pragma once

#include "storeboard/error.hpp"
#include "storeboard/measure.hpp"
#include "storeboard/query.hpp"
#include "storeboard/star_model.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storeboard {

enum class Purpose {
    KpiOverview,
    CategoryBreakdown,
    MarketComparison,
    DiscountAnalysis,
    ShippingDiagnostics,
    CustomerAnalysis,
    Other,
};

enum class VisualKind { KpiCard, Bar, Waterfall, Bubble, DualAxis, StackedBar, Donut, Table };
enum class AnnotationKind { Label, Callout, Question, Interpretation };
enum class AnnotationLayer { Always, ExpertToggle };
enum class ColorRole { LossRed, ProfitGreen, PrimaryBlue, SecondaryGrey };
enum class EmphasisStyle { BorderHighlight, DimOthers };

const char* to_string(Purpose p);
const char* to_string(VisualKind k);
const char* to_string(AnnotationKind k);
const char* to_string(AnnotationLayer l);
const char* to_string(ColorRole r);
const char* to_string(EmphasisStyle s);
std::optional<Purpose> parse_purpose(std::string_view s);
std::optional<VisualKind> parse_visual_kind(std::string_view s);
std::optional<AnnotationKind> parse_annotation_kind(std::string_view s);
std::optional<AnnotationLayer> parse_annotation_layer(std::string_view s);
std::optional<ColorRole> parse_color_role(std::string_view s);
std::optional<EmphasisStyle> parse_emphasis_style(std::string_view s);

struct Box {
    double x = 0, y = 0, w = 0, h = 0;
    bool operator==(const Box&) const = default;
};

struct Annotation {
    std::string text;
    AnnotationKind kind = AnnotationKind::Label;
    double anchor_x = 0; // visual-relative, 0..1
    double anchor_y = 0;
    AnnotationLayer layer = AnnotationLayer::Always;
    bool operator==(const Annotation&) const = default;
};

// Either a measure-sign test ("Total Profit" negative) or a match on a group
// key column. The first matching rule colors a datum.
struct ColorRule {
    enum class Sign { Negative, NonNegative, Positive };
    struct MeasureSign {
        std::string measure;
        Sign sign = Sign::Negative;
        bool operator==(const MeasureSign&) const = default;
    };
    struct CategoryMatch {
        std::string column;
        std::vector<std::string> values;
        bool operator==(const CategoryMatch&) const = default;
    };
    std::optional<MeasureSign> measure_sign;
    std::optional<CategoryMatch> category_match;
    ColorRole role = ColorRole::PrimaryBlue;

    bool matches(const QueryResult& result, const ResultRow& row) const;
    bool operator==(const ColorRule&) const = default;
};

struct EmphasisRule {
    std::string target;
    EmphasisStyle style = EmphasisStyle::BorderHighlight;
    std::string rationale;
    bool operator==(const EmphasisRule&) const = default;
};

struct Visual {
    VisualKind kind = VisualKind::Bar;
    std::string title;
    GroupQuery query;
    Box layout;
    std::vector<Annotation> annotations;
    std::vector<ColorRule> color_rules;
    std::optional<EmphasisRule> emphasis;
    bool operator==(const Visual&) const = default;
};

struct Section {
    std::string heading;
    Purpose purpose = Purpose::Other;
    std::optional<std::string> question;
    std::vector<Visual> visuals;
    bool operator==(const Section&) const = default;
};

struct Hook {
    std::string first_measure;
    std::string second_measure;
    std::string tension_text;
    bool operator==(const Hook&) const = default;
};

struct NarrativeMeta {
    std::optional<Hook> hook;
    std::vector<Purpose> declared_flow;
    std::vector<std::string> questions;
    bool operator==(const NarrativeMeta&) const = default;
};

struct DashboardSpec {
    std::string version_label;
    std::string title;
    double canvas_width = 1000;
    double canvas_height = 750;
    std::vector<Section> sections;
    // Names from the builtin catalog, or custom measures with their source.
    std::vector<MeasureCatalog::Entry> catalog_entries;
    NarrativeMeta narrative;

    // Builds the catalog from catalog_entries. Throws the catalog's errors.
    MeasureCatalog catalog() const;
    std::size_t annotation_count() const;
    bool operator==(const DashboardSpec& other) const;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

// Structural problems found while reading a spec document, each with a JSON
// path ("sections[2].visuals[0].kind").
struct SpecFormatError : Error {
    explicit SpecFormatError(std::vector<std::string> problems);
    std::vector<std::string> problems;
};

// Throws SpecFormatError.
DashboardSpec parse_spec(std::string_view json_text);
// Throws FileNotFound, SpecFormatError.
DashboardSpec load_spec(const std::filesystem::path& path);
std::string spec_to_json_text(const DashboardSpec& spec);

// ---------------------------------------------------------------------------
// Validation and lint
// ---------------------------------------------------------------------------

struct Violation {
    std::string path;
    std::string message;
    bool operator==(const Violation&) const = default;
};

// Type invariants, plus (when a schema is given) that every query runs and
// every emphasis target appears among its visual's groups.
std::vector<Violation> validate(const DashboardSpec& spec, const StarSchema* schema = nullptr);

enum class Element {
    Hook,
    ProgressiveFocus,
    IterativeQuestioning,
    AnnotationsSecondVoice,
    QuantifiedComparisons,
    PacingHierarchy,
};
inline constexpr std::size_t kElementCount = 6;
const char* to_string(Element e);

struct Gap {
    Element element;
    std::string description;
    bool operator==(const Gap&) const = default;
};

struct StructuralMetrics {
    std::size_t annotation_count = 0;
    double whitespace_ratio = 0;
    double semantic_color_coverage = 0;
    std::size_t measure_count = 0;
    bool operator==(const StructuralMetrics&) const = default;
};

struct NarrativeScore {
    std::array<double, kElementCount> scores{}; // indexed by Element
    std::vector<Gap> gaps;
    StructuralMetrics structural;

    double score(Element e) const { return scores[static_cast<std::size_t>(e)]; }
    bool all_ones() const;
    bool operator==(const NarrativeScore&) const = default;
};

// Element scoring:
//   hook                    1 if the hook's two measures both appear in a
//                           kpi-overview section
//   progressive focus       LCS(declared flow, section purposes) / |flow|,
//                           halved when the first section is not kpi-overview
//   iterative questioning   min(1, 2 * share of non-KPI sections carrying a
//                           question)
//   annotations             min(1, annotation count / 18)
//   quantified comparisons  share of bubble / dual-axis / stacked-bar visuals
//                           with a label or callout (1 when there are none)
//   pacing and hierarchy    whitespace 0.15 -> 0, 0.35 -> 1, linear between
NarrativeScore lint(const DashboardSpec& spec);

// 1 - union(layout boxes) / canvas area, exact.
double whitespace_ratio(const DashboardSpec& spec);
double union_area(const std::vector<Box>& boxes);

// Profit-sign visuals (those reading the Profit column) that carry both a
// loss-red and a profit-green sign rule, over all profit-sign visuals; 0
// when there are none.
double semantic_color_coverage(const DashboardSpec& spec);

struct SpecChange {
    enum class Kind { Added, Removed, Delta };
    Kind kind;
    std::string aspect; // measure, flow, section, annotations, color_coverage, whitespace
    std::string item;
    double delta = 0; // for Delta
    bool operator==(const SpecChange&) const = default;
};
const char* to_string(SpecChange::Kind k);

std::vector<SpecChange> diff_versions(const DashboardSpec& a, const DashboardSpec& b);

} // namespace storeboard
