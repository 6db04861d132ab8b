#include "storeboard/cli.hpp"

#include "storeboard/analytics.hpp"
#include "storeboard/dashboard.hpp"
#include "storeboard/error.hpp"
#include "storeboard/ingest.hpp"
#include "storeboard/server.hpp"
#include "storeboard/snapshot.hpp"
#include "storeboard/wire.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <csignal>
#include <ostream>
#include <pthread.h>

namespace storeboard {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, std::string_view what) {
    auto t = trim(text);
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw BadRequest(fmt::format("{}: \"{}\" is not a number", what, text));
    }
    return v;
}

ColumnRef parse_column(std::string_view text, std::string_view what) {
    auto t = trim(text);
    if (t.empty()) {
        throw BadRequest(fmt::format("{}: missing column name", what));
    }
    return ColumnRef::parse(t);
}

// A CSV path is ingested on the fly; anything else is read as a snapshot.
StarSchema load_data(const std::filesystem::path& path, const FeeTable& fees) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") {
        return build_star_schema(load_csv(path, superstore_columns()), fees);
    }
    return read_snapshot(path);
}

FeeTable fees_from(const std::string& path) {
    return path.empty() ? FeeTable::calibrated_default() : FeeTable::load(path);
}

struct IngestArgs {
    std::string csv;
    std::string fees;
    std::string out;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
    auto raw = load_csv(a.csv, superstore_columns());
    auto schema = build_star_schema(raw, fees_from(a.fees));
    write_snapshot(schema, a.out);
    auto j = wire::schema_to_json(schema);
    const auto& m = schema.metadata();
    fmt::print(out, "source            {}\n", m.source_path);
    fmt::print(out, "rows              {}\n", schema.row_count());
    fmt::print(out, "rejected rows     {}\n", m.rejected_rows);
    fmt::print(out, "orders            {}\n", j["distinct_orders"].get<std::uint64_t>());
    fmt::print(out, "customers         {}\n", j["distinct_customers"].get<std::uint64_t>());
    fmt::print(out, "skus              {}\n", j["distinct_skus"].get<std::uint64_t>());
    fmt::print(out, "date format       {}\n", m.date_format);
    fmt::print(out, "shipping payment  {}\n", m.shipping_payment_source);
    fmt::print(out, "snapshot          {}\n", a.out);
    for (std::size_t i = 0; i < raw.rejected.size() && i < 20; ++i) {
        fmt::print(err, "rejected line {}: {}\n", raw.rejected[i].line, raw.rejected[i].reason);
    }
    if (raw.rejected.size() > 20) {
        fmt::print(err, "... {} more rejected lines\n", raw.rejected.size() - 20);
    }
    if (raw.encoding_fallbacks > 0) {
        fmt::print(err, "{} fields decoded as Latin-1\n", raw.encoding_fallbacks);
    }
    return 0;
}

struct QueryArgs {
    std::string snapshot;
    std::string fees;
    std::vector<std::string> group_by;
    std::vector<std::string> measures;
    std::vector<std::string> filters;
    std::string bin;
    std::string order_by;
    bool ascending = false;
    std::optional<std::size_t> limit;
    std::string format = "text";
};

int cmd_query(const QueryArgs& a, std::ostream& out) {
    GroupQuery q;
    for (const auto& g : a.group_by) {
        q.group_by.push_back(parse_column(g, "--group-by"));
    }
    q.measures = a.measures;
    for (const auto& f : a.filters) {
        q.filters.add(parse_filter(f));
    }
    if (!a.bin.empty()) {
        q.bin = parse_bin(a.bin);
    }
    if (!a.order_by.empty()) {
        q.order_by = OrderBy{a.order_by, a.ascending ? SortDirection::Ascending : SortDirection::Descending};
    }
    q.limit = a.limit;
    auto schema = load_data(a.snapshot, fees_from(a.fees));
    auto result = run(schema, register_builtin_catalog(), q);
    if (a.format == "json") {
        out << wire::to_json(result).dump(2) << '\n';
    } else {
        out << render_table(result);
    }
    return 0;
}

struct ReportArgs {
    std::string snapshot;
    std::string fees;
    std::string config;
    bool check = false;
    std::string format = "text";
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
    auto cfg = a.config.empty() ? ReportConfig::reference_defaults() : ReportConfig::load(a.config);
    auto schema = load_data(a.snapshot, fees_from(a.fees));
    auto report = build_findings_report(schema, register_builtin_catalog(), cfg);
    if (a.format == "machine") {
        out << wire::to_json(report).dump(2) << '\n';
    } else {
        out << render_report_text(report);
    }
    if (!a.check) {
        return 0;
    }
    std::vector<std::string> bad;
    for (const auto& f : report.findings) {
        if (f.status == FindingStatus::Mismatch) {
            bad.push_back(f.id);
        }
    }
    if (bad.empty()) {
        return 0;
    }
    fmt::print(err, "check failed: {} mismatched finding(s)\n", bad.size());
    for (const auto& id : bad) {
        fmt::print(err, "  {}\n", id);
    }
    return 1;
}

struct LintArgs {
    std::string spec;
    std::string snapshot;
    std::string fees;
    std::string format = "text";
};

void print_lint_text(const DashboardSpec& spec, const NarrativeScore& s, std::ostream& out) {
    fmt::print(out, "{} ({})\n", spec.version_label, spec.title);
    for (std::size_t i = 0; i < kElementCount; ++i) {
        fmt::print(out, "  {:<26}{:.4f}\n", to_string(static_cast<Element>(i)), s.scores[i]);
    }
    fmt::print(out, "annotations {}  whitespace {:.4f}  color coverage {:.4f}  measures {}\n",
               s.structural.annotation_count, s.structural.whitespace_ratio, s.structural.semantic_color_coverage,
               s.structural.measure_count);
    if (s.gaps.empty()) {
        fmt::print(out, "gaps: none\n");
        return;
    }
    fmt::print(out, "gaps:\n");
    for (const auto& g : s.gaps) {
        fmt::print(out, "  - {}: {}\n", to_string(g.element), g.description);
    }
}

int cmd_lint(const LintArgs& a, std::ostream& out, std::ostream& err) {
    DashboardSpec spec;
    try {
        spec = load_spec(a.spec);
    } catch (const SpecFormatError& e) {
        fmt::print(err, "error: {}\n", e.what());
        for (const auto& p : e.problems) {
            fmt::print(err, "  {}\n", p);
        }
        return 2;
    }
    std::optional<StarSchema> schema;
    if (!a.snapshot.empty()) {
        schema = load_data(a.snapshot, fees_from(a.fees));
    }
    auto violations = validate(spec, schema ? &*schema : nullptr);
    if (!violations.empty()) {
        fmt::print(err, "error: {} is invalid\n", a.spec);
        for (const auto& v : violations) {
            fmt::print(err, "  {}: {}\n", v.path, v.message);
        }
        return 2;
    }
    auto score = lint(spec);
    if (a.format == "json") {
        out << wire::to_json(score).dump(2) << '\n';
    } else {
        print_lint_text(spec, score, out);
    }
    return score.all_ones() ? 0 : 1;
}

struct ServeArgs {
    std::string snapshot;
    std::string fees;
    std::string specs = "dashboards";
    std::string config;
    std::string ui;
    ServerOptions options;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    configure_logging();
    auto cfg = a.config.empty() ? ReportConfig::reference_defaults() : ReportConfig::load(a.config);
    auto schema = load_data(a.snapshot, fees_from(a.fees));
    auto dashboards = load_dashboards(a.specs, &schema);
    auto dashboard_count = dashboards.size();
    ApiService service(std::move(schema), register_builtin_catalog(), std::move(dashboards), cfg);
    auto options = a.options;
    if (!a.ui.empty()) {
        if (!std::filesystem::is_directory(a.ui)) {
            throw FileNotFound(a.ui);
        }
        options.static_dir = a.ui;
    }

    // Worker threads inherit the mask, so only this thread sees the signal.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    HttpServer server(service, options);
    server.start();
    fmt::print(out, "serving {} rows and {} dashboards from {} on http://{}:{}\n", service.schema().row_count(),
               dashboard_count, a.specs, options.bind, server.port());
    out.flush();
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return 0;
}

} // namespace

ColumnPredicate parse_filter(std::string_view text) {
    auto pos = text.find_first_of("<>=");
    if (pos == std::string_view::npos || pos == 0) {
        throw BadRequest(fmt::format("--filter: expected Col=a,b or Col>=x, got \"{}\"", text));
    }
    auto column = parse_column(text.substr(0, pos), "--filter");
    std::string op(1, text[pos]);
    if (pos + 1 < text.size() && text[pos + 1] == '=' && op != "=") {
        op += '=';
    }
    auto rest = text.substr(pos + op.size());
    if (trim(rest).empty()) {
        throw BadRequest(fmt::format("--filter: missing value in \"{}\"", text));
    }
    Range r;
    if (op == "=") {
        if (auto dots = rest.find(".."); dots != std::string_view::npos) {
            r.lo = parse_number(rest.substr(0, dots), "--filter");
            r.hi = parse_number(rest.substr(dots + 2), "--filter");
            return ColumnPredicate::between(column, r);
        }
        std::vector<std::string> values;
        std::size_t start = 0;
        while (true) {
            auto comma = rest.find(',', start);
            values.push_back(trim(rest.substr(start, comma - start)));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        return ColumnPredicate::in(column, std::move(values));
    }
    double v = parse_number(rest, "--filter");
    if (op[0] == '>') {
        r.lo = v;
        r.lo_inclusive = op.size() == 2;
    } else {
        r.hi = v;
        r.hi_inclusive = op.size() == 2;
    }
    return ColumnPredicate::between(column, r);
}

BinSpec parse_bin(std::string_view text) {
    auto colon = text.find(':');
    BinSpec b;
    b.column = parse_column(text.substr(0, colon), "--bin");
    if (colon == std::string_view::npos) {
        return b;
    }
    b.mode = BinSpec::Mode::FixedWidth;
    auto rest = text.substr(colon + 1);
    auto second = rest.find(':');
    b.width = parse_number(rest.substr(0, second), "--bin");
    if (second != std::string_view::npos) {
        b.origin = parse_number(rest.substr(second + 1), "--bin");
    }
    if (!(b.width > 0)) {
        throw BadRequest("--bin: width must be positive");
    }
    return b;
}

std::string render_table(const QueryResult& result) {
    const auto nk = result.key_columns.size();
    std::vector<std::string> header = result.key_columns;
    header.insert(header.end(), result.measures.begin(), result.measures.end());

    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("null"); };
    std::vector<std::vector<std::string>> body;
    for (const auto& row : result.rows) {
        std::vector<std::string> line;
        for (const auto& k : row.keys) {
            auto s = scalar_to_string(k);
            line.push_back(s.empty() ? "(blank)" : s);
        }
        for (const auto& v : row.values) {
            line.push_back(cell(v));
        }
        body.push_back(std::move(line));
    }
    if (nk > 0) {
        std::vector<std::string> line(nk);
        line[0] = "Total";
        for (const auto& v : result.total) {
            line.push_back(cell(v));
        }
        body.push_back(std::move(line));
    }

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& line : body) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    auto emit = [&](const std::vector<std::string>& line, std::string& out) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c > 0) {
                out += "  ";
            }
            // keys left-aligned, numbers right-aligned
            out += c < nk ? fmt::format("{:<{}}", line[c], width[c]) : fmt::format("{:>{}}", line[c], width[c]);
        }
        while (!out.empty() && out.back() == ' ') {
            out.pop_back();
        }
        out += '\n';
    };
    std::string out;
    emit(header, out);
    std::vector<std::string> rule;
    for (auto w : width) {
        rule.emplace_back(w, '-');
    }
    emit(rule, out);
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (nk > 0 && i + 1 == body.size()) {
            emit(rule, out);
        }
        emit(body[i], out);
    }
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"storeboard: star-schema analytics, findings report, dashboard lint and API server", "storeboard"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(STOREBOARD_VERSION));

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Load a Superstore CSV and write a snapshot");
    c_ingest->add_option("csv", ingest.csv, "Source CSV")->required();
    c_ingest->add_option("--fees", ingest.fees, "Shipping fee table (JSON)");
    c_ingest->add_option("-o,--out", ingest.out, "Snapshot path")->required();

    QueryArgs query;
    auto* c_query = app.add_subcommand("query", "Run a group-by query");
    c_query->add_option("--snapshot", query.snapshot, "Snapshot or CSV")->required();
    c_query->add_option("--fees", query.fees, "Fee table when reading a CSV");
    c_query->add_option("-g,--group-by", query.group_by, "Group column (repeatable)");
    c_query->add_option("-m,--measure", query.measures, "Measure name (repeatable)")->required();
    c_query->add_option("-f,--filter", query.filters, "Col=a,b | Col>=x | Col<x | Col=lo..hi (repeatable)");
    c_query->add_option("--bin", query.bin, "Col or Col:width[:origin]");
    c_query->add_option("--order-by", query.order_by, "Sort by this measure, descending");
    c_query->add_flag("--asc", query.ascending, "Sort ascending");
    c_query->add_option("--limit", query.limit, "Keep the first N rows");
    c_query->add_option("--format", query.format)->check(CLI::IsMember({"text", "json"}));

    ReportArgs report;
    auto* c_report = app.add_subcommand("report", "Print the findings report");
    c_report->add_option("--snapshot", report.snapshot, "Snapshot or CSV")->required();
    c_report->add_option("--fees", report.fees, "Fee table when reading a CSV");
    c_report->add_option("--config", report.config, "Report configuration (JSON)");
    c_report->add_flag("--check", report.check, "Exit 1 if any finding mismatches");
    c_report->add_option("--format", report.format)->check(CLI::IsMember({"text", "machine"}));

    LintArgs lint_args;
    auto* c_lint = app.add_subcommand("lint", "Score a dashboard spec");
    c_lint->add_option("spec", lint_args.spec, "Spec file")->required();
    c_lint->add_option("--snapshot", lint_args.snapshot, "Also check queries against this data");
    c_lint->add_option("--fees", lint_args.fees, "Fee table when reading a CSV");
    c_lint->add_option("--format", lint_args.format)->check(CLI::IsMember({"text", "json"}));

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Serve the HTTP API");
    c_serve->add_option("--snapshot", serve.snapshot, "Snapshot or CSV")->required();
    c_serve->add_option("--fees", serve.fees, "Fee table when reading a CSV");
    c_serve->add_option("--specs", serve.specs, "Dashboard spec directory")->capture_default_str();
    c_serve->add_option("--config", serve.config, "Report configuration (JSON)");
    c_serve->add_option("--port", serve.options.port, "Port, 0 for any free port")->capture_default_str();
    c_serve->add_option("--bind", serve.options.bind, "Bind address")->capture_default_str();
    c_serve->add_option("--cors-origin", serve.options.cors_origins, "Allowed origin (repeatable), * for any");
    c_serve->add_option("--ui", serve.ui, "Static UI directory served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_ingest) {
            return cmd_ingest(ingest, out, err);
        }
        if (*c_query) {
            return cmd_query(query, out);
        }
        if (*c_report) {
            return cmd_report(report, out, err);
        }
        if (*c_lint) {
            return cmd_lint(lint_args, out, err);
        }
        if (*c_serve) {
            return cmd_serve(serve, out);
        }
    } catch (const SpecFormatError& e) {
        fmt::print(err, "error: {}\n", e.what());
        for (const auto& p : e.problems) {
            fmt::print(err, "  {}\n", p);
        }
        return 2;
    } catch (const Error& e) {
        fmt::print(err, "error [{}]: {}\n", e.code(), e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }
    return 2;
}

} // namespace storeboard
