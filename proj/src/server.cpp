#include "storeboard/server.hpp"

#include "storeboard/error.hpp"
#include "storeboard/wire.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#ifndef STOREBOARD_VERSION
#define STOREBOARD_VERSION "0.0.0"
#endif

namespace storeboard {

using wire::Json;

ApiResponse api_error(int status, std::string_view code, std::string message, const Json& detail) {
    if (message.empty()) {
        message = "error";
    }
    Json body = {{"code", code}, {"message", message}, {"detail", detail}};
    return {status, body.dump(), "application/json"};
}

namespace {

ApiResponse ok(const Json& j) { return {200, j.dump(), "application/json"}; }

// Engine errors raised by a well-formed query that cannot be answered.
bool is_query_error(const Error& e) {
    static const std::vector<std::string> codes{"UnknownMeasure", "UnknownColumn", "TypeMismatch",
                                                "InvalidQuery",   "CycleDetected", "EmptyAggregation",
                                                "SyntaxError",    "UnknownFunction"};
    return std::find(codes.begin(), codes.end(), e.code()) != codes.end();
}

Json parse_body(std::string_view body) {
    try {
        return Json::parse(body);
    } catch (const Json::exception& e) {
        throw BadRequest(std::string("$: body is not valid JSON: ") + e.what());
    }
}

} // namespace

ApiService::ApiService(StarSchema schema, MeasureCatalog catalog, std::map<std::string, DashboardSpec> dashboards,
                       ReportConfig report_config)
    : schema_(std::move(schema)), catalog_(std::move(catalog)), dashboards_(std::move(dashboards)) {
    findings_ = build_findings_report(schema_, catalog_, report_config);
    schema_json_ = wire::schema_to_json(schema_).dump();
}

ApiResponse ApiService::handle(std::string_view method, std::string_view path, std::string_view body) const {
    try {
        if (method == "GET") {
            if (path == "/api/health") {
                return ok({{"status", "ok"},
                           {"name", "storeboard"},
                           {"version", STOREBOARD_VERSION},
                           {"fact_rows", schema_.row_count()},
                           {"dashboards", dashboards_.size()}});
            }
            if (path == "/api/schema") {
                return {200, schema_json_, "application/json"};
            }
            if (path == "/api/dashboards") {
                Json ids = Json::array();
                for (const auto& [id, spec] : dashboards_) {
                    ids.push_back(id);
                }
                return ok(ids);
            }
            constexpr std::string_view prefix = "/api/dashboards/";
            if (path.starts_with(prefix)) {
                auto id = std::string(path.substr(prefix.size()));
                auto it = dashboards_.find(id);
                if (it == dashboards_.end()) {
                    return api_error(404, "not-found", "no dashboard with id \"" + id + "\"", {{"id", id}});
                }
                return ok(wire::to_json(it->second));
            }
            if (path == "/api/findings") {
                return ok(wire::to_json(findings_));
            }
        } else if (method == "POST") {
            if (path == "/api/query") {
                return query(body);
            }
            if (path == "/api/lint") {
                return lint_spec(body);
            }
        }
        return api_error(404, "not-found", std::string(method) + " " + std::string(path) + " is not an endpoint");
    } catch (const SpecFormatError& e) {
        return api_error(400, "bad-request", e.what(), {{"problems", e.problems}});
    } catch (const BadRequest& e) {
        return api_error(400, "bad-request", e.what());
    } catch (const Error& e) {
        if (is_query_error(e)) {
            Json detail = {{"error", e.code()}};
            if (const auto* um = dynamic_cast<const UnknownMeasure*>(&e)) {
                detail["measure"] = um->name;
            }
            if (const auto* uc = dynamic_cast<const UnknownColumn*>(&e)) {
                detail["column"] = uc->column;
                detail["table"] = uc->table;
            }
            return api_error(400, "query-error", e.what(), detail);
        }
        spdlog::error("{} {}: {}", method, path, e.what());
        return api_error(500, "internal", e.what(), {{"error", e.code()}});
    } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", method, path, e.what());
        return api_error(500, "internal", e.what());
    }
}

ApiResponse ApiService::query(std::string_view body) const {
    auto q = wire::group_query_from_json(parse_body(body));
    return ok(wire::to_json(run(schema_, catalog_, q)));
}

ApiResponse ApiService::lint_spec(std::string_view body) const {
    auto spec = wire::spec_from_json(parse_body(body));
    auto violations = validate(spec, &schema_);
    auto j = wire::to_json(lint(spec));
    j["violations"] = wire::to_json(violations);
    return ok(j);
}

std::map<std::string, DashboardSpec> load_dashboards(const std::filesystem::path& dir, const StarSchema* schema) {
    if (!std::filesystem::is_directory(dir)) {
        throw FileNotFound(dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, DashboardSpec> out;
    for (const auto& f : files) {
        auto spec = load_spec(f);
        auto violations = validate(spec, schema);
        if (!violations.empty()) {
            throw ConfigError(fmt::format("{}: {}: {}{}", f.string(), violations[0].path, violations[0].message,
                                          violations.size() > 1 ? fmt::format(" (+{} more)", violations.size() - 1)
                                                                : std::string()));
        }
        out.emplace(f.stem().string(), std::move(spec));
    }
    return out;
}

bool cors_allowed(const ServerOptions& options, std::string_view origin) {
    if (origin.empty()) {
        return false;
    }
    if (options.cors_origins.empty()) {
        static const std::regex local(R"(^https?://(localhost|127\.0\.0\.1|\[::1\])(:\d+)?$)");
        return std::regex_match(origin.begin(), origin.end(), local);
    }
    for (const auto& o : options.cors_origins) {
        if (o == "*" || o == origin) {
            return true;
        }
    }
    return false;
}

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(const ApiService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
    auto& svr = impl_->server;
    auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
        auto start = std::chrono::steady_clock::now();
        auto r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
        auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        spdlog::debug("{} {} -> {} ({:.1f} ms)", req.method, req.path, r.status, ms);
    };
    svr.Get(R"(/api/.*)", dispatch);
    svr.Post(R"(/api/.*)", dispatch);
    svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    svr.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        auto origin = req.get_header_value("Origin");
        if (cors_allowed(options_, origin)) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Vary", "Origin");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
    });
    if (options_.static_dir) {
        svr.set_mount_point("/", options_.static_dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::bind() {
    auto& svr = impl_->server;
    if (options_.port == 0) {
        port_ = svr.bind_to_any_port(options_.bind);
    } else {
        port_ = svr.bind_to_port(options_.bind, options_.port) ? options_.port : -1;
    }
    if (port_ <= 0) {
        throw ConfigError(fmt::format("cannot bind {}:{}", options_.bind, options_.port));
    }
    spdlog::info("listening on http://{}:{}", options_.bind, port_);
}

void HttpServer::start() {
    bind();
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::run() {
    bind();
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_) {
        impl_->server.stop();
        if (impl_->thread.joinable()) {
            impl_->thread.join();
        }
    }
}

void configure_logging() {
    const char* env = std::getenv("STOREBOARD_LOG");
    auto level = spdlog::level::warn;
    if (env != nullptr && *env != '\0') {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

} // namespace storeboard
