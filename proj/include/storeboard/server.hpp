#pragma once

#include "storeboard/analytics.hpp"
#include "storeboard/dashboard.hpp"
#include "storeboard/star_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storeboard {

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

// Error body: {"code": bad-request | not-found | query-error | internal,
//              "message": ..., "detail": ...}
ApiResponse api_error(int status, std::string_view code, std::string message, const nlohmann::json& detail = nullptr);

// Immutable after construction; handle() is safe to call from many threads.
class ApiService {
  public:
    ApiService(StarSchema schema, MeasureCatalog catalog, std::map<std::string, DashboardSpec> dashboards,
               ReportConfig report_config = ReportConfig::reference_defaults());

    // Pure request mapping; path excludes the query string.
    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

    const StarSchema& schema() const { return schema_; }
    const FindingsReport& findings() const { return findings_; }

  private:
    ApiResponse query(std::string_view body) const;
    ApiResponse lint_spec(std::string_view body) const;

    StarSchema schema_;
    MeasureCatalog catalog_;
    std::map<std::string, DashboardSpec> dashboards_;
    FindingsReport findings_;
    std::string schema_json_;
};

// Loads every *.json in dir, keyed by file stem. Throws SpecFormatError, or
// ConfigError listing validation violations against the schema.
std::map<std::string, DashboardSpec> load_dashboards(const std::filesystem::path& dir,
                                                     const StarSchema* schema = nullptr);

struct ServerOptions {
    std::string bind = "127.0.0.1";
    int port = 8475; // 0 picks a free port
    // Allowed CORS origins; "*" allows any. Empty: localhost and 127.0.0.1
    // on any port, for a UI dev server.
    std::vector<std::string> cors_origins;
    std::optional<std::filesystem::path> static_dir; // served at "/"
};

bool cors_allowed(const ServerOptions& options, std::string_view origin);

// HTTP front end over an ApiService.
class HttpServer {
  public:
    HttpServer(const ApiService& service, ServerOptions options);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds and serves on a background thread. Throws ConfigError if the
    // address cannot be bound.
    void start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();
    int port() const { return port_; }

  private:
    void bind();

    struct Impl;
    std::unique_ptr<Impl> impl_;
    ServerOptions options_;
    int port_ = 0;
};

// Sets the global log level from STOREBOARD_LOG (trace, debug, info, warn,
// error, off); default warn.
void configure_logging();

} // namespace storeboard
