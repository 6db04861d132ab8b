#pragma once

#include <stdexcept>
#include <string>

namespace storeboard {

// Every failure raised by the engine carries a stable machine-readable code
// (e.g. "UnknownColumn") next to its human message. The server and CLI map
// codes onto HTTP statuses and exit codes.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

  private:
    std::string code_;
};

// Ingestion / IO
struct FileNotFound : Error {
    explicit FileNotFound(const std::string& path)
        : Error("FileNotFound", "file not found or unreadable: " + path) {}
};

struct MissingColumn : Error {
    explicit MissingColumn(const std::string& name)
        : Error("MissingColumn", "mandatory column missing: " + name) {}
};

struct TooManyBadRows : Error {
    TooManyBadRows(std::size_t rejected, std::size_t total)
        : Error("TooManyBadRows",
                "rejected " + std::to_string(rejected) + " of " + std::to_string(total) +
                    " rows; wrong file or unsupported dataset variant?") {}
};

struct DanglingKey : Error {
    explicit DanglingKey(const std::string& what) : Error("DanglingKey", what) {}
};

struct SnapshotError : Error {
    explicit SnapshotError(const std::string& what) : Error("SnapshotError", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

// Malformed request or document; the message carries a JSON path.
struct BadRequest : Error {
    explicit BadRequest(const std::string& what) : Error("BadRequest", what) {}
};

// Model / query
struct UnknownColumn : Error {
    UnknownColumn(const std::string& table, const std::string& column)
        : Error("UnknownColumn",
                "unknown column: " + (table.empty() ? column : table + "[" + column + "]")),
          table(table), column(column) {}
    std::string table;
    std::string column;
};

struct UnknownMeasure : Error {
    explicit UnknownMeasure(const std::string& name)
        : Error("UnknownMeasure", "unknown measure: [" + name + "]"), name(name) {}
    std::string name;
};

struct CycleDetected : Error {
    explicit CycleDetected(const std::string& chain)
        : Error("CycleDetected", "measure reference cycle: " + chain) {}
};

struct EmptyAggregation : Error {
    explicit EmptyAggregation(const std::string& what)
        : Error("EmptyAggregation", "aggregation over empty selection: " + what) {}
};

struct TypeMismatch : Error {
    explicit TypeMismatch(const std::string& what) : Error("TypeMismatch", what) {}
};

struct InvalidQuery : Error {
    explicit InvalidQuery(const std::string& what) : Error("InvalidQuery", what) {}
};

// Measure language
struct SyntaxError : Error {
    SyntaxError(std::size_t position, const std::string& expected, const std::string& found)
        : Error("SyntaxError", "syntax error at " + std::to_string(position) + ": expected " +
                                   expected + ", found " + found),
          position(position), expected(expected) {}
    std::size_t position;
    std::string expected;
};

struct UnknownFunction : Error {
    explicit UnknownFunction(const std::string& name)
        : Error("UnknownFunction", "unknown function: " + name), name(name) {}
    std::string name;
};

// Analytics
struct NoDiscountVariation : Error {
    NoDiscountVariation()
        : Error("NoDiscountVariation", "fewer than two distinct discount levels") {}
};

} // namespace storeboard
