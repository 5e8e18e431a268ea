#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace vulnpath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown node id, edge to a missing node, and similar graph lookups.
class GraphError : public Error {
 public:
  using Error::Error;
};

class LexError : public Error {
 public:
  LexError(std::size_t offset, const std::string& what)
      : Error("lex error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// MiniC syntax error; carries the 1-based source line and what was expected.
class ParseError : public Error {
 public:
  ParseError(int line, std::string expected)
      : Error("line " + std::to_string(line) + ": expected " + expected),
        line_(line),
        expected_(std::move(expected)) {}
  int line() const noexcept { return line_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  int line_;
  std::string expected_;
};

/// A JSON document that does not follow the expected schema. `path()` is a
/// JSON path such as `edges[3].kind`.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A dataset record that cannot be read or violates the sample invariants.
class DatasetError : public Error {
 public:
  DatasetError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally readable input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure of a detector: crash, timeout, malformed or out-of-range reply.
class ScorerError : public Error {
 public:
  explicit ScorerError(const std::string& what, std::optional<std::int64_t> request_id = std::nullopt)
      : Error(request_id ? "scorer request " + std::to_string(*request_id) + ": " + what : "scorer: " + what),
        request_id_(request_id) {}
  std::optional<std::int64_t> request_id() const noexcept { return request_id_; }

 private:
  std::optional<std::int64_t> request_id_;
};

}  // namespace vulnpath
