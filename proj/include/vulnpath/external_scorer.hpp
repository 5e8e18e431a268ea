#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "vulnpath/scorer.hpp"

namespace vulnpath {

/// Splits a command line into words. Single and double quotes group words;
/// backslash escapes the next character outside single quotes.
std::vector<std::string> split_command(std::string_view command);

struct ExternalScorerOptions {
  std::chrono::milliseconds timeout{10000};  ///< per handshake and per request
};

/// Child process speaking newline-delimited JSON on stdin/stdout:
///   -> {"v":1,"op":"handshake"}                <- {"v":1,"ok":true,"name":...}
///   -> {"op":"score","id":N,"graph":{...}}     <- {"id":N,"ok":true,"prob":p}
/// One request is in flight at a time. After any failure the handle refuses
/// further requests. Writing to a dead child must not kill the caller, so
/// SIGPIPE is set to ignored on first use.
class ExternalScorer final : public Detector {
 public:
  /// Spawns `argv` and performs the handshake. Throws ScorerError.
  explicit ExternalScorer(std::vector<std::string> argv, ExternalScorerOptions options = {});
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  std::string name() const override { return peer_name_; }
  double score(const ProgramDependenceGraph& graph) override;

  pid_t pid() const noexcept { return pid_; }

 private:
  void send_line(const std::string& line, std::optional<std::int64_t> id);
  std::string read_line(std::optional<std::int64_t> id);
  [[noreturn]] void fail(const std::string& what, std::optional<std::int64_t> id);
  std::string exit_description();
  void shutdown();

  std::vector<std::string> argv_;
  ExternalScorerOptions options_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::string peer_name_;
  std::int64_t next_id_ = 1;
  bool broken_ = false;
  bool reaped_ = false;
  int status_ = 0;
};

}  // namespace vulnpath
