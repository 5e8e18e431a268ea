#include "vulnpath/external_scorer.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <fmt/format.h>

#include "vulnpath/error.hpp"

extern char** environ;

namespace vulnpath {

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (quote) {
      if (c == quote) quote = 0;
      else if (c == '\\' && quote == '"' && i + 1 < command.size()) cur += command[++i];
      else cur += c;
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < command.size()) {
      cur += command[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw ValidationError("unterminated quote in command: " + std::string(command));
  if (in_word) words.push_back(std::move(cur));
  return words;
}

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

ExternalScorer::ExternalScorer(std::vector<std::string> argv, ExternalScorerOptions options)
    : argv_(std::move(argv)), options_(options), peer_name_("external") {
  if (argv_.empty()) throw ScorerError("empty scorer command");
  ignore_sigpipe();

  int in_pipe[2], out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ScorerError(std::string("pipe: ") + std::strerror(errno));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    const int err = errno;
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ScorerError(std::string("pipe: ") + std::strerror(err));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);
  const int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    pid_ = -1;
    shutdown();
    throw ScorerError(fmt::format("cannot start \"{}\": {}", argv_[0], std::strerror(rc)));
  }

  try {
    send_line(R"({"v":1,"op":"handshake"})", std::nullopt);
    const std::string line = read_line(std::nullopt);
    Json reply;
    try {
      reply = Json::parse(line);
    } catch (const Json::parse_error&) {
      fail("malformed handshake reply: " + line, std::nullopt);
    }
    if (!reply.is_object() || !reply.contains("v") || !reply["v"].is_number_integer())
      fail("handshake reply lacks protocol version", std::nullopt);
    if (reply["v"].get<std::int64_t>() != 1)
      fail(fmt::format("unsupported protocol version {} (expected 1)", reply["v"].dump()), std::nullopt);
    if (!reply.contains("ok") || reply["ok"] != true) {
      const std::string why = reply.contains("error") && reply["error"].is_string() ? reply["error"].get<std::string>()
                                                                                    : "handshake refused";
      fail(why, std::nullopt);
    }
    if (reply.contains("name") && reply["name"].is_string()) peer_name_ = reply["name"].get<std::string>();
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalScorer::~ExternalScorer() { shutdown(); }

void ExternalScorer::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0 && !reaped_) {
    // Closing stdin asks the child to exit; give it a moment before killing it.
    const auto deadline = Clock::now() + std::chrono::milliseconds(1000);
    while (!reaped_) {
      const pid_t r = waitpid(pid_, &status_, WNOHANG);
      if (r == pid_ || (r < 0 && errno != EINTR)) {
        reaped_ = true;
        break;
      }
      if (Clock::now() >= deadline) {
        kill(pid_, SIGKILL);
        while (waitpid(pid_, &status_, 0) < 0 && errno == EINTR) {
        }
        reaped_ = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
}

std::string ExternalScorer::exit_description() {
  if (pid_ <= 0) return "not running";
  if (!reaped_) {
    // Give a crashing child a brief chance to be reaped so the status is known.
    for (int i = 0; i < 50 && !reaped_; ++i) {
      const pid_t r = waitpid(pid_, &status_, WNOHANG);
      if (r == pid_) reaped_ = true;
      else std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  if (!reaped_) return "closed its output";
  if (WIFEXITED(status_)) return fmt::format("exited with status {}", WEXITSTATUS(status_));
  if (WIFSIGNALED(status_)) return fmt::format("killed by signal {}", WTERMSIG(status_));
  return "terminated";
}

void ExternalScorer::fail(const std::string& what, std::optional<std::int64_t> id) {
  broken_ = true;
  throw ScorerError(what, id);
}

void ExternalScorer::send_line(const std::string& line, std::optional<std::int64_t> id) {
  std::string data = line + "\n";
  const auto deadline = Clock::now() + options_.timeout;
  std::size_t off = 0;
  while (off < data.size()) {
    pollfd p{to_child_, POLLOUT, 0};
    const int r = poll(&p, 1, remaining_ms(deadline));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) fail(fmt::format("timed out after {} ms writing request", options_.timeout.count()), id);
    const ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail("scorer " + exit_description() + " (write failed)", id);
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalScorer::read_line(std::optional<std::int64_t> id) {
  const auto deadline = Clock::now() + options_.timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      return line;
    }
    pollfd p{from_child_, POLLIN, 0};
    const int r = poll(&p, 1, remaining_ms(deadline));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) fail(fmt::format("timed out after {} ms waiting for reply", options_.timeout.count()), id);
    char chunk[65536];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(std::string("read failed: ") + std::strerror(errno), id);
    }
    if (n == 0) fail("scorer " + exit_description() + " before replying", id);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

double ExternalScorer::score(const ProgramDependenceGraph& graph) {
  const std::int64_t id = next_id_++;
  if (broken_) throw ScorerError("scorer unavailable after an earlier failure", id);
  Json request = Json::object();
  request["op"] = "score";
  request["id"] = id;
  request["graph"] = pdg_to_json(graph);
  send_line(request.dump(), id);

  const std::string line = read_line(id);
  Json reply;
  try {
    reply = Json::parse(line);
  } catch (const Json::parse_error&) {
    fail("malformed reply: " + line.substr(0, 200), id);
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_integer())
    fail("reply lacks an integer id", id);
  if (reply["id"].get<std::int64_t>() != id)
    fail(fmt::format("reply for unexpected request id {}", reply["id"].dump()), id);
  if (!reply.contains("ok") || !reply["ok"].is_boolean()) fail("reply lacks boolean \"ok\"", id);
  if (!reply["ok"].get<bool>()) {
    const std::string why =
        reply.contains("error") && reply["error"].is_string() ? reply["error"].get<std::string>() : "unspecified error";
    // The scorer declined this graph but is still usable.
    throw ScorerError("scorer reported: " + why, id);
  }
  if (!reply.contains("prob") || !reply["prob"].is_number()) fail("reply lacks numeric \"prob\"", id);
  const double p = reply["prob"].get<double>();
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) fail(fmt::format("probability {} outside [0, 1]", p), id);
  return p;
}

}  // namespace vulnpath
