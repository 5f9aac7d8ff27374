#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

extern char** environ;

namespace mutopt {

// The executable named by a command could not be started at all.
class ToolchainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits a command template on whitespace outside single or double quotes.
// Quotes are removed; a backslash escapes the next character outside single
// quotes.
inline std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> args;
  std::string current;
  bool in_arg = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    char c = command[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
        current += command[++i];
      } else {
        current += c;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_arg = true;
    } else if (c == '\\' && i + 1 < command.size()) {
      current += command[++i];
      in_arg = true;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (in_arg) args.push_back(std::move(current));
      current.clear();
      in_arg = false;
    } else {
      current += c;
      in_arg = true;
    }
  }
  if (quote) throw std::invalid_argument("unbalanced quote in command template");
  if (in_arg) args.push_back(std::move(current));
  return args;
}

// Replaces every "{key}" occurrence in each argument.
inline std::vector<std::string> substitute(
    std::vector<std::string> args,
    const std::vector<std::pair<std::string, std::string>>& values) {
  for (auto& arg : args) {
    for (const auto& [key, value] : values) {
      std::string needle = "{" + key + "}";
      for (auto at = arg.find(needle); at != std::string::npos;
           at = arg.find(needle, at + value.size()))
        arg.replace(at, needle.size(), value);
    }
  }
  return args;
}

struct ProcessResult {
  int exit_code = -1;   // valid when !signaled && !timed_out
  int signal = 0;       // terminating signal, 0 if exited normally
  bool timed_out = false;
  std::string out;
  std::string err;
  double elapsed_ms = 0.0;

  bool ok() const { return !timed_out && signal == 0 && exit_code == 0; }
};

namespace detail {

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

inline void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0)
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  read_end.fd = fds[0];
  write_end.fd = fds[1];
}

}  // namespace detail

// Runs argv[0] (PATH lookup) with `stdin_data` on standard input and captures
// standard output and error. The child is killed with SIGKILL once `timeout`
// elapses. Throws ToolchainError when the executable cannot be spawned.
inline ProcessResult run_process(const std::vector<std::string>& argv,
                                 std::string_view stdin_data,
                                 std::optional<std::chrono::milliseconds>
                                     timeout = std::nullopt) {
  if (argv.empty()) throw ToolchainError("empty command");

  detail::Fd in_r, in_w, out_r, out_w, err_r, err_w;
  detail::make_pipe(in_r, in_w);
  detail::make_pipe(out_r, out_w);
  detail::make_pipe(err_r, err_w);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_r.fd, STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_w.fd, STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_w.fd, STDERR_FILENO);

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  // A child that exits before reading stdin must not kill us with SIGPIPE.
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &ignore, &previous);

  auto start = std::chrono::steady_clock::now();
  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(),
                          environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    ::sigaction(SIGPIPE, &previous, nullptr);
    throw ToolchainError("cannot execute '" + argv[0] +
                         "': " + std::strerror(rc));
  }
  in_r.reset();
  out_w.reset();
  err_w.reset();

  ::fcntl(in_w.fd, F_SETFL, O_NONBLOCK);
  std::size_t written = 0;
  if (stdin_data.empty()) in_w.reset();

  ProcessResult result;
  std::array<char, 65536> buffer;
  auto deadline = timeout ? std::optional(start + *timeout) : std::nullopt;

  while (out_r.fd >= 0 || err_r.fd >= 0) {
    std::array<pollfd, 3> fds{};
    nfds_t n = 0;
    int out_slot = -1, err_slot = -1, in_slot = -1;
    if (out_r.fd >= 0) { fds[n] = {out_r.fd, POLLIN, 0}; out_slot = static_cast<int>(n++); }
    if (err_r.fd >= 0) { fds[n] = {err_r.fd, POLLIN, 0}; err_slot = static_cast<int>(n++); }
    if (in_w.fd >= 0) { fds[n] = {in_w.fd, POLLOUT, 0}; in_slot = static_cast<int>(n++); }

    int wait_ms = -1;
    if (deadline) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          *deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        result.timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(left.count()) + 1;
    }
    int ready = ::poll(fds.data(), n, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    auto drain = [&](int slot, detail::Fd& fd, std::string& sink) {
      if (slot < 0 || !(fds[slot].revents & (POLLIN | POLLHUP | POLLERR)))
        return;
      ssize_t got = ::read(fd.fd, buffer.data(), buffer.size());
      if (got > 0)
        sink.append(buffer.data(), static_cast<std::size_t>(got));
      else if (got == 0 || errno != EINTR)
        fd.reset();
    };
    drain(out_slot, out_r, result.out);
    drain(err_slot, err_r, result.err);
    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t put = ::write(in_w.fd, stdin_data.data() + written,
                            stdin_data.size() - written);
      if (put > 0) written += static_cast<std::size_t>(put);
      if (put < 0 && errno != EAGAIN && errno != EINTR) in_w.reset();
      if (written >= stdin_data.size()) in_w.reset();
    }
  }
  in_w.reset();

  // The child may close its output early and keep running.
  int status = 0;
  bool reaped = false;
  while (!result.timed_out && !reaped) {
    pid_t w = ::waitpid(pid, &status, deadline ? WNOHANG : 0);
    if (w == pid) {
      reaped = true;
    } else if (w < 0 && errno != EINTR) {
      break;
    } else if (deadline && std::chrono::steady_clock::now() >= *deadline) {
      result.timed_out = true;
    } else if (w == 0) {
      ::usleep(200);
    }
  }
  if (result.timed_out && !reaped) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
  }
  auto stop = std::chrono::steady_clock::now();
  ::sigaction(SIGPIPE, &previous, nullptr);

  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(stop - start).count();
  if (!result.timed_out) {
    if (WIFSIGNALED(status))
      result.signal = WTERMSIG(status);
    else if (WIFEXITED(status))
      result.exit_code = WEXITSTATUS(status);
    if (timeout && result.elapsed_ms > static_cast<double>(timeout->count()))
      result.timed_out = true;
  }
  return result;
}

}  // namespace mutopt
