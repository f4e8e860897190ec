#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "malens/error.hpp"
#include "malens/log.hpp"
#include "malens/providers.hpp"

extern char** environ;

namespace malens {

using nlohmann::json;

namespace {

constexpr int kReadTimeoutMs = 120'000;

class ChildProcess {
 public:
  ChildProcess(const std::string& executable, const std::vector<std::string>& args) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) fail(Errc::ProviderUnavailable, "pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      fail(Errc::ProviderUnavailable, "pipe() failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);

    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(executable.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const int rc = ::posix_spawnp(&pid_, executable.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      fail(Errc::ProviderUnavailable,
           "cannot start bridge '" + executable + "': " + std::strerror(rc));
    }
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
    ::fcntl(stdin_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(stdout_fd_, F_SETFD, FD_CLOEXEC);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (stdin_fd_ >= 0) ::close(stdin_fd_);
    if (stdout_fd_ >= 0) ::close(stdout_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(pid_, SIGTERM);
        ::waitpid(pid_, &status, 0);
      }
    }
  }

  /// Empty optional on a broken pipe, EOF or timeout.
  std::optional<std::string> exchange(const std::string& line) {
    std::string out = line + "\n";
    std::size_t written = 0;
    while (written < out.size()) {
      const ssize_t n = ::write(stdin_fd_, out.data() + written, out.size() - written);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      written += static_cast<std::size_t>(n);
    }
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string reply = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return reply;
      }
      pollfd pfd{stdout_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, kReadTimeoutMs);
      if (ready < 0 && errno == EINTR) continue;
      if (ready <= 0) return std::nullopt;
      char chunk[4096];
      const ssize_t n = ::read(stdout_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
};

}  // namespace

struct CommandBackend::Impl {
  std::string executable;
  std::vector<std::string> args;
  RetryPolicy retry;
  std::mutex mutex;
  std::unique_ptr<ChildProcess> child;
};

CommandBackend::CommandBackend(std::string executable, std::vector<std::string> args,
                               RetryPolicy retry)
    : impl_(std::make_unique<Impl>()) {
  // A dead bridge must surface as EPIPE from write(), not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
  impl_->executable = std::move(executable);
  impl_->args = std::move(args);
  impl_->retry = retry;
}

CommandBackend::~CommandBackend() = default;

std::string CommandBackend::name() const { return "command:" + impl_->executable; }

json CommandBackend::call(const ProviderRequest& request) {
  request.check();
  const std::string line = request.canonical().dump();
  std::lock_guard lock(impl_->mutex);

  auto backoff = impl_->retry.initial_backoff;
  const int attempts = std::max(1, impl_->retry.attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (!impl_->child) impl_->child = std::make_unique<ChildProcess>(impl_->executable, impl_->args);
    if (const auto reply_line = impl_->child->exchange(line)) {
      json reply;
      try {
        reply = json::parse(*reply_line);
      } catch (const json::exception&) {
        fail(Errc::ProviderUnavailable, "bridge '" + impl_->executable + "' sent non-JSON output");
      }
      if (reply.contains("error")) {
        const auto& err = reply["error"];
        const std::string code = err.value("code", "");
        const std::string message = err.value("message", code);
        for (auto known : {Errc::UnsupportedLanguagePair, Errc::UnsupportedLanguage,
                           Errc::EmptyInput, Errc::InvalidArgument}) {
          if (to_string(known) == code) fail(known, message);
        }
        fail(Errc::ProviderUnavailable, message);
      }
      if (!reply.contains("result")) {
        fail(Errc::ProviderUnavailable, "bridge reply without a result");
      }
      return reply["result"];
    }
    impl_->child.reset();
    if (attempt < attempts) {
      log::warn("bridge '" + impl_->executable + "' stopped responding; restarting");
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff.count()) * impl_->retry.multiplier));
    }
  }
  fail(Errc::ProviderUnavailable, "bridge '" + impl_->executable + "' failed after " +
                                      std::to_string(attempts) + " attempts");
}

}  // namespace malens
