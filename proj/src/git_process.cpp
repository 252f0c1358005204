#include "vtrace/git_process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "vtrace/errors.hpp"

extern char** environ;

namespace vtrace {

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
  int release_read() { return std::exchange(fd[0], -1); }
  int release_write() { return std::exchange(fd[1], -1); }
};

std::vector<std::string> child_environment(const std::vector<std::string>& extra) {
  std::vector<std::string> env;
  for (char** e = environ; *e; ++e) {
    std::string_view kv(*e);
    // The child works on the -C directory only; the locale is pinned for parsing.
    if (kv.rfind("GIT_DIR=", 0) == 0 || kv.rfind("GIT_WORK_TREE=", 0) == 0 || kv.rfind("LC_ALL=", 0) == 0) continue;
    env.emplace_back(kv);
  }
  env.emplace_back("LC_ALL=C");
  env.emplace_back("GIT_PAGER=cat");
  env.emplace_back("GIT_TERMINAL_PROMPT=0");
  env.emplace_back("GIT_OPTIONAL_LOCKS=0");
  for (const auto& e : extra) env.push_back(e);
  return env;
}

int spawn(const std::string& dir, const std::vector<std::string>& args, const std::vector<std::string>& env, int in_fd,
          int out_fd, int err_fd) {
  std::vector<std::string> argv_s{"git", "-C", dir};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);
  auto env_s = child_environment(env);
  std::vector<char*> envp;
  for (auto& e : env_s) envp.push_back(e.data());
  envp.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_fd, 0);
    ::dup2(out_fd, 1);
    ::dup2(err_fd, 2);
    ::execvpe("git", argv.data(), envp.data());
    ::_exit(127);
  }
  return pid;
}

}  // namespace

ProcessResult run_git(const std::string& dir, const std::vector<std::string>& args, const std::string& input,
                      const std::vector<std::string>& env) {
  Pipe in, out, err;
  pid_t pid = spawn(dir, args, env, in.fd[0], out.fd[1], err.fd[1]);
  in.close_read();
  out.close_write();
  err.close_write();

  ProcessResult result;
  std::size_t written = 0;
  sigset_t block, old;
  sigemptyset(&block);
  sigaddset(&block, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &block, &old);
  if (input.empty()) in.close_write();
  else ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

  char buf[65536];
  while (out.fd[0] >= 0 || err.fd[0] >= 0) {
    pollfd fds[3];
    int n = 0;
    int out_i = -1, err_i = -1, in_i = -1;
    if (out.fd[0] >= 0) fds[out_i = n++] = {out.fd[0], POLLIN, 0};
    if (err.fd[0] >= 0) fds[err_i = n++] = {err.fd[0], POLLIN, 0};
    if (in.fd[1] >= 0) fds[in_i = n++] = {in.fd[1], POLLOUT, 0};
    if (::poll(fds, static_cast<nfds_t>(n), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_i >= 0 && (fds[in_i].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t w = ::write(in.fd[1], input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN) written = input.size();
      if (written >= input.size()) in.close_write();
    }
    auto drain = [&](int idx, Pipe& p, std::string& sink) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      ssize_t r = ::read(p.fd[0], buf, sizeof buf);
      if (r > 0) sink.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || errno != EINTR) p.close_read();
    };
    drain(out_i, out, result.out);
    drain(err_i, err, result.err);
  }
  in.close_write();
  timespec zero{0, 0};
  while (sigtimedwait(&block, nullptr, &zero) > 0) {
  }
  pthread_sigmask(SIG_SETMASK, &old, nullptr);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

CatFileBatch::CatFileBatch(std::string dir) : dir_(std::move(dir)) {}

CatFileBatch::~CatFileBatch() { stop(); }

void CatFileBatch::start() {
  Pipe in, out;
  int devnull = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  pid_ = spawn(dir_, {"cat-file", "--batch"}, {}, in.fd[0], out.fd[1], devnull);
  ::close(devnull);
  to_child_ = in.release_write();
  from_child_ = out.release_read();
  buffer_.clear();
}

void CatFileBatch::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
}

bool CatFileBatch::read_line(std::string& out) {
  while (true) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      out = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    char buf[65536];
    ssize_t r = ::read(from_child_, buf, sizeof buf);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    buffer_.append(buf, static_cast<std::size_t>(r));
  }
}

bool CatFileBatch::read_exact(std::string& out, std::size_t n) {
  while (buffer_.size() < n) {
    char buf[65536];
    ssize_t r = ::read(from_child_, buf, sizeof buf);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    buffer_.append(buf, static_cast<std::size_t>(r));
  }
  out = buffer_.substr(0, n);
  buffer_.erase(0, n);
  return true;
}

std::optional<CatFileBatch::Object> CatFileBatch::read(const std::string& spec) {
  if (spec.find('\n') != std::string::npos) return std::nullopt;
  std::lock_guard lock(mu_);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (pid_ < 0) start();
    std::string request = spec + "\n";
    const char* p = request.data();
    std::size_t left = request.size();
    bool ok = true;
    // SIGPIPE would kill the process if the child died; it is blocked here
    // and reported through EPIPE instead.
    sigset_t block, old;
    sigemptyset(&block);
    sigaddset(&block, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &block, &old);
    while (left > 0) {
      ssize_t w = ::write(to_child_, p, left);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) {
        ok = false;
        break;
      }
      p += w;
      left -= static_cast<std::size_t>(w);
    }
    if (!ok) {
      timespec zero{0, 0};
      sigtimedwait(&block, nullptr, &zero);
    }
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    std::string header;
    if (!ok || !read_line(header)) {
      stop();
      continue;
    }
    if (header.size() >= 8 && header.compare(header.size() - 8, 8, " missing") == 0) return std::nullopt;
    if (header.size() >= 10 && header.compare(header.size() - 10, 10, " ambiguous") == 0) return std::nullopt;
    auto s1 = header.find(' ');
    auto s2 = header.find(' ', s1 + 1);
    if (s1 == std::string::npos || s2 == std::string::npos) {
      stop();
      throw GitCommandFailed("cat-file: unexpected header '" + header + "'");
    }
    Object obj;
    obj.id = header.substr(0, s1);
    obj.type = header.substr(s1 + 1, s2 - s1 - 1);
    std::size_t size = std::stoul(header.substr(s2 + 1));
    std::string trailing;
    if (!read_exact(obj.content, size) || !read_exact(trailing, 1)) {
      stop();
      continue;
    }
    return obj;
  }
  throw GitCommandFailed("cat-file --batch process failed in " + dir_);
}

}  // namespace vtrace
