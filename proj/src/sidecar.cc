// Copyright (c) 2026 LightBeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Child-process and TCP transports for the JSON-lines scorer protocol.

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lightbeam/scorer.h"

namespace lightbeam {

namespace {

std::pair<std::string, std::string> split_address(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError("scorer address must be host:port, got '" + address + "'");
  }
  return {address.substr(0, colon), address.substr(colon + 1)};
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

SidecarScorer::SidecarScorer(int read_fd, int write_fd, int child_pid,
                             std::chrono::milliseconds timeout)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid), timeout_(timeout) {}

std::unique_ptr<SidecarScorer> SidecarScorer::spawn(const std::string& command,
                                                    std::chrono::milliseconds timeout) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw ScorerError(0, "pipe failed: " + std::string(strerror(errno)));
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw ScorerError(0, "pipe failed: " + std::string(strerror(errno)));
  }
  pid_t pid = fork();
  if (pid < 0) throw ScorerError(0, "fork failed: " + std::string(strerror(errno)));
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  // A dead child must surface as an error on write, not kill us.
  signal(SIGPIPE, SIG_IGN);
  return std::unique_ptr<SidecarScorer>(
      new SidecarScorer(from_child[0], to_child[1], pid, timeout));
}

std::unique_ptr<SidecarScorer> SidecarScorer::connect(const std::string& address,
                                                      std::chrono::milliseconds timeout) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  AddrInfo res;
  if (int rc = getaddrinfo(host.c_str(), port.c_str(), &hints, &res.head); rc != 0) {
    throw ScorerError(0, "cannot resolve " + address + ": " + gai_strerror(rc));
  }
  for (addrinfo* ai = res.head; ai; ai = ai->ai_next) {
    int fd = socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      signal(SIGPIPE, SIG_IGN);
      int write_fd = dup(fd);
      return std::unique_ptr<SidecarScorer>(new SidecarScorer(fd, write_fd, -1, timeout));
    }
    close(fd);
  }
  throw ScorerError(0, "cannot connect to " + address);
}

SidecarScorer::~SidecarScorer() {
  if (write_fd_ >= 0) close(write_fd_);
  if (read_fd_ >= 0) close(read_fd_);
  if (child_pid_ > 0) {
    // Closing stdin asks the child to exit; give it a moment, then insist.
    for (int i = 0; i < 50; ++i) {
      if (waitpid(child_pid_, nullptr, WNOHANG) == child_pid_) return;
      usleep(10000);
    }
    kill(child_pid_, SIGKILL);
    waitpid(child_pid_, nullptr, 0);
  }
}

void SidecarScorer::write_line(std::uint64_t id, const std::string& line) {
  std::string framed = line + "\n";
  if (!write_all(write_fd_, framed)) {
    throw ScorerError(id, "write to scorer failed: " + std::string(strerror(errno)));
  }
}

std::string SidecarScorer::read_line(std::uint64_t id) {
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) throw ScorerError(id, "timed out waiting for scorer");
    pollfd pfd{read_fd_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ScorerError(id, "poll failed: " + std::string(strerror(errno)));
    }
    if (rc == 0) throw ScorerError(id, "timed out waiting for scorer");
    char buf[8192];
    ssize_t n = ::read(read_fd_, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ScorerError(id, "read from scorer failed: " + std::string(strerror(errno)));
    }
    if (n == 0) throw ScorerError(id, "scorer closed the connection");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

ScoreResponse SidecarScorer::evaluate(const ScoreRequest& request) {
  write_line(request.id, encode_request(request));
  // Strictly serial: the next line is ours.
  std::string line = read_line(request.id);
  try {
    return decode_response(line);
  } catch (const FormatError& e) {
    throw ScorerError(request.id, e.what());
  }
}

void serve_scorer(Scorer& scorer, int in_fd, int out_fd) {
  std::string pending;
  char buf[8192];
  for (;;) {
    auto nl = pending.find('\n');
    if (nl == std::string::npos) {
      ssize_t n = ::read(in_fd, buf, sizeof(buf));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;
      pending.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    std::string line = pending.substr(0, nl);
    pending.erase(0, nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ScoreResponse resp;
    try {
      ScoreRequest req = decode_request(line);
      resp.id = req.id;
      resp = scorer.evaluate(req);
    } catch (const std::exception& e) {
      resp.scores.clear();
      resp.puncts.clear();
      resp.error = e.what();
    }
    if (!write_all(out_fd, encode_response(resp) + "\n")) return;
  }
}

void serve_scorer_tcp(Scorer& scorer, const std::string& address) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  AddrInfo res;
  if (int rc = getaddrinfo(host.c_str(), port.c_str(), &hints, &res.head); rc != 0) {
    throw ConfigError("cannot resolve " + address + ": " + gai_strerror(rc));
  }
  int listener = socket(res.head->ai_family, res.head->ai_socktype, res.head->ai_protocol);
  if (listener < 0) throw ConfigError("socket failed");
  int one = 1;
  setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (bind(listener, res.head->ai_addr, res.head->ai_addrlen) != 0 || listen(listener, 8) != 0) {
    close(listener);
    throw ConfigError("cannot listen on " + address + ": " + strerror(errno));
  }
  signal(SIGPIPE, SIG_IGN);
  for (;;) {
    int conn = accept(listener, nullptr, nullptr);
    if (conn < 0) continue;
    serve_scorer(scorer, conn, conn);
    close(conn);
  }
}

}  // namespace lightbeam
