#include "todsim/protocol.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "json_codec.hpp"
#include "todsim/nlg.hpp"

extern char** environ;

namespace todsim {

using detail::json;

namespace {

constexpr ProtocolRole kAllRoles[] = {ProtocolRole::kSystem, ProtocolRole::kSimulator,
                                      ProtocolRole::kLmScorer, ProtocolRole::kPairScorer};
constexpr std::size_t kMaxLineBytes = 16u << 20;

[[noreturn]] void bad(std::string_view raw, const std::string& why) {
  throw ProtocolError("protocol error: " + why, std::string(raw));
}

}  // namespace

std::string_view to_string(ProtocolRole role) {
  switch (role) {
    case ProtocolRole::kSystem: return "system";
    case ProtocolRole::kSimulator: return "simulator";
    case ProtocolRole::kLmScorer: return "lm_scorer";
    case ProtocolRole::kPairScorer: return "pair_scorer";
  }
  return "system";
}

std::optional<ProtocolRole> parse_protocol_role(std::string_view name) {
  for (ProtocolRole r : kAllRoles) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view message_type(const Message& m) {
  static constexpr std::string_view kNames[] = {"hello",         "turn_request", "turn_reply",
                                                "score_request", "score_reply",  "bye",
                                                "error"};
  return kNames[m.index()];
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

struct Encoder {
  json operator()(const HelloMsg& m) const {
    return json{{"version", m.version}, {"role", std::string(to_string(m.role))}};
  }
  json operator()(const TurnRequestMsg& m) const {
    const TurnRequest& r = m.request;
    json history = json::array();
    for (const auto& t : r.history) history.push_back(detail::turn_to_json(t));
    json j{{"session_id", r.session_id},
           {"turn_index", r.turn_index},
           {"history", history},
           {"user_utterance", r.user_utterance},
           {"user_acts", detail::acts_to_json(r.user_acts)},
           {"belief_state", detail::belief_to_json(r.belief)},
           {"seed", r.seed}};
    if (r.goal_state) j["goal_state"] = detail::goal_state_to_json(*r.goal_state);
    return j;
  }
  json operator()(const TurnReplyMsg& m) const {
    json j{{"utterance", m.utterance}};
    if (m.acts) j["acts"] = detail::acts_to_json(*m.acts);
    if (m.belief_state) j["belief_state"] = detail::belief_to_json(*m.belief_state);
    return j;
  }
  json operator()(const ScoreRequestMsg& m) const {
    if (m.text.has_value() == m.pair.has_value()) {
      throw ProtocolError("score_request needs exactly one of text and pair", "");
    }
    if (m.text) return json{{"text", *m.text}};
    return json{{"pair", json::array({m.pair->first, m.pair->second})}};
  }
  json operator()(const ScoreReplyMsg& m) const {
    if (!std::isfinite(m.value)) throw ProtocolError("score_reply value is not finite", "");
    return json{{"value", m.value}};
  }
  json operator()(const ByeMsg&) const { return json::object(); }
  json operator()(const ErrorMsg& m) const { return json{{"message", m.message}}; }
};

}  // namespace

std::string encode_message(const Message& m) {
  json j = std::visit(Encoder{}, m);
  j["type"] = std::string(message_type(m));
  try {
    return detail::dump_line(j);
  } catch (const detail::SchemaViolation& v) {
    throw ProtocolError(v.rule, "");
  }
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

Message decode_json(const json& j) {
  detail::require_object(j, "");
  const std::string type = detail::get_string(detail::member(j, "type", ""), "/type");
  const detail::ActDecoding strict{};
  if (type == "hello") {
    detail::only_keys(j, {"type", "version", "role"}, "");
    HelloMsg h;
    const auto v = detail::get_int(detail::member(j, "version", ""), "/version");
    if (v < 0 || v > INT32_MAX) detail::violation("/version", "version out of range");
    h.version = static_cast<int>(v);
    const std::string role = detail::get_string(detail::member(j, "role", ""), "/role");
    auto r = parse_protocol_role(role);
    if (!r) detail::violation("/role", "unknown role '" + role + "'");
    h.role = *r;
    return h;
  }
  if (type == "turn_request") {
    detail::only_keys(j,
                      {"type", "session_id", "turn_index", "goal_state", "history",
                       "user_utterance", "user_acts", "belief_state", "seed"},
                      "");
    TurnRequestMsg m;
    TurnRequest& r = m.request;
    r.session_id = detail::get_string(detail::member(j, "session_id", ""), "/session_id");
    const auto t = detail::get_int(detail::member(j, "turn_index", ""), "/turn_index");
    if (t < 0 || t > INT32_MAX) detail::violation("/turn_index", "turn index out of range");
    r.turn_index = static_cast<int>(t);
    if (const json* g = detail::optional_member(j, "goal_state")) {
      r.goal_state = detail::goal_state_from_json(*g, "/goal_state");
    }
    const json& history = detail::member(j, "history", "");
    detail::require_array(history, "/history");
    for (std::size_t i = 0; i < history.size(); ++i) {
      r.history.push_back(
          detail::turn_from_json(history[i], "/history/" + std::to_string(i), strict));
    }
    if (const json* u = detail::optional_member(j, "user_utterance")) {
      r.user_utterance = detail::get_string(*u, "/user_utterance");
    }
    if (const json* a = detail::optional_member(j, "user_acts")) {
      r.user_acts = detail::acts_from_json(*a, "/user_acts", strict);
    }
    if (const json* b = detail::optional_member(j, "belief_state")) {
      r.belief = detail::belief_from_json(*b, "/belief_state");
    }
    if (const json* s = detail::optional_member(j, "seed")) r.seed = detail::get_uint(*s, "/seed");
    return m;
  }
  if (type == "turn_reply") {
    detail::only_keys(j, {"type", "acts", "utterance", "belief_state"}, "");
    TurnReplyMsg m;
    m.utterance = detail::get_string(detail::member(j, "utterance", ""), "/utterance");
    if (const json* a = detail::optional_member(j, "acts")) {
      m.acts = detail::acts_from_json(*a, "/acts", strict);
    }
    if (const json* b = detail::optional_member(j, "belief_state")) {
      m.belief_state = detail::belief_from_json(*b, "/belief_state");
    }
    return m;
  }
  if (type == "score_request") {
    detail::only_keys(j, {"type", "text", "pair"}, "");
    ScoreRequestMsg m;
    const json* text = detail::optional_member(j, "text");
    const json* pair = detail::optional_member(j, "pair");
    if ((text == nullptr) == (pair == nullptr)) {
      detail::violation("", "score_request needs exactly one of text and pair");
    }
    if (text != nullptr) {
      m.text = detail::get_string(*text, "/text");
    } else {
      detail::require_array(*pair, "/pair");
      if (pair->size() != 2) detail::violation("/pair", "pair must have two elements");
      m.pair = std::make_pair(detail::get_string((*pair)[0], "/pair/0"),
                              detail::get_string((*pair)[1], "/pair/1"));
    }
    return m;
  }
  if (type == "score_reply") {
    detail::only_keys(j, {"type", "value"}, "");
    return ScoreReplyMsg{detail::get_number(detail::member(j, "value", ""), "/value")};
  }
  if (type == "bye") {
    detail::only_keys(j, {"type"}, "");
    return ByeMsg{};
  }
  if (type == "error") {
    detail::only_keys(j, {"type", "message"}, "");
    return ErrorMsg{detail::get_string(detail::member(j, "message", ""), "/message")};
  }
  detail::violation("/type", "unknown message type '" + type + "'");
}

}  // namespace

Message decode_message(std::string_view line) {
  try {
    return decode_json(detail::parse_json(line));
  } catch (const detail::SchemaViolation& v) {
    bad(line, (v.path.empty() ? std::string() : v.path + ": ") + v.rule);
  }
}

// ---------------------------------------------------------------------------
// Transport

FdChannel::FdChannel(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}

FdChannel::~FdChannel() { close_fds(); }

void FdChannel::close_fds() {
  if (!owns_) return;
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  read_fd_ = -1;
  write_fd_ = -1;
}

void FdChannel::send_line(std::string_view line) {
  if (line.find('\n') != std::string_view::npos) {
    throw TransportError("refusing to send a line containing a newline");
  }
  std::string data(line);
  data += '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n;
    if (read_fd_ == write_fd_) {
      n = ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    } else {
      n = ::write(write_fd_, data.data() + off, data.size() - off);
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string FdChannel::receive_line(std::chrono::milliseconds timeout) {
  using Clock = std::chrono::steady_clock;
  const bool forever = timeout.count() <= 0;
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (buffer_.size() > kMaxLineBytes) throw ProtocolError("line too long", buffer_.substr(0, 256));
    int wait_ms = -1;
    if (!forever) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) throw AgentUnresponsive("no reply within " + std::to_string(timeout.count()) + " ms");
      wait_ms = static_cast<int>(std::min<long long>(left, INT32_MAX));
    }
    pollfd p{read_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;  // deadline re-checked above
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw TransportError("peer closed the channel");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ProcessChannel::ProcessChannel(int read_fd, int write_fd, int pid)
    : FdChannel(read_fd, write_fd, true), pid_(pid) {}

std::unique_ptr<ProcessChannel> ProcessChannel::spawn(const std::string& command) {
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
  std::string sh = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
  // Own process group, so teardown reaches whatever the shell started.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw TransportError("cannot run '" + command + "': " + std::strerror(rc));
  }
  return std::unique_ptr<ProcessChannel>(new ProcessChannel(from_child[0], to_child[1], pid));
}

ProcessChannel::~ProcessChannel() {
  close_fds();  // the child sees end of input
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(-pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

TcpChannel::TcpChannel(int socket_fd) : FdChannel(socket_fd, socket_fd, true) {}

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host, int port,
                                                std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    // Non-blocking connect bounded by the timeout.
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, a->ai_addr, a->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      const int wait_ms = timeout.count() > 0 ? static_cast<int>(timeout.count()) : -1;
      rc = ::poll(&p, 1, wait_ms) == 1 ? 0 : -1;
      if (rc == 0) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
          errno = err;
          rc = -1;
        }
      } else {
        errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      ::freeaddrinfo(res);
      return std::make_unique<TcpChannel>(fd);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError("cannot connect to " + host + ":" + service + ": " + last_error);
}

TcpListener::TcpListener(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
      rc != 0) {
    throw TransportError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* a = res; a != nullptr && fd_ < 0; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      fd_ = fd;
    } else {
      last_error = std::strerror(errno);
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError("cannot listen on " + host + ":" + service + ": " + last_error);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6
              ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
              : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpListener::accept(std::chrono::milliseconds timeout) {
  for (;;) {
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, timeout.count() > 0 ? static_cast<int>(timeout.count()) : -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw AgentUnresponsive("no connection within " + std::to_string(timeout.count()) + " ms");
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpChannel>(fd);
  }
}

std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint,
                                           std::chrono::milliseconds timeout) {
  if (endpoint.rfind("exec:", 0) == 0) {
    const std::string cmd = endpoint.substr(5);
    if (cmd.empty()) throw TransportError("empty command in endpoint '" + endpoint + "'");
    return ProcessChannel::spawn(cmd);
  }
  if (endpoint.rfind("tcp:", 0) == 0) {
    const std::string rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw TransportError("endpoint '" + endpoint + "' is not tcp:<host>:<port>");
    }
    int port = 0;
    try {
      std::size_t used = 0;
      port = std::stoi(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1 || port <= 0 || port > 65535) throw std::out_of_range("");
    } catch (const std::exception&) {
      throw TransportError("bad port in endpoint '" + endpoint + "'");
    }
    return TcpChannel::connect(rest.substr(0, colon), port, timeout);
  }
  throw TransportError("unknown endpoint '" + endpoint + "' (expected exec:<cmd> or tcp:<host>:<port>)");
}

// ---------------------------------------------------------------------------
// Client

ProtocolClient::ProtocolClient(std::unique_ptr<LineChannel> channel, ProtocolRole role,
                               std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), role_(role), timeout_(timeout) {
  channel_->send_line(encode_message(HelloMsg{kProtocolVersion, role}));
  const std::string line = channel_->receive_line(timeout_);
  const Message reply = decode_message(line);
  if (const auto* err = std::get_if<ErrorMsg>(&reply)) {
    throw ProtocolError("handshake refused: " + err->message, line);
  }
  const auto* hello = std::get_if<HelloMsg>(&reply);
  if (hello == nullptr) throw ProtocolError("expected hello, got " + std::string(message_type(reply)), line);
  if (hello->version != kProtocolVersion) {
    closed_ = true;
    throw VersionMismatch("protocol version mismatch: local " + std::to_string(kProtocolVersion) +
                          ", peer " + std::to_string(hello->version));
  }
  if (hello->role != role) {
    closed_ = true;
    throw RoleMismatch("role mismatch: expected " + std::string(to_string(role)) + ", peer is " +
                       std::string(to_string(hello->role)));
  }
}

ProtocolClient::~ProtocolClient() {
  try {
    close();
  } catch (...) {
  }
}

Message ProtocolClient::call(const Message& request) {
  if (closed_) throw TransportError("channel is closed");
  channel_->send_line(encode_message(request));
  const std::string line = channel_->receive_line(timeout_);
  Message reply = decode_message(line);
  if (const auto* err = std::get_if<ErrorMsg>(&reply)) {
    throw ProtocolError("peer error: " + err->message, line);
  }
  return reply;
}

void ProtocolClient::close() {
  if (closed_) return;
  closed_ = true;
  channel_->send_line(encode_message(ByeMsg{}));
}

std::unique_ptr<ProtocolClient> connect_protocol(const std::string& endpoint, ProtocolRole role,
                                                 std::chrono::milliseconds timeout) {
  return std::make_unique<ProtocolClient>(open_endpoint(endpoint, timeout), role, timeout);
}

ExternalAgent::ExternalAgent(std::unique_ptr<ProtocolClient> client)
    : client_(std::move(client)) {
  switch (client_->role()) {
    case ProtocolRole::kSystem: role_ = AgentRole::kSystem; break;
    case ProtocolRole::kSimulator: role_ = AgentRole::kSimulator; break;
    default: throw ConfigError("external agent needs a system or simulator channel");
  }
}

AgentTurnOutput ExternalAgent::respond(const TurnRequest& request) {
  const Message reply = client_->call(TurnRequestMsg{request});
  const auto* tr = std::get_if<TurnReplyMsg>(&reply);
  if (tr == nullptr) {
    throw ProtocolError("expected turn_reply, got " + std::string(message_type(reply)),
                        encode_message(reply));
  }
  AgentTurnOutput out;
  out.utterance = tr->utterance;
  if (tr->acts) {
    out.acts = *tr->acts;
  } else {
    const Speaker sp = role_ == AgentRole::kSimulator ? Speaker::kUser : Speaker::kSystem;
    out.acts = parse_utterance(sp, tr->utterance).value_or(std::vector<DialogueAct>{});
  }
  out.belief_state = tr->belief_state;
  return out;
}

namespace {

double expect_score(const Message& reply) {
  const auto* s = std::get_if<ScoreReplyMsg>(&reply);
  if (s == nullptr) {
    throw ProtocolError("expected score_reply, got " + std::string(message_type(reply)),
                        encode_message(reply));
  }
  return s->value;
}

}  // namespace

struct ExternalSentenceScorer::Impl {
  std::unique_ptr<ProtocolClient> client;
  std::mutex mu;
};

ExternalSentenceScorer::ExternalSentenceScorer(std::unique_ptr<ProtocolClient> client)
    : impl_(std::make_unique<Impl>()) {
  if (client->role() != ProtocolRole::kLmScorer) throw ConfigError("sentence scorer needs an lm_scorer channel");
  impl_->client = std::move(client);
}

ExternalSentenceScorer::~ExternalSentenceScorer() = default;

double ExternalSentenceScorer::score(std::string_view text) const {
  std::lock_guard lock(impl_->mu);
  ScoreRequestMsg req;
  req.text = std::string(text);
  return expect_score(impl_->client->call(req));
}

struct ExternalPairScorer::Impl {
  std::unique_ptr<ProtocolClient> client;
  std::mutex mu;
};

ExternalPairScorer::ExternalPairScorer(std::unique_ptr<ProtocolClient> client)
    : impl_(std::make_unique<Impl>()) {
  if (client->role() != ProtocolRole::kPairScorer) throw ConfigError("pair scorer needs a pair_scorer channel");
  impl_->client = std::move(client);
}

ExternalPairScorer::~ExternalPairScorer() = default;

double ExternalPairScorer::confidence(std::string_view left, std::string_view right) const {
  std::lock_guard lock(impl_->mu);
  ScoreRequestMsg req;
  req.pair = std::make_pair(std::string(left), std::string(right));
  return expect_score(impl_->client->call(req));
}

// ---------------------------------------------------------------------------
// Server

namespace {

void reply(LineChannel& ch, const Message& m) { ch.send_line(encode_message(m)); }

Message handle(const Message& m, const ServeOptions& opts) {
  if (const auto* tr = std::get_if<TurnRequestMsg>(&m)) {
    if (opts.agent == nullptr) return ErrorMsg{"this endpoint does not answer turn requests"};
    AgentTurnOutput out = opts.agent->respond(tr->request);
    return TurnReplyMsg{std::move(out.acts), std::move(out.utterance), std::move(out.belief_state)};
  }
  if (const auto* sr = std::get_if<ScoreRequestMsg>(&m)) {
    if (sr->text) {
      if (opts.sentence == nullptr) return ErrorMsg{"this endpoint does not score text"};
      return ScoreReplyMsg{opts.sentence->score(*sr->text)};
    }
    if (opts.pair == nullptr) return ErrorMsg{"this endpoint does not score pairs"};
    return ScoreReplyMsg{opts.pair->confidence(sr->pair->first, sr->pair->second)};
  }
  return ErrorMsg{"unexpected message '" + std::string(message_type(m)) + "'"};
}

}  // namespace

void serve_protocol(LineChannel& channel, const ServeOptions& opts) {
  const std::string first = channel.receive_line(opts.idle_timeout);
  Message m;
  try {
    m = decode_message(first);
  } catch (const ProtocolError& e) {
    reply(channel, ErrorMsg{std::string(e.what()) + "; line: " + first});
    throw;
  }
  const auto* hello = std::get_if<HelloMsg>(&m);
  if (hello == nullptr) {
    reply(channel, ErrorMsg{"expected hello first"});
    throw ProtocolError("client did not open with hello", first);
  }
  reply(channel, HelloMsg{opts.version, opts.role});
  if (hello->version != opts.version) {
    throw VersionMismatch("client speaks version " + std::to_string(hello->version));
  }
  if (hello->role != opts.role) {
    throw RoleMismatch("client expected role " + std::string(to_string(hello->role)));
  }

  for (;;) {
    std::string line;
    try {
      line = channel.receive_line(opts.idle_timeout);
    } catch (const TransportError&) {
      return;  // client went away
    }
    Message req;
    try {
      req = decode_message(line);
    } catch (const ProtocolError& e) {
      reply(channel, ErrorMsg{std::string(e.what()) + "; line: " + line});
      continue;
    }
    if (std::holds_alternative<ByeMsg>(req)) return;
    Message out;
    try {
      out = handle(req, opts);
      // Validate before sending so a bad value becomes an error reply.
      (void)encode_message(out);
    } catch (const std::exception& e) {
      out = ErrorMsg{e.what()};
    }
    reply(channel, out);
  }
}

}  // namespace todsim
