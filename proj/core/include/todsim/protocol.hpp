#pragma once

// Wire protocol for external agents and scorers: newline-delimited JSON
// messages, one request in flight per channel. The client opens with hello
// and the server answers with its own hello; both sides then check version
// and role.
//
//   {"type":"hello","version":1,"role":"system"}
//   {"type":"turn_request","session_id":...,"turn_index":...,"goal_state":{...}?,
//    "history":[...],"user_utterance":"...","user_acts":[...],"belief_state":{...},
//    "seed":N}
//   {"type":"turn_reply","acts":[...]?,"utterance":"...","belief_state":{...}?}
//   {"type":"score_request","text":"..."} | {"type":"score_request","pair":["l","r"]}
//   {"type":"score_reply","value":x}
//   {"type":"bye"}
//   {"type":"error","message":"..."}

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "todsim/agents.hpp"
#include "todsim/domain.hpp"
#include "todsim/errors.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

inline constexpr int kProtocolVersion = 1;

enum class ProtocolRole : std::uint8_t { kSystem, kSimulator, kLmScorer, kPairScorer };

std::string_view to_string(ProtocolRole role);
std::optional<ProtocolRole> parse_protocol_role(std::string_view name);

struct HelloMsg {
  int version = kProtocolVersion;
  ProtocolRole role = ProtocolRole::kSystem;
  bool operator==(const HelloMsg&) const = default;
};

struct TurnRequestMsg {
  TurnRequest request;
  bool operator==(const TurnRequestMsg&) const = default;
};

struct TurnReplyMsg {
  std::optional<std::vector<DialogueAct>> acts;  // absent: parse the utterance
  std::string utterance;
  std::optional<BeliefState> belief_state;
  bool operator==(const TurnReplyMsg&) const = default;
};

struct ScoreRequestMsg {
  // Exactly one of text / pair.
  std::optional<std::string> text;
  std::optional<std::pair<std::string, std::string>> pair;
  bool operator==(const ScoreRequestMsg&) const = default;
};

struct ScoreReplyMsg {
  double value = 0.0;
  bool operator==(const ScoreReplyMsg&) const = default;
};

struct ByeMsg {
  bool operator==(const ByeMsg&) const = default;
};

struct ErrorMsg {
  std::string message;
  bool operator==(const ErrorMsg&) const = default;
};

using Message = std::variant<HelloMsg, TurnRequestMsg, TurnReplyMsg, ScoreRequestMsg,
                             ScoreReplyMsg, ByeMsg, ErrorMsg>;

std::string_view message_type(const Message& m);

// One line of JSON, no trailing newline. Throws ProtocolError when a string is
// not valid UTF-8 or a score is not finite.
std::string encode_message(const Message& m);
// Throws ProtocolError carrying `line` on any malformed input.
Message decode_message(std::string_view line);

// ---------------------------------------------------------------------------
// Transport

// A bidirectional line channel.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  // Throws TransportError.
  virtual void send_line(std::string_view line) = 0;
  // Next line without its newline. Throws AgentUnresponsive on timeout and
  // TransportError on end of stream.
  virtual std::string receive_line(std::chrono::milliseconds timeout) = 0;
};

// Reads from and writes to raw file descriptors; does not own them unless
// told to.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns = false);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void send_line(std::string_view line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;

 protected:
  void close_fds();

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
};

// Runs `/bin/sh -c command` and talks to its stdin/stdout. The child is
// terminated when the channel is destroyed.
class ProcessChannel final : public FdChannel {
 public:
  static std::unique_ptr<ProcessChannel> spawn(const std::string& command);
  ~ProcessChannel() override;

 private:
  ProcessChannel(int read_fd, int write_fd, int pid);
  int pid_;
};

class TcpChannel final : public FdChannel {
 public:
  static std::unique_ptr<TcpChannel> connect(const std::string& host, int port,
                                             std::chrono::milliseconds timeout);
  // Wraps an accepted socket.
  explicit TcpChannel(int socket_fd);
};

// Listening socket for serving over TCP. Port 0 picks a free port.
class TcpListener {
 public:
  TcpListener(const std::string& host, int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }
  // Throws AgentUnresponsive when nobody connects within the timeout
  // (0 waits forever).
  std::unique_ptr<TcpChannel> accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  int port_ = 0;
};

// Endpoint syntax: "exec:<shell command>" or "tcp:<host>:<port>".
std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint,
                                           std::chrono::milliseconds timeout);

inline constexpr std::chrono::milliseconds kDefaultProtocolTimeout{30000};

// Client side of a channel after a successful handshake.
class ProtocolClient {
 public:
  // Sends hello and checks the reply. Throws VersionMismatch, RoleMismatch,
  // ProtocolError, AgentUnresponsive or TransportError.
  ProtocolClient(std::unique_ptr<LineChannel> channel, ProtocolRole role,
                 std::chrono::milliseconds timeout = kDefaultProtocolTimeout);
  ~ProtocolClient();
  ProtocolClient(const ProtocolClient&) = delete;
  ProtocolClient& operator=(const ProtocolClient&) = delete;

  ProtocolRole role() const { return role_; }
  std::chrono::milliseconds timeout() const { return timeout_; }

  // One request, one reply. An error reply becomes ProtocolError.
  Message call(const Message& request);
  // Sends bye; further calls fail.
  void close();

 private:
  std::unique_ptr<LineChannel> channel_;
  ProtocolRole role_;
  std::chrono::milliseconds timeout_;
  bool closed_ = false;
};

std::unique_ptr<ProtocolClient> connect_protocol(
    const std::string& endpoint, ProtocolRole role,
    std::chrono::milliseconds timeout = kDefaultProtocolTimeout);

// Agent backed by a remote process. Replies without acts are parsed from the
// utterance; unparseable text gives an empty act list.
class ExternalAgent final : public Agent {
 public:
  explicit ExternalAgent(std::unique_ptr<ProtocolClient> client);
  AgentRole role() const override { return role_; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  std::unique_ptr<ProtocolClient> client_;
  AgentRole role_;
};

// Remote scorers; calls are serialized so one instance can serve many
// workers.
class ExternalSentenceScorer final : public SentenceScorer {
 public:
  explicit ExternalSentenceScorer(std::unique_ptr<ProtocolClient> client);
  ~ExternalSentenceScorer() override;
  double score(std::string_view text) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ExternalPairScorer final : public PairScorer {
 public:
  explicit ExternalPairScorer(std::unique_ptr<ProtocolClient> client);
  ~ExternalPairScorer() override;
  double confidence(std::string_view left, std::string_view right) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Server side

struct ServeOptions {
  ProtocolRole role = ProtocolRole::kSystem;
  int version = kProtocolVersion;
  Agent* agent = nullptr;                     // system / simulator roles
  const SentenceScorer* sentence = nullptr;   // lm_scorer role
  const PairScorer* pair = nullptr;           // pair_scorer role
  std::chrono::milliseconds idle_timeout{0};  // 0 waits forever
};

// Answers hello, then requests until bye or end of stream. Malformed lines
// get an error reply quoting them and the loop continues. Throws
// VersionMismatch or RoleMismatch (after replying with its own hello) when the
// client's hello does not match.
void serve_protocol(LineChannel& channel, const ServeOptions& opts);

}  // namespace todsim
