#pragma once

// Run configuration. A JSON document with every member optional:
//
//   {"format": "todsim-config", "version": 1, "mode": "interactive",
//    "corpus": "toy", "simulator": "agenda", "system": "rule",
//    "sentence_scorer": "lm:model.lm", "pair_scorer": "clf:scorer.clf",
//    "termination": {"max_turns": 20, "farewell_acts": ["bye", "thank"]},
//    "rl": {"gamma": 0.99, ...}, "lm": {"order": 3, "smoothing": 0.1},
//    "session_scorer": {"negative_ratio": 1.0, ...},
//    "seed": 0, "workers": 0, "limit": 100, "timeout_seconds": 30}
//
// Unknown members and out-of-range values are rejected before any run starts.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "todsim/engine.hpp"
#include "todsim/errors.hpp"
#include "todsim/goal_tracker.hpp"
#include "todsim/protocol.hpp"
#include "todsim/rl.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

struct RunConfig {
  EvalMode mode = EvalMode::kInteractive;
  std::string corpus = "toy";  // "toy" or a corpus directory
  // Agent specs: a built-in name, "policy:<file>", "exec:<cmd>" or
  // "tcp:<host>:<port>".
  std::string simulator = "agenda";
  std::string system = "rule";
  // "lm:<file>" / "clf:<file>" or a protocol endpoint.
  std::optional<std::string> sentence_scorer;
  std::optional<std::string> pair_scorer;
  TerminationConfig termination;
  RLConfig rl;  // rl.seed and rl.termination are taken from the fields here
  int lm_order = 3;
  double lm_smoothing = 0.1;
  double negative_ratio = 1.0;
  ClassifierTraining classifier;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: available parallelism
  std::optional<std::size_t> limit;  // use only the first N goals or dialogues
  std::chrono::milliseconds timeout = kDefaultProtocolTimeout;

  bool operator==(const RunConfig&) const = default;
};

// Throws ConfigError "<file>: <json pointer>: <rule>" on any violation.
RunConfig parse_run_config(std::string_view text, const std::string& file = "config");
std::string encode_run_config(const RunConfig& cfg);

// Throws ConfigError naming the first out-of-range field.
void validate(const RunConfig& cfg);

using EnvLookup = std::function<const char*(const char*)>;

// TODSIM_SYSTEM_ENDPOINT, TODSIM_SIMULATOR_ENDPOINT, TODSIM_LM_SCORER_ENDPOINT,
// TODSIM_PAIR_SCORER_ENDPOINT replace the corresponding spec; TODSIM_TIMEOUT
// (seconds) replaces the timeout. Empty variables are ignored.
void apply_environment(RunConfig& cfg, const EnvLookup& lookup);
void apply_environment(RunConfig& cfg);

// Worker count with 0 resolved to the available parallelism.
unsigned effective_workers(const RunConfig& cfg);

}  // namespace todsim
