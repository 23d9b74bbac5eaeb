#pragma once

// Turn-level discounted REINFORCE for the simulator and system policies.
//
// For a turn with |A| sampled tokens and session reward R, the gradient of the
// turn is  sum_i gamma^(|A|-i) * R * grad log pi(token_i | x_i),  and for a
// softmax policy grad log pi at x is (onehot(chosen) - p) outer x.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "todsim/agents.hpp"
#include "todsim/domain.hpp"
#include "todsim/errors.hpp"
#include "todsim/goal_tracker.hpp"
#include "todsim/policy.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

// Which half of the dev goals picks the returned checkpoint, if any.
enum class DevSelection { kNone, kFirstHalf, kSecondHalf };

std::string_view to_string(DevSelection s);
std::optional<DevSelection> parse_dev_selection(std::string_view text);

struct RLConfig {
  double gamma = 0.99;
  double alpha = 0.0;  // weight of 1 / sentence score
  double beta = 0.0;   // weight of session score
  double learning_rate = 0.01;
  int goals_per_epoch = 200;
  int episodes_per_phase = 200;
  int epochs = 20;
  double sent_floor = 0.1;
  std::uint64_t seed = 0;
  // Moving-average reward baseline; off by default.
  bool baseline = false;
  double baseline_decay = 0.9;
  int max_tokens = kDefaultMaxTokens;
  TerminationConfig termination;
  DevSelection dev_selection = DevSelection::kNone;

  bool operator==(const RLConfig&) const = default;
};

// Throws ConfigError naming the first out-of-range field.
void validate(const RLConfig& cfg);

struct RewardSignal {
  bool success = false;
  double sent = 0.0;  // 0 when no sentence scorer was used
  double sess = 0.0;  // 0 when no pair scorer was used
  double total = 0.0;

  bool operator==(const RewardSignal&) const = default;
};

// total = success + alpha / max(sent, sent_floor) + beta * sess
RewardSignal make_reward(bool success, double sent, double sess, double alpha, double beta,
                         double sent_floor);

// Throws ConfigError when alpha > 0 without a sentence scorer or beta > 0
// without a pair scorer. Scorers that are given are always evaluated.
RewardSignal compute_reward(const Session& session, const VenueDatabase& db, const RLConfig& cfg,
                            const SentenceScorer* sentence_scorer, const PairScorer* pair_scorer);

// gamma^(len - i) for i = 1..len.
std::vector<double> position_weights(std::size_t len, double gamma);

// Same shape as params.weights. Throws InvalidArgument when the trace does not
// fit the parameter shape.
std::vector<double> turn_gradient(const TurnTrace& trace, const PolicyParameters& params,
                                  double reward, double gamma);

struct Episode {
  Session session;
  std::vector<TurnTrace> traces;  // in call order, both roles
  RewardSignal reward;
};

Episode run_episode(const PolicyParameters& sim_params, const PolicyParameters& sys_params,
                    const Goal& goal, const VenueDatabase& db, const RLConfig& cfg,
                    std::uint64_t seed, const SentenceScorer* sentence_scorer = nullptr,
                    const PairScorer* pair_scorer = nullptr);

struct TrainingLogRow {
  int epoch = 0;
  AgentRole phase = AgentRole::kSimulator;  // the agent being updated
  double success_rate = 0.0;
  double mean_reward = 0.0;
  std::optional<double> mean_sent;
  std::optional<double> mean_sess;

  bool operator==(const TrainingLogRow&) const = default;
};

struct TrainingResult {
  PolicyParameters simulator;
  PolicyParameters system;
  std::vector<TrainingLogRow> log;
  // Filled only under dev selection. dev_success[k] is the dev success after
  // epoch k, with k = 0 the initial parameters.
  std::optional<int> selected_epoch;
  std::vector<double> dev_success;
};

// Thrown by the divergence guard; the message names the role and weight.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Each epoch samples cfg.goals_per_epoch goals, then runs two phases of
// cfg.episodes_per_phase episodes: first the system is frozen and the
// simulator updated after every episode, then the reverse. A frozen agent that
// changes, or any weight above 1e6 in magnitude, aborts training.
// `on_row` sees each log row as soon as its phase ends.
//
// With cfg.dev_selection set, the chosen half of `dev_goals` (the first half
// gets the extra goal when the count is odd) is scored with evaluate_success
// before training and after every epoch, and the earliest best checkpoint is
// returned instead of the last one.
TrainingResult train_alternating(PolicyParameters sim_params, PolicyParameters sys_params,
                                 std::span<const Goal> goal_pool, const VenueDatabase& db,
                                 const RLConfig& cfg,
                                 const SentenceScorer* sentence_scorer = nullptr,
                                 const PairScorer* pair_scorer = nullptr,
                                 const std::function<void(const TrainingLogRow&)>& on_row = {},
                                 std::span<const Goal> dev_goals = {});

// The goals dev selection scores; empty for DevSelection::kNone.
std::span<const Goal> dev_half(std::span<const Goal> dev_goals, DevSelection selection);

// Success rate in [0, 1] of one sampled episode per goal, episode i seeded
// with derive_seed(seed, i).
double evaluate_success(const PolicyParameters& sim_params, const PolicyParameters& sys_params,
                        std::span<const Goal> goals, const VenueDatabase& db,
                        const RLConfig& cfg, std::uint64_t seed);

inline constexpr std::string_view kTrainingLogHeader =
    "epoch,phase,success_rate,mean_reward,mean_sent,mean_sess";

void write_training_log(std::ostream& out, std::span<const TrainingLogRow> rows);

}  // namespace todsim
