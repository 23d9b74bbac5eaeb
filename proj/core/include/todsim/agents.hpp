#pragma once

// The two interacting parties behind one contract. Simulators receive the
// goal state and history; systems receive the history, the current user turn
// and the engine's belief state, and may return an updated belief.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "todsim/domain.hpp"
#include "todsim/nlg.hpp"
#include "todsim/policy.hpp"

namespace todsim {

struct TurnRequest {
  std::string session_id;
  int turn_index = 0;
  std::optional<GoalState> goal_state;  // simulator-bound requests
  std::vector<Turn> history;            // completed turns before this one
  std::string user_utterance;           // system-bound requests
  std::vector<DialogueAct> user_acts;   // system-bound requests
  BeliefState belief;                   // system-bound requests
  std::uint64_t seed = 0;

  bool operator==(const TurnRequest&) const = default;
};

struct AgentTurnOutput {
  std::vector<DialogueAct> acts;
  std::string utterance;
  std::optional<TurnTrace> trace;
  std::optional<BeliefState> belief_state;

  bool operator==(const AgentTurnOutput&) const = default;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentRole role() const = 0;
  virtual AgentTurnOutput respond(const TurnRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Turn functions

// bye when nothing is left; else acts for the first k unfinished items in
// canonical order.
AgentTurnOutput agenda_user_turn(const GoalState& state, std::span<const Turn> history, int k);

// Belief after folding in every user inform (booking requests excluded).
BeliefState update_belief(const BeliefState& belief, std::span<const DialogueAct> user_acts);

std::pair<BeliefState, AgentTurnOutput> rule_system_turn(const VenueDatabase& db,
                                                         const BeliefState& belief,
                                                         std::span<const DialogueAct> user_acts);

// Skeleton action token naming an act ("inform:restaurant:phone", "bye").
std::string skeleton_token(const DialogueAct& act);

std::vector<double> simulator_features(const FeatureSchema& schema, const GoalState& state,
                                       std::span<const Turn> history);
std::vector<double> system_features(const FeatureSchema& schema, const VenueDatabase& db,
                                    const BeliefState& updated_belief,
                                    std::span<const DialogueAct> user_acts, int turn_index);

// Value grounding: the simulator fills inform values from its goal, the system
// from the first database match (nooffer when there is none).
std::vector<DialogueAct> ground_user_tokens(const PolicyParameters& params,
                                            std::span<const std::size_t> tokens,
                                            const GoalState& state);
std::vector<DialogueAct> ground_system_tokens(const PolicyParameters& params,
                                              std::span<const std::size_t> tokens,
                                              const VenueDatabase& db,
                                              const BeliefState& updated_belief);

inline constexpr int kDefaultMaxTokens = 4;

// Throws ConfigError when params are not a simulator policy for `schema`.
AgentTurnOutput policy_user_turn(const PolicyParameters& params, const FeatureSchema& schema,
                                 const GoalState& state, std::span<const Turn> history,
                                 std::uint64_t rng_seed, int max_tokens = kDefaultMaxTokens);

std::pair<BeliefState, AgentTurnOutput> policy_system_turn(
    const PolicyParameters& params, const FeatureSchema& schema, const VenueDatabase& db,
    const BeliefState& belief, std::span<const DialogueAct> user_acts, int turn_index,
    std::uint64_t rng_seed, int max_tokens = kDefaultMaxTokens);

// ---------------------------------------------------------------------------
// Agents

class AgendaSimulator final : public Agent {
 public:
  explicit AgendaSimulator(int acts_per_turn = 2);
  AgentRole role() const override { return AgentRole::kSimulator; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  int k_;
};

class RuleSystem final : public Agent {
 public:
  explicit RuleSystem(const VenueDatabase& db) : db_(&db) {}
  AgentRole role() const override { return AgentRole::kSystem; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  const VenueDatabase* db_;
};

class PolicySimulator final : public Agent {
 public:
  PolicySimulator(PolicyParameters params, const Ontology& ontology,
                  int max_tokens = kDefaultMaxTokens);
  AgentRole role() const override { return AgentRole::kSimulator; }
  AgentTurnOutput respond(const TurnRequest& request) override;

  const PolicyParameters& params() const { return params_; }
  PolicyParameters& params() { return params_; }

 private:
  PolicyParameters params_;
  FeatureSchema schema_;
  int max_tokens_;
};

class PolicySystem final : public Agent {
 public:
  PolicySystem(PolicyParameters params, const VenueDatabase& db,
               int max_tokens = kDefaultMaxTokens);
  AgentRole role() const override { return AgentRole::kSystem; }
  AgentTurnOutput respond(const TurnRequest& request) override;

  const PolicyParameters& params() const { return params_; }
  PolicyParameters& params() { return params_; }

 private:
  PolicyParameters params_;
  FeatureSchema schema_;
  const VenueDatabase* db_;
  int max_tokens_;
};

// Emits 1-3 acts per turn with act type, domain, slot and value each drawn
// uniformly (values from the ontology or the database column).
class UniformRandomSystem final : public Agent {
 public:
  explicit UniformRandomSystem(const VenueDatabase& db) : db_(&db) {}
  AgentRole role() const override { return AgentRole::kSystem; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  const VenueDatabase* db_;
};

// Replies with the same act list every turn.
class ScriptedSystem final : public Agent {
 public:
  explicit ScriptedSystem(std::vector<DialogueAct> acts) : acts_(std::move(acts)) {}
  AgentRole role() const override { return AgentRole::kSystem; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  std::vector<DialogueAct> acts_;
};

}  // namespace todsim
