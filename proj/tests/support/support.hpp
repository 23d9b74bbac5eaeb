#pragma once

// Shared fixtures, random generators and independent oracles for the tests
// and the acceptance suite.

#include <set>
#include <span>
#include <string>
#include <vector>

#include "todsim/agents.hpp"
#include "todsim/corpus.hpp"
#include "todsim/domain.hpp"
#include "todsim/engine.hpp"
#include "todsim/protocol.hpp"
#include "todsim/rng.hpp"
#include "todsim/toy.hpp"

namespace todsim::test {

const CorpusBundle& toy();
const VenueDatabase& toy_db();

std::string source_path(const std::string& relative);
// "exec:<fake_agent> <mode> <role>"
std::string fake_agent(const std::string& mode, const std::string& role = "system");

// ---------------------------------------------------------------------------
// Generators. Everything produced is canonical and valid against `ontology`
// unless stated otherwise.

// Arbitrary text mixing ASCII, accented letters, CJK and emoji; may contain
// quotes, backslashes and control characters other than newline.
std::string random_text(Rng& rng, std::size_t max_len = 24);
// Non-empty canonical free text.
std::string random_value(Rng& rng);

DialogueAct random_act(Rng& rng, const Ontology& ontology);
std::vector<DialogueAct> random_acts(Rng& rng, const Ontology& ontology, std::size_t max_len = 4);
// Structurally valid act that ignores the ontology (protocol-level fuzzing).
DialogueAct random_free_act(Rng& rng);

Goal random_goal(Rng& rng, const Ontology& ontology, bool allow_empty = false);
GoalState random_goal_state(Rng& rng, const Ontology& ontology);
BeliefState random_belief(Rng& rng, const Ontology& ontology);
Turn random_turn(Rng& rng, const Ontology& ontology, int index);
Session random_session(Rng& rng, const Ontology& ontology, const std::string& id);
AnnotatedDialogue random_dialogue(Rng& rng, const Ontology& ontology, const std::string& id);
// Any protocol message; acts inside are free-form (random_free_act).
Message random_message(Rng& rng);

// ---------------------------------------------------------------------------
// Oracles, written from the rules rather than from the implementation.

// Whether this turn's acts finish `item`.
bool finishes(const GoalItem& item, std::span<const DialogueAct> user_acts,
              std::span<const DialogueAct> system_acts);

// Linear scan of the database.
std::vector<const Entity*> scan(const VenueDatabase& db, const std::string& domain,
                                const std::map<std::string, std::string>& constraints);

// ---------------------------------------------------------------------------
// Agents

// Replies with fixed acts every turn, for either role.
class FixedAgent final : public Agent {
 public:
  FixedAgent(AgentRole role, std::vector<DialogueAct> acts) : role_(role), acts_(std::move(acts)) {}
  AgentRole role() const override { return role_; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  AgentRole role_;
  std::vector<DialogueAct> acts_;
};

// Throws `what` once turn `at_turn` is reached.
class ThrowingAgent final : public Agent {
 public:
  enum class Kind { kRuntime, kUnresponsive };
  ThrowingAgent(AgentRole role, int at_turn, Kind kind) : role_(role), at_(at_turn), kind_(kind) {}
  AgentRole role() const override { return role_; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  AgentRole role_;
  int at_;
  Kind kind_;
};

}  // namespace todsim::test
