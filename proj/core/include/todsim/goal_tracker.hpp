#pragma once

// Goal-state tracking: which obligations a turn finishes, cutting them from
// the unfinished set, and when the simulator ends the session.

#include <optional>
#include <set>
#include <span>

#include "todsim/domain.hpp"

namespace todsim {

struct TerminationConfig {
  int max_turns = 20;
  std::set<ActType> farewell_acts = {ActType::kBye, ActType::kThank};

  bool operator==(const TerminationConfig&) const = default;
};

// Items of state.unfinished finished by this turn's acts:
//  - Inform(d,s,v)  by a user inform(d,s,v)
//  - Request(d,s)   by a system inform/offer(d,s,v) with non-empty v
//  - Booking(d)     by a system book(d,reference,v) with non-empty v
std::set<GoalItem> extract_finished(const GoalState& state,
                                    std::span<const DialogueAct> user_acts,
                                    std::span<const DialogueAct> system_acts);

// Moves `finished` from unfinished to finished. Throws PreconditionError when
// an item is not currently unfinished.
GoalState update(const GoalState& state, const std::set<GoalItem>& finished);

// Priority: goals_complete > farewell_act > max_turns_exceeded.
std::optional<Termination> should_terminate(const GoalState& state, int turn_index,
                                            std::span<const DialogueAct> last_user_acts,
                                            std::span<const DialogueAct> last_system_acts,
                                            const TerminationConfig& cfg);

}  // namespace todsim
