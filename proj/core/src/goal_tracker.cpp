#include "todsim/goal_tracker.hpp"

#include <algorithm>

#include "todsim/errors.hpp"

namespace todsim {

namespace {

bool finishes(const GoalItem& item, std::span<const DialogueAct> user_acts,
              std::span<const DialogueAct> system_acts) {
  switch (item.kind) {
    case GoalItemKind::kInform:
      return std::any_of(user_acts.begin(), user_acts.end(), [&](const DialogueAct& a) {
        return a.type == ActType::kInform && a.domain == item.domain && a.slot == item.slot &&
               a.value == item.value;
      });
    case GoalItemKind::kRequest:
      return std::any_of(system_acts.begin(), system_acts.end(), [&](const DialogueAct& a) {
        return (a.type == ActType::kInform || a.type == ActType::kOffer) &&
               a.domain == item.domain && a.slot == item.slot && !a.value.empty();
      });
    case GoalItemKind::kBooking:
      return std::any_of(system_acts.begin(), system_acts.end(), [&](const DialogueAct& a) {
        return a.type == ActType::kBook && a.domain == item.domain &&
               a.slot == Ontology::kReferenceSlot && !a.value.empty();
      });
  }
  return false;
}

bool any_farewell(std::span<const DialogueAct> acts, const std::set<ActType>& farewell) {
  return std::any_of(acts.begin(), acts.end(),
                     [&](const DialogueAct& a) { return farewell.contains(a.type); });
}

}  // namespace

std::set<GoalItem> extract_finished(const GoalState& state,
                                    std::span<const DialogueAct> user_acts,
                                    std::span<const DialogueAct> system_acts) {
  std::set<GoalItem> out;
  for (const auto& item : state.unfinished) {
    if (finishes(item, user_acts, system_acts)) out.insert(item);
  }
  return out;
}

GoalState update(const GoalState& state, const std::set<GoalItem>& finished) {
  GoalState next = state;
  for (const auto& item : finished) {
    if (next.unfinished.erase(item) == 0) {
      throw PreconditionError("goal item " + to_string(item) + " is not unfinished");
    }
    next.finished.insert(item);
  }
  return next;
}

std::optional<Termination> should_terminate(const GoalState& state, int turn_index,
                                            std::span<const DialogueAct> last_user_acts,
                                            std::span<const DialogueAct> last_system_acts,
                                            const TerminationConfig& cfg) {
  if (state.unfinished.empty()) return Termination::kGoalsComplete;
  if (any_farewell(last_user_acts, cfg.farewell_acts) ||
      any_farewell(last_system_acts, cfg.farewell_acts)) {
    return Termination::kFarewellAct;
  }
  if (turn_index + 1 >= cfg.max_turns) return Termination::kMaxTurnsExceeded;
  return std::nullopt;
}

}  // namespace todsim
