#pragma once

// Core dialogue types: acts, goals, goal states, belief states, turns,
// sessions, the ontology and the venue database.
//
// All identifiers and values are stored in canonical form (trimmed, ASCII
// lowercase) so comparisons are case-insensitive after trimming.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace todsim {

std::string canonical(std::string_view text);

enum class ActType : std::uint8_t {
  kInform,
  kRequest,
  kOffer,
  kBook,
  kNoOffer,
  kBye,
  kThank,
  kGreet,
};

inline constexpr ActType kAllActTypes[] = {
    ActType::kInform, ActType::kRequest, ActType::kOffer, ActType::kBook,
    ActType::kNoOffer, ActType::kBye, ActType::kThank, ActType::kGreet};

std::string_view to_string(ActType type);
std::optional<ActType> parse_act_type(std::string_view name);

// Acts that carry neither slot nor value (nor domain).
constexpr bool is_bare(ActType t) {
  return t == ActType::kBye || t == ActType::kThank || t == ActType::kGreet;
}

struct DialogueAct {
  ActType type = ActType::kGreet;
  std::string domain;
  std::string slot;
  std::string value;

  // Canonicalizes all text fields and validates the act invariants.
  // Throws InvalidArgument on a malformed act.
  static DialogueAct make(ActType type, std::string_view domain = {},
                          std::string_view slot = {}, std::string_view value = {});

  auto operator<=>(const DialogueAct&) const = default;
};

// Empty when the act satisfies its invariants, else a description of the first
// violated one.
std::optional<std::string> act_violation(const DialogueAct& act);
std::string to_string(const DialogueAct& act);

// ---------------------------------------------------------------------------
// Ontology

struct DomainSchema {
  std::map<std::string, std::set<std::string>> informable;  // slot -> values
  std::set<std::string> requestable;

  bool operator==(const DomainSchema&) const = default;
};

class Ontology {
 public:
  // Slots every domain accepts beyond its informable/requestable sets.
  static constexpr std::string_view kNameSlot = "name";
  static constexpr std::string_view kReferenceSlot = "reference";
  static constexpr std::string_view kBookingSlot = "booking";

  Ontology() = default;
  explicit Ontology(std::map<std::string, DomainSchema> domains);

  const std::map<std::string, DomainSchema>& domains() const { return domains_; }
  bool has_domain(std::string_view domain) const;
  const DomainSchema* schema(std::string_view domain) const;

  bool is_informable(std::string_view domain, std::string_view slot) const;
  bool is_requestable(std::string_view domain, std::string_view slot) const;
  // Any slot an act may legally mention in this domain.
  bool is_valid_slot(std::string_view domain, std::string_view slot) const;
  // Informable slots restrict values to the listed set; other slots are free.
  bool is_valid_value(std::string_view domain, std::string_view slot,
                      std::string_view value) const;

  bool operator==(const Ontology&) const = default;

 private:
  std::map<std::string, DomainSchema> domains_;
};

// ---------------------------------------------------------------------------
// Goals and goal states

struct DomainGoal {
  std::map<std::string, std::string> informable;
  std::set<std::string> requestable;
  bool needs_booking = false;

  bool operator==(const DomainGoal&) const = default;
};

struct Goal {
  std::map<std::string, DomainGoal> domains;

  bool empty() const { return domains.empty(); }
  bool operator==(const Goal&) const = default;
};

struct GoalViolation {
  std::string rule;    // e.g. "unknown slot"
  std::string detail;  // which domain/slot/value
};

// All Goal invariants checked against the ontology. An empty goal is accepted
// as the degenerate no-obligation case.
std::vector<GoalViolation> validate_goal(const Goal& goal, const Ontology& ontology);

// Declaration order is the canonical item order: informs, requests, bookings.
enum class GoalItemKind : std::uint8_t { kInform, kRequest, kBooking };

struct GoalItem {
  GoalItemKind kind = GoalItemKind::kInform;
  std::string domain;
  std::string slot;   // empty for bookings
  std::string value;  // informs only

  static GoalItem inform(std::string_view d, std::string_view s, std::string_view v);
  static GoalItem request(std::string_view d, std::string_view s);
  static GoalItem booking(std::string_view d);

  auto operator<=>(const GoalItem&) const = default;
};

std::string to_string(const GoalItem& item);

// Throws InvalidArgument when the goal is internally inconsistent
// (overlapping slot sets, empty domain entry).
std::set<GoalItem> goal_to_items(const Goal& goal);

struct GoalState {
  std::set<GoalItem> unfinished;
  std::set<GoalItem> finished;

  static GoalState from_goal(const Goal& goal);
  bool complete() const { return unfinished.empty(); }
  bool operator==(const GoalState&) const = default;
};

// ---------------------------------------------------------------------------
// Belief, turns, sessions

struct BeliefState {
  std::map<std::string, std::map<std::string, std::string>> constraints;

  const std::map<std::string, std::string>& domain(std::string_view d) const;
  bool operator==(const BeliefState&) const = default;
};

bool belief_is_valid(const BeliefState& belief, const Ontology& ontology);

struct Turn {
  int index = 0;
  std::string user_utterance;
  std::vector<DialogueAct> user_acts;
  std::string system_utterance;
  std::vector<DialogueAct> system_acts;
  BeliefState belief_state;

  bool operator==(const Turn&) const = default;
};

enum class Termination : std::uint8_t {
  kGoalsComplete,
  kFarewellAct,
  kMaxTurnsExceeded,
  kReplayExhausted,
};

std::string_view to_string(Termination t);
std::optional<Termination> parse_termination(std::string_view name);

struct Session {
  std::string id;
  Goal goal;
  std::vector<Turn> turns;
  std::optional<Termination> termination;

  bool operator==(const Session&) const = default;
};

// ---------------------------------------------------------------------------
// Venue database

using Entity = std::map<std::string, std::string>;

class VenueDatabase {
 public:
  VenueDatabase() = default;
  // Throws InvalidArgument when an entity lacks a name, repeats a name within
  // its domain, or uses an ontology-invalid slot or value.
  VenueDatabase(Ontology ontology, std::map<std::string, std::vector<Entity>> entities);

  const Ontology& ontology() const { return ontology_; }
  const std::map<std::string, std::vector<Entity>>& entities() const { return entities_; }

  // Entities of `domain` satisfying every constraint, in stored order.
  std::vector<const Entity*> query(std::string_view domain,
                                   const std::map<std::string, std::string>& constraints) const;
  const Entity* find_by_name(std::string_view domain, std::string_view name) const;

  bool operator==(const VenueDatabase&) const = default;

 private:
  Ontology ontology_;
  std::map<std::string, std::vector<Entity>> entities_;
};

bool entity_satisfies(const Entity& entity, const std::map<std::string, std::string>& constraints);

// Deterministic booking reference for an entity.
std::string booking_reference(std::string_view domain, std::string_view name);

}  // namespace todsim
