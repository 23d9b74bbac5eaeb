#include "todsim/agents.hpp"

#include <algorithm>

#include "todsim/errors.hpp"

namespace todsim {

namespace {

DialogueAct act_for_item(const GoalItem& item) {
  switch (item.kind) {
    case GoalItemKind::kInform:
      return DialogueAct::make(ActType::kInform, item.domain, item.slot, item.value);
    case GoalItemKind::kRequest:
      return DialogueAct::make(ActType::kRequest, item.domain, item.slot);
    case GoalItemKind::kBooking:
      return DialogueAct::make(ActType::kInform, item.domain, Ontology::kBookingSlot, "yes");
  }
  return {};
}

void push_unique(std::vector<DialogueAct>& acts, DialogueAct act) {
  if (std::find(acts.begin(), acts.end(), act) == acts.end()) acts.push_back(std::move(act));
}

AgentTurnOutput output_for(Speaker speaker, std::vector<DialogueAct> acts) {
  AgentTurnOutput out;
  out.utterance = realize(speaker, acts);
  out.acts = std::move(acts);
  return out;
}

void set_if_present(const FeatureSchema& schema, std::vector<double>& x, const std::string& name) {
  if (auto i = schema.index(name); i != FeatureSchema::npos) x[i] = 1.0;
}

void set_turn_bucket(const FeatureSchema& schema, std::vector<double>& x, int turn) {
  const char* bucket = turn == 0 ? "turn:0" : turn == 1 ? "turn:1" : turn <= 3 ? "turn:2-3" : "turn:4+";
  set_if_present(schema, x, bucket);
}

void set_opposite_acts(const FeatureSchema& schema, std::vector<double>& x,
                       std::span<const DialogueAct> acts) {
  for (const auto& a : acts) {
    set_if_present(schema, x, "opp:" + skeleton_token(a));
    set_if_present(schema, x, "opp_type:" + std::string(to_string(a.type)));
  }
}

struct TokenParts {
  std::string type, domain, slot;
};

TokenParts split_token(const std::string& tok) {
  TokenParts p;
  auto a = tok.find(':');
  p.type = tok.substr(0, a);
  if (a == std::string::npos) return p;
  auto b = tok.find(':', a + 1);
  p.domain = tok.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1);
  if (b != std::string::npos) p.slot = tok.substr(b + 1);
  return p;
}

std::string goal_value(const GoalState& state, const std::string& domain, const std::string& slot) {
  for (const auto* set : {&state.unfinished, &state.finished}) {
    for (const auto& item : *set) {
      if (item.kind == GoalItemKind::kInform && item.domain == domain && item.slot == slot) {
        return item.value;
      }
    }
  }
  return {};
}

}  // namespace

// ---------------------------------------------------------------------------

AgentTurnOutput agenda_user_turn(const GoalState& state, std::span<const Turn> /*history*/,
                                 int k) {
  std::vector<DialogueAct> acts;
  if (state.unfinished.empty()) {
    acts.push_back(DialogueAct::make(ActType::kBye));
  } else {
    for (const auto& item : state.unfinished) {
      if (static_cast<int>(acts.size()) >= k) break;
      acts.push_back(act_for_item(item));
    }
  }
  return output_for(Speaker::kUser, std::move(acts));
}

BeliefState update_belief(const BeliefState& belief, std::span<const DialogueAct> user_acts) {
  BeliefState next = belief;
  for (const auto& a : user_acts) {
    if (a.type == ActType::kInform && a.slot != Ontology::kBookingSlot && !a.value.empty()) {
      next.constraints[a.domain][a.slot] = a.value;
    }
  }
  return next;
}

std::pair<BeliefState, AgentTurnOutput> rule_system_turn(const VenueDatabase& db,
                                                         const BeliefState& belief,
                                                         std::span<const DialogueAct> user_acts) {
  BeliefState next = update_belief(belief, user_acts);
  std::vector<DialogueAct> acts;
  const bool farewell = std::any_of(user_acts.begin(), user_acts.end(), [](const DialogueAct& a) {
    return a.type == ActType::kBye || a.type == ActType::kThank;
  });
  if (farewell) {
    acts.push_back(DialogueAct::make(ActType::kBye));
    return {std::move(next), output_for(Speaker::kSystem, std::move(acts))};
  }

  std::vector<std::string> domains;
  for (const auto& a : user_acts) {
    if ((a.type == ActType::kInform || a.type == ActType::kRequest) &&
        std::find(domains.begin(), domains.end(), a.domain) == domains.end()) {
      domains.push_back(a.domain);
    }
  }
  for (const auto& d : domains) {
    auto matches = db.query(d, next.domain(d));
    if (matches.empty()) {
      push_unique(acts, DialogueAct::make(ActType::kNoOffer, d));
      continue;
    }
    const Entity& e = *matches.front();
    const std::string& name = e.at(std::string(Ontology::kNameSlot));
    push_unique(acts, DialogueAct::make(ActType::kOffer, d, Ontology::kNameSlot, name));
    for (const auto& a : user_acts) {
      if (a.domain != d) continue;
      if (a.type == ActType::kInform && a.slot != Ontology::kBookingSlot) {
        // Confirm the constraint the offer was matched on.
        auto it = e.find(a.slot);
        if (it != e.end()) push_unique(acts, DialogueAct::make(ActType::kInform, d, a.slot, it->second));
      } else if (a.type == ActType::kRequest) {
        auto it = e.find(a.slot);
        if (it != e.end()) push_unique(acts, DialogueAct::make(ActType::kInform, d, a.slot, it->second));
      } else if (a.type == ActType::kInform && a.slot == Ontology::kBookingSlot) {
        push_unique(acts, DialogueAct::make(ActType::kBook, d, Ontology::kReferenceSlot,
                                            booking_reference(d, name)));
      }
    }
  }
  if (acts.empty()) acts.push_back(DialogueAct::make(ActType::kGreet));
  return {std::move(next), output_for(Speaker::kSystem, std::move(acts))};
}

std::string skeleton_token(const DialogueAct& act) {
  if (is_bare(act.type)) return std::string(to_string(act.type));
  if (act.type == ActType::kNoOffer) return "nooffer:" + act.domain;
  return std::string(to_string(act.type)) + ":" + act.domain + ":" + act.slot;
}

std::vector<double> simulator_features(const FeatureSchema& schema, const GoalState& state,
                                       std::span<const Turn> history) {
  std::vector<double> x(schema.context_size(), 0.0);
  x[0] = 1.0;
  for (const auto& item : state.unfinished) {
    switch (item.kind) {
      case GoalItemKind::kInform:
        set_if_present(schema, x, "pending:inform:" + item.domain + ":" + item.slot);
        break;
      case GoalItemKind::kRequest:
        set_if_present(schema, x, "pending:request:" + item.domain + ":" + item.slot);
        break;
      case GoalItemKind::kBooking:
        set_if_present(schema, x, "pending:booking:" + item.domain);
        break;
    }
  }
  if (!history.empty()) set_opposite_acts(schema, x, history.back().system_acts);
  set_turn_bucket(schema, x, static_cast<int>(history.size()));
  return x;
}

std::vector<double> system_features(const FeatureSchema& schema, const VenueDatabase& db,
                                    const BeliefState& updated_belief,
                                    std::span<const DialogueAct> user_acts, int turn_index) {
  std::vector<double> x(schema.context_size(), 0.0);
  x[0] = 1.0;
  set_opposite_acts(schema, x, user_acts);
  for (const auto& [d, constraints] : updated_belief.constraints) {
    if (constraints.empty()) continue;
    set_if_present(schema, x, "belief:" + d);
    if (!db.query(d, constraints).empty()) set_if_present(schema, x, "match:" + d);
  }
  set_turn_bucket(schema, x, turn_index);
  return x;
}

std::vector<DialogueAct> ground_user_tokens(const PolicyParameters& params,
                                            std::span<const std::size_t> tokens,
                                            const GoalState& state) {
  std::vector<DialogueAct> acts;
  for (std::size_t t : tokens) {
    const auto p = split_token(params.vocabulary.at(t));
    auto type = parse_act_type(p.type);
    if (!type) continue;
    if (is_bare(*type)) {
      push_unique(acts, DialogueAct::make(*type));
    } else if (*type == ActType::kRequest) {
      push_unique(acts, DialogueAct::make(ActType::kRequest, p.domain, p.slot));
    } else if (*type == ActType::kInform && p.slot == Ontology::kBookingSlot) {
      push_unique(acts, DialogueAct::make(ActType::kInform, p.domain, p.slot, "yes"));
    } else if (*type == ActType::kInform) {
      // Slots the goal does not constrain have nothing to say.
      std::string v = goal_value(state, p.domain, p.slot);
      if (!v.empty()) push_unique(acts, DialogueAct::make(ActType::kInform, p.domain, p.slot, v));
    }
  }
  return acts;
}

std::vector<DialogueAct> ground_system_tokens(const PolicyParameters& params,
                                              std::span<const std::size_t> tokens,
                                              const VenueDatabase& db,
                                              const BeliefState& updated_belief) {
  std::vector<DialogueAct> acts;
  for (std::size_t t : tokens) {
    const auto p = split_token(params.vocabulary.at(t));
    auto type = parse_act_type(p.type);
    if (!type) continue;
    if (is_bare(*type)) {
      push_unique(acts, DialogueAct::make(*type));
      continue;
    }
    if (*type == ActType::kRequest) {
      push_unique(acts, DialogueAct::make(ActType::kRequest, p.domain, p.slot));
      continue;
    }
    if (*type == ActType::kNoOffer) {
      push_unique(acts, DialogueAct::make(ActType::kNoOffer, p.domain));
      continue;
    }
    auto matches = db.query(p.domain, updated_belief.domain(p.domain));
    if (matches.empty()) {
      push_unique(acts, DialogueAct::make(ActType::kNoOffer, p.domain));
      continue;
    }
    const Entity& e = *matches.front();
    const std::string& name = e.at(std::string(Ontology::kNameSlot));
    if (*type == ActType::kBook) {
      push_unique(acts, DialogueAct::make(ActType::kBook, p.domain, Ontology::kReferenceSlot,
                                          booking_reference(p.domain, name)));
      continue;
    }
    auto it = e.find(p.slot);
    if (it == e.end()) {
      push_unique(acts, DialogueAct::make(ActType::kNoOffer, p.domain));
    } else {
      push_unique(acts, DialogueAct::make(*type, p.domain, p.slot, it->second));
    }
  }
  return acts;
}

AgentTurnOutput policy_user_turn(const PolicyParameters& params, const FeatureSchema& schema,
                                 const GoalState& state, std::span<const Turn> history,
                                 std::uint64_t rng_seed, int max_tokens) {
  check_schema(params, schema);
  if (params.role != AgentRole::kSimulator) throw ConfigError("policy is not a simulator policy");
  Rng rng(rng_seed);
  auto context = simulator_features(schema, state, history);
  TurnTrace trace = sample_turn(params, schema, context, max_tokens, rng);
  const auto tokens = chosen_tokens(trace);
  AgentTurnOutput out = output_for(Speaker::kUser, ground_user_tokens(params, tokens, state));
  out.trace = std::move(trace);
  return out;
}

std::pair<BeliefState, AgentTurnOutput> policy_system_turn(
    const PolicyParameters& params, const FeatureSchema& schema, const VenueDatabase& db,
    const BeliefState& belief, std::span<const DialogueAct> user_acts, int turn_index,
    std::uint64_t rng_seed, int max_tokens) {
  check_schema(params, schema);
  if (params.role != AgentRole::kSystem) throw ConfigError("policy is not a system policy");
  BeliefState next = update_belief(belief, user_acts);
  Rng rng(rng_seed);
  auto context = system_features(schema, db, next, user_acts, turn_index);
  TurnTrace trace = sample_turn(params, schema, context, max_tokens, rng);
  const auto tokens = chosen_tokens(trace);
  AgentTurnOutput out = output_for(Speaker::kSystem, ground_system_tokens(params, tokens, db, next));
  out.trace = std::move(trace);
  return {std::move(next), std::move(out)};
}

// ---------------------------------------------------------------------------

AgendaSimulator::AgendaSimulator(int acts_per_turn) : k_(acts_per_turn) {
  if (k_ < 1) throw ConfigError("agenda simulator needs at least one act per turn");
}

AgentTurnOutput AgendaSimulator::respond(const TurnRequest& request) {
  if (!request.goal_state) throw PreconditionError("simulator request without goal state");
  return agenda_user_turn(*request.goal_state, request.history, k_);
}

AgentTurnOutput RuleSystem::respond(const TurnRequest& request) {
  auto [belief, out] = rule_system_turn(*db_, request.belief, request.user_acts);
  out.belief_state = std::move(belief);
  return out;
}

PolicySimulator::PolicySimulator(PolicyParameters params, const Ontology& ontology, int max_tokens)
    : params_(std::move(params)), schema_(AgentRole::kSimulator, ontology), max_tokens_(max_tokens) {
  check_schema(params_, schema_);
}

AgentTurnOutput PolicySimulator::respond(const TurnRequest& request) {
  if (!request.goal_state) throw PreconditionError("simulator request without goal state");
  return policy_user_turn(params_, schema_, *request.goal_state, request.history, request.seed,
                          max_tokens_);
}

PolicySystem::PolicySystem(PolicyParameters params, const VenueDatabase& db, int max_tokens)
    : params_(std::move(params)),
      schema_(AgentRole::kSystem, db.ontology()),
      db_(&db),
      max_tokens_(max_tokens) {
  check_schema(params_, schema_);
}

AgentTurnOutput PolicySystem::respond(const TurnRequest& request) {
  auto [belief, out] = policy_system_turn(params_, schema_, *db_, request.belief, request.user_acts,
                                          request.turn_index, request.seed, max_tokens_);
  out.belief_state = std::move(belief);
  return out;
}

AgentTurnOutput UniformRandomSystem::respond(const TurnRequest& request) {
  Rng rng(request.seed);
  const auto& domains = db_->ontology().domains();
  std::vector<DialogueAct> acts;
  const std::size_t n = 1 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) {
    const ActType type = kAllActTypes[rng.below(std::size(kAllActTypes))];
    if (is_bare(type)) {
      push_unique(acts, DialogueAct::make(type));
      continue;
    }
    auto dit = domains.begin();
    std::advance(dit, static_cast<long>(rng.below(domains.size())));
    const std::string& d = dit->first;
    const DomainSchema& schema = dit->second;
    if (type == ActType::kNoOffer) {
      push_unique(acts, DialogueAct::make(type, d));
      continue;
    }
    std::vector<std::string> slots;
    for (const auto& [s, _] : schema.informable) slots.push_back(s);
    for (const auto& s : schema.requestable) slots.push_back(s);
    slots.emplace_back(Ontology::kNameSlot);
    if (type == ActType::kBook) slots = {std::string(Ontology::kReferenceSlot)};
    const std::string& slot = slots[rng.below(slots.size())];
    if (type == ActType::kRequest) {
      push_unique(acts, DialogueAct::make(type, d, slot));
      continue;
    }
    std::vector<std::string> values;
    if (auto it = schema.informable.find(slot); it != schema.informable.end()) {
      values.assign(it->second.begin(), it->second.end());
    } else if (slot == Ontology::kReferenceSlot) {
      if (auto eit = db_->entities().find(d); eit != db_->entities().end()) {
        for (const auto& e : eit->second) {
          values.push_back(booking_reference(d, e.at(std::string(Ontology::kNameSlot))));
        }
      }
    } else if (auto eit = db_->entities().find(d); eit != db_->entities().end()) {
      for (const auto& e : eit->second) {
        if (auto v = e.find(slot); v != e.end()) values.push_back(v->second);
      }
    }
    if (values.empty()) continue;
    push_unique(acts, DialogueAct::make(type, d, slot, values[rng.below(values.size())]));
  }
  AgentTurnOutput out = output_for(Speaker::kSystem, std::move(acts));
  out.belief_state = update_belief(request.belief, request.user_acts);
  return out;
}

AgentTurnOutput ScriptedSystem::respond(const TurnRequest& request) {
  AgentTurnOutput out = output_for(Speaker::kSystem, acts_);
  out.belief_state = update_belief(request.belief, request.user_acts);
  return out;
}

}  // namespace todsim
