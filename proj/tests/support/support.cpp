#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "todsim/errors.hpp"
#include "todsim/nlg.hpp"

namespace todsim::test {

const CorpusBundle& toy() {
  static const CorpusBundle bundle = toy_corpus();
  return bundle;
}

const VenueDatabase& toy_db() { return toy().db; }

std::string source_path(const std::string& relative) {
  return std::string(TODSIM_SOURCE_DIR) + "/" + relative;
}

std::string fake_agent(const std::string& mode, const std::string& role) {
  return std::string("exec:") + TODSIM_FAKE_AGENT + " " + mode + " " + role;
}

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

template <typename T>
const T& pick(Rng& rng, const std::set<T>& s) {
  auto it = s.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(rng.below(s.size())));
  return *it;
}

std::vector<std::string> domain_names(const Ontology& o) {
  std::vector<std::string> out;
  for (const auto& [d, _] : o.domains()) out.push_back(d);
  return out;
}

}  // namespace

std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {
      "a", "b", "z", "Q", " ", "  ", ".", ",", "?", "\"", "\\", "/", "'", "{", "}", "[", "]",
      "\t", "\n", "\x01", "\x1f", "0", "9", "é", "ß", "Ω", "ж", "中", "文", "日本", "🙂", "🍕",
      " ", " ", "todsim", "phone", "inform"};
  const std::size_t n = rng.below(max_len + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += pick(rng, pieces);
  return out;
}

std::string random_value(Rng& rng) {
  for (;;) {
    std::string v = canonical(random_text(rng, 8));
    if (!v.empty()) return v;
  }
}

DialogueAct random_act(Rng& rng, const Ontology& ontology) {
  const ActType type = kAllActTypes[rng.below(std::size(kAllActTypes))];
  if (is_bare(type)) return DialogueAct::make(type);
  const std::string domain = pick(rng, domain_names(ontology));
  const DomainSchema& schema = *ontology.schema(domain);
  std::vector<std::string> informable;
  for (const auto& [s, _] : schema.informable) informable.push_back(s);
  std::vector<std::string> requestable(schema.requestable.begin(), schema.requestable.end());

  auto informable_pair = [&]() {
    const std::string& s = pick(rng, informable);
    return std::make_pair(s, pick(rng, schema.informable.at(s)));
  };
  switch (type) {
    case ActType::kRequest: {
      const bool req = rng.below(2) == 0;
      return DialogueAct::make(type, domain, req ? pick(rng, requestable) : pick(rng, informable));
    }
    case ActType::kNoOffer: {
      switch (rng.below(3)) {
        case 0: return DialogueAct::make(type, domain);
        case 1: return DialogueAct::make(type, domain, pick(rng, informable));
        default: {
          auto [s, v] = informable_pair();
          return DialogueAct::make(type, domain, s, v);
        }
      }
    }
    case ActType::kBook:
      return rng.below(3) == 0 ? DialogueAct::make(type, domain, Ontology::kReferenceSlot)
                               : DialogueAct::make(type, domain, Ontology::kReferenceSlot,
                                                   random_value(rng));
    default: {
      switch (rng.below(5)) {
        case 0: {
          auto [s, v] = informable_pair();
          return DialogueAct::make(type, domain, s, v);
        }
        case 1: return DialogueAct::make(type, domain, pick(rng, requestable), random_value(rng));
        case 2: return DialogueAct::make(type, domain, Ontology::kNameSlot, random_value(rng));
        case 3: return DialogueAct::make(type, domain, Ontology::kBookingSlot, "yes");
        default: return DialogueAct::make(type, domain, pick(rng, informable));
      }
    }
  }
}

std::vector<DialogueAct> random_acts(Rng& rng, const Ontology& ontology, std::size_t max_len) {
  std::vector<DialogueAct> out(rng.below(max_len + 1));
  for (auto& a : out) a = random_act(rng, ontology);
  return out;
}

DialogueAct random_free_act(Rng& rng) {
  const ActType type = kAllActTypes[rng.below(std::size(kAllActTypes))];
  if (is_bare(type)) return DialogueAct::make(type);
  const std::string domain = random_value(rng);
  if (type == ActType::kRequest) return DialogueAct::make(type, domain, random_value(rng));
  if (type == ActType::kNoOffer && rng.below(2) == 0) return DialogueAct::make(type, domain);
  return DialogueAct::make(type, domain, random_value(rng),
                           rng.below(3) == 0 ? std::string() : random_value(rng));
}

Goal random_goal(Rng& rng, const Ontology& ontology, bool allow_empty) {
  for (;;) {
    Goal g;
    for (const auto& [d, schema] : ontology.domains()) {
      if (rng.below(2) == 0) continue;
      DomainGoal dg;
      for (const auto& [s, values] : schema.informable) {
        if (rng.below(2) == 0) dg.informable[s] = pick(rng, values);
      }
      for (const auto& s : schema.requestable) {
        if (rng.below(3) == 0) dg.requestable.insert(s);
      }
      dg.needs_booking = rng.below(3) == 0;
      if (dg.informable.empty() && dg.requestable.empty() && !dg.needs_booking) continue;
      g.domains[d] = std::move(dg);
    }
    if (allow_empty || !g.empty()) return g;
  }
}

GoalState random_goal_state(Rng& rng, const Ontology& ontology) {
  GoalState s;
  for (const auto& item : goal_to_items(random_goal(rng, ontology, true))) {
    (rng.below(2) == 0 ? s.unfinished : s.finished).insert(item);
  }
  return s;
}

BeliefState random_belief(Rng& rng, const Ontology& ontology) {
  BeliefState b;
  for (const auto& [d, schema] : ontology.domains()) {
    for (const auto& [s, values] : schema.informable) {
      if (rng.below(3) == 0) b.constraints[d][s] = pick(rng, values);
    }
  }
  return b;
}

Turn random_turn(Rng& rng, const Ontology& ontology, int index) {
  Turn t;
  t.index = index;
  t.user_utterance = random_text(rng);
  t.user_acts = random_acts(rng, ontology);
  t.system_utterance = random_text(rng);
  t.system_acts = random_acts(rng, ontology);
  t.belief_state = random_belief(rng, ontology);
  return t;
}

Session random_session(Rng& rng, const Ontology& ontology, const std::string& id) {
  Session s;
  s.id = id;
  s.goal = random_goal(rng, ontology);
  const std::size_t n = rng.below(5);
  for (std::size_t i = 0; i < n; ++i) s.turns.push_back(random_turn(rng, ontology, static_cast<int>(i)));
  static constexpr Termination kAll[] = {Termination::kGoalsComplete, Termination::kFarewellAct,
                                         Termination::kMaxTurnsExceeded,
                                         Termination::kReplayExhausted};
  if (rng.below(4) != 0) s.termination = kAll[rng.below(4)];
  return s;
}

Message random_message(Rng& rng) {
  const Ontology o = toy_ontology();
  auto free_acts = [&] {
    std::vector<DialogueAct> acts(rng.below(4));
    for (auto& a : acts) a = random_free_act(rng);
    return acts;
  };
  switch (rng.below(7)) {
    case 0:
      return HelloMsg{static_cast<int>(rng.below(5)), static_cast<ProtocolRole>(rng.below(4))};
    case 1: {
      TurnRequest r;
      r.session_id = random_text(rng, 6);
      r.turn_index = static_cast<int>(rng.below(30));
      if (rng.below(2) == 0) r.goal_state = random_goal_state(rng, o);
      const std::size_t n = rng.below(3);
      for (std::size_t i = 0; i < n; ++i) {
        Turn t = random_turn(rng, o, static_cast<int>(i));
        t.user_acts = free_acts();
        t.system_acts = free_acts();
        r.history.push_back(t);
      }
      r.user_utterance = random_text(rng);
      r.user_acts = free_acts();
      r.belief = random_belief(rng, o);
      r.seed = rng.next();
      return TurnRequestMsg{r};
    }
    case 2: {
      TurnReplyMsg m;
      if (rng.below(3) != 0) m.acts = free_acts();
      m.utterance = random_text(rng);
      if (rng.below(2) == 0) m.belief_state = random_belief(rng, o);
      return m;
    }
    case 3: {
      ScoreRequestMsg m;
      if (rng.below(2) == 0) {
        m.text = random_text(rng);
      } else {
        m.pair = std::make_pair(random_text(rng), random_text(rng));
      }
      return m;
    }
    case 4: {
      const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(12)) - 4);
      return ScoreReplyMsg{v};
    }
    case 5:
      return ByeMsg{};
    default:
      return ErrorMsg{random_text(rng)};
  }
}

AnnotatedDialogue random_dialogue(Rng& rng, const Ontology& ontology, const std::string& id) {
  AnnotatedDialogue d;
  d.id = id;
  d.goal = random_goal(rng, ontology);
  const std::size_t n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) {
    d.turns.push_back(AnnotatedTurn{random_text(rng), random_acts(rng, ontology), random_text(rng),
                                    random_acts(rng, ontology)});
  }
  return d;
}

bool finishes(const GoalItem& item, std::span<const DialogueAct> user_acts,
              std::span<const DialogueAct> system_acts) {
  switch (item.kind) {
    case GoalItemKind::kInform:
      for (const auto& a : user_acts) {
        if (a.type == ActType::kInform && a.domain == item.domain && a.slot == item.slot &&
            a.value == item.value) {
          return true;
        }
      }
      return false;
    case GoalItemKind::kRequest:
      for (const auto& a : system_acts) {
        if ((a.type == ActType::kInform || a.type == ActType::kOffer) && a.domain == item.domain &&
            a.slot == item.slot && !a.value.empty()) {
          return true;
        }
      }
      return false;
    case GoalItemKind::kBooking:
      for (const auto& a : system_acts) {
        if (a.type == ActType::kBook && a.domain == item.domain && a.slot == "reference" &&
            !a.value.empty()) {
          return true;
        }
      }
      return false;
  }
  return false;
}

std::vector<const Entity*> scan(const VenueDatabase& db, const std::string& domain,
                                const std::map<std::string, std::string>& constraints) {
  std::vector<const Entity*> out;
  auto it = db.entities().find(domain);
  if (it == db.entities().end()) return out;
  for (const Entity& e : it->second) {
    bool ok = true;
    for (const auto& [slot, value] : constraints) {
      auto f = e.find(slot);
      if (f == e.end() || f->second != value) ok = false;
    }
    if (ok) out.push_back(&e);
  }
  return out;
}

AgentTurnOutput FixedAgent::respond(const TurnRequest&) {
  AgentTurnOutput out;
  out.acts = acts_;
  out.utterance =
      realize(role_ == AgentRole::kSimulator ? Speaker::kUser : Speaker::kSystem, acts_);
  return out;
}

AgentTurnOutput ThrowingAgent::respond(const TurnRequest& request) {
  if (request.turn_index >= at_) {
    if (kind_ == Kind::kUnresponsive) throw AgentUnresponsive("scripted timeout");
    throw std::runtime_error("scripted failure");
  }
  AgentTurnOutput out;
  out.acts = {DialogueAct::make(ActType::kGreet)};
  out.utterance = realize(role_ == AgentRole::kSimulator ? Speaker::kUser : Speaker::kSystem,
                          out.acts);
  return out;
}

}  // namespace todsim::test
