#include "todsim/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

#include "todsim/errors.hpp"
#include "todsim/rng.hpp"

namespace todsim {

std::string canonical(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string out(text.substr(b, e - b));
  for (char& c : out) {
    auto uc = static_cast<unsigned char>(c);
    if (uc < 0x80) c = static_cast<char>(std::tolower(uc));
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 8> kActNames = {
    "inform", "request", "offer", "book", "nooffer", "bye", "thank", "greet"};

constexpr std::array<std::string_view, 4> kTerminationNames = {
    "goals_complete", "farewell_act", "max_turns_exceeded", "replay_exhausted"};

}  // namespace

std::string_view to_string(ActType type) { return kActNames[static_cast<std::size_t>(type)]; }

std::optional<ActType> parse_act_type(std::string_view name) {
  const std::string c = canonical(name);
  for (std::size_t i = 0; i < kActNames.size(); ++i) {
    if (kActNames[i] == c) return static_cast<ActType>(i);
  }
  return std::nullopt;
}

std::optional<std::string> act_violation(const DialogueAct& act) {
  if (static_cast<std::size_t>(act.type) >= kActNames.size()) return "unknown act type";
  if (is_bare(act.type)) {
    if (!act.domain.empty() || !act.slot.empty() || !act.value.empty()) {
      return std::string(to_string(act.type)) + " carries no domain, slot or value";
    }
    return std::nullopt;
  }
  if (act.domain.empty()) return std::string(to_string(act.type)) + " requires a domain";
  if (act.slot.empty() && !act.value.empty()) return "a value requires a slot";
  if (act.type == ActType::kRequest) {
    if (act.slot.empty()) return "request requires a slot";
    if (!act.value.empty()) return "request carries no value";
  }
  if ((act.type == ActType::kInform || act.type == ActType::kOffer ||
       act.type == ActType::kBook) &&
      act.slot.empty()) {
    return std::string(to_string(act.type)) + " requires a slot";
  }
  return std::nullopt;
}

DialogueAct DialogueAct::make(ActType type, std::string_view domain, std::string_view slot,
                              std::string_view value) {
  DialogueAct act{type, canonical(domain), canonical(slot), canonical(value)};
  if (auto v = act_violation(act)) throw InvalidArgument("malformed act: " + *v);
  return act;
}

std::string to_string(const DialogueAct& act) {
  std::string out(to_string(act.type));
  out += '(';
  out += act.domain;
  if (!act.slot.empty() || !act.value.empty()) {
    out += ',';
    out += act.slot;
  }
  if (!act.value.empty()) {
    out += ',';
    out += act.value;
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------

Ontology::Ontology(std::map<std::string, DomainSchema> domains) {
  for (auto& [name, schema] : domains) {
    DomainSchema s;
    for (auto& [slot, values] : schema.informable) {
      auto& dst = s.informable[canonical(slot)];
      for (const auto& v : values) dst.insert(canonical(v));
    }
    for (const auto& slot : schema.requestable) s.requestable.insert(canonical(slot));
    domains_.emplace(canonical(name), std::move(s));
  }
}

const DomainSchema* Ontology::schema(std::string_view domain) const {
  auto it = domains_.find(std::string(domain));
  return it == domains_.end() ? nullptr : &it->second;
}

bool Ontology::has_domain(std::string_view domain) const { return schema(domain) != nullptr; }

bool Ontology::is_informable(std::string_view domain, std::string_view slot) const {
  const auto* s = schema(domain);
  return s != nullptr && s->informable.contains(std::string(slot));
}

bool Ontology::is_requestable(std::string_view domain, std::string_view slot) const {
  const auto* s = schema(domain);
  return s != nullptr && s->requestable.contains(std::string(slot));
}

bool Ontology::is_valid_slot(std::string_view domain, std::string_view slot) const {
  if (!has_domain(domain)) return false;
  return is_informable(domain, slot) || is_requestable(domain, slot) || slot == kNameSlot ||
         slot == kReferenceSlot || slot == kBookingSlot;
}

bool Ontology::is_valid_value(std::string_view domain, std::string_view slot,
                              std::string_view value) const {
  if (!is_valid_slot(domain, slot)) return false;
  if (const auto* s = schema(domain); s != nullptr) {
    auto it = s->informable.find(std::string(slot));
    if (it != s->informable.end()) return it->second.contains(std::string(value));
  }
  return true;
}

// ---------------------------------------------------------------------------

std::vector<GoalViolation> validate_goal(const Goal& goal, const Ontology& ontology) {
  std::vector<GoalViolation> out;
  for (const auto& [domain, dg] : goal.domains) {
    if (!ontology.has_domain(domain)) {
      out.push_back({"unknown domain", domain});
      continue;
    }
    if (dg.informable.empty() && dg.requestable.empty() && !dg.needs_booking) {
      out.push_back({"empty domain goal", domain});
    }
    for (const auto& [slot, value] : dg.informable) {
      if (!ontology.is_informable(domain, slot)) {
        out.push_back({"unknown slot", domain + "." + slot});
      } else if (!ontology.is_valid_value(domain, slot, value)) {
        out.push_back({"unknown value", domain + "." + slot + "=" + value});
      }
    }
    for (const auto& slot : dg.requestable) {
      if (dg.informable.contains(slot)) {
        out.push_back({"overlapping slot sets", domain + "." + slot});
      }
      if (!ontology.is_requestable(domain, slot)) {
        out.push_back({"unknown slot", domain + "." + slot});
      }
    }
  }
  return out;
}

GoalItem GoalItem::inform(std::string_view d, std::string_view s, std::string_view v) {
  return {GoalItemKind::kInform, canonical(d), canonical(s), canonical(v)};
}
GoalItem GoalItem::request(std::string_view d, std::string_view s) {
  return {GoalItemKind::kRequest, canonical(d), canonical(s), {}};
}
GoalItem GoalItem::booking(std::string_view d) {
  return {GoalItemKind::kBooking, canonical(d), {}, {}};
}

std::string to_string(const GoalItem& item) {
  switch (item.kind) {
    case GoalItemKind::kInform:
      return "Inform(" + item.domain + "," + item.slot + "," + item.value + ")";
    case GoalItemKind::kRequest:
      return "Request(" + item.domain + "," + item.slot + ")";
    case GoalItemKind::kBooking:
      return "Booking(" + item.domain + ")";
  }
  return {};
}

std::set<GoalItem> goal_to_items(const Goal& goal) {
  std::set<GoalItem> items;
  for (const auto& [domain, dg] : goal.domains) {
    if (dg.informable.empty() && dg.requestable.empty() && !dg.needs_booking) {
      throw InvalidArgument("goal domain '" + domain + "' has no obligations");
    }
    for (const auto& [slot, value] : dg.informable) {
      if (dg.requestable.contains(slot)) {
        throw InvalidArgument("goal slot '" + domain + "." + slot +
                              "' is both informable and requestable");
      }
      items.insert(GoalItem::inform(domain, slot, value));
    }
    for (const auto& slot : dg.requestable) items.insert(GoalItem::request(domain, slot));
    if (dg.needs_booking) items.insert(GoalItem::booking(domain));
  }
  return items;
}

GoalState GoalState::from_goal(const Goal& goal) { return GoalState{goal_to_items(goal), {}}; }

// ---------------------------------------------------------------------------

const std::map<std::string, std::string>& BeliefState::domain(std::string_view d) const {
  static const std::map<std::string, std::string> kEmpty;
  auto it = constraints.find(std::string(d));
  return it == constraints.end() ? kEmpty : it->second;
}

bool belief_is_valid(const BeliefState& belief, const Ontology& ontology) {
  for (const auto& [domain, slots] : belief.constraints) {
    for (const auto& [slot, value] : slots) {
      if (!ontology.is_valid_slot(domain, slot)) return false;
    }
  }
  return true;
}

std::string_view to_string(Termination t) {
  return kTerminationNames[static_cast<std::size_t>(t)];
}

std::optional<Termination> parse_termination(std::string_view name) {
  for (std::size_t i = 0; i < kTerminationNames.size(); ++i) {
    if (kTerminationNames[i] == name) return static_cast<Termination>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

bool entity_satisfies(const Entity& entity,
                      const std::map<std::string, std::string>& constraints) {
  for (const auto& [slot, value] : constraints) {
    auto it = entity.find(slot);
    if (it == entity.end() || it->second != value) return false;
  }
  return true;
}

VenueDatabase::VenueDatabase(Ontology ontology,
                             std::map<std::string, std::vector<Entity>> entities)
    : ontology_(std::move(ontology)) {
  for (auto& [domain_raw, list] : entities) {
    const std::string domain = canonical(domain_raw);
    if (!ontology_.has_domain(domain)) {
      throw InvalidArgument("database domain '" + domain + "' not in ontology");
    }
    auto& dst = entities_[domain];
    std::set<std::string> names;
    for (const auto& raw : list) {
      Entity e;
      for (const auto& [slot, value] : raw) e[canonical(slot)] = canonical(value);
      auto name = e.find(std::string(Ontology::kNameSlot));
      if (name == e.end() || name->second.empty()) {
        throw InvalidArgument("database entity in '" + domain + "' has no name");
      }
      if (!names.insert(name->second).second) {
        throw InvalidArgument("duplicate entity name '" + name->second + "' in '" + domain + "'");
      }
      for (const auto& [slot, value] : e) {
        if (!ontology_.is_valid_value(domain, slot, value)) {
          throw InvalidArgument("entity '" + name->second + "' has invalid " + slot + "=" +
                                value);
        }
      }
      dst.push_back(std::move(e));
    }
  }
}

std::vector<const Entity*> VenueDatabase::query(
    std::string_view domain, const std::map<std::string, std::string>& constraints) const {
  std::vector<const Entity*> out;
  auto it = entities_.find(std::string(domain));
  if (it == entities_.end()) return out;
  for (const auto& e : it->second) {
    if (entity_satisfies(e, constraints)) out.push_back(&e);
  }
  return out;
}

const Entity* VenueDatabase::find_by_name(std::string_view domain, std::string_view name) const {
  auto it = entities_.find(std::string(domain));
  if (it == entities_.end()) return nullptr;
  for (const auto& e : it->second) {
    auto n = e.find(std::string(Ontology::kNameSlot));
    if (n != e.end() && n->second == name) return &e;
  }
  return nullptr;
}

std::string booking_reference(std::string_view domain, std::string_view name) {
  std::uint64_t h = fnv1a(name, fnv1a(domain));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return std::string("ref") + buf;
}

}  // namespace todsim
