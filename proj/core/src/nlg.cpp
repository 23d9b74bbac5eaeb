#include "todsim/nlg.hpp"

#include <functional>

namespace todsim {

namespace {

enum class Form : std::uint8_t { kBare, kDomain, kDomainSlot, kFull, kBookingYes };

struct Template {
  Speaker speaker;
  ActType type;
  Form form;
  std::string_view pattern;  // holes: {d} domain, {s} slot, {v} value
};

// Parse order matters only for the "with that {s}" / "with {s} {v}" pairs, where
// the slot-only form is listed first.
constexpr Template kTemplates[] = {
    // user
    {Speaker::kUser, ActType::kInform, Form::kBookingYes, "i would like to book the {d}."},
    {Speaker::kUser, ActType::kInform, Form::kDomainSlot, "i have a preference about the {s} of the {d}."},
    {Speaker::kUser, ActType::kInform, Form::kFull, "i am looking for a {d} with {s} {v}."},
    {Speaker::kUser, ActType::kRequest, Form::kDomainSlot, "what is the {s} of the {d}?"},
    {Speaker::kUser, ActType::kOffer, Form::kDomainSlot, "how about the {s} of the {d}?"},
    {Speaker::kUser, ActType::kOffer, Form::kFull, "how about the {d} with {s} {v}?"},
    {Speaker::kUser, ActType::kBook, Form::kDomainSlot, "please book the {d} and tell me the {s}."},
    {Speaker::kUser, ActType::kBook, Form::kFull, "please book the {d} with {s} {v}."},
    {Speaker::kUser, ActType::kNoOffer, Form::kDomain, "i cannot find a {d}."},
    {Speaker::kUser, ActType::kNoOffer, Form::kDomainSlot, "i cannot find a {d} with that {s}."},
    {Speaker::kUser, ActType::kNoOffer, Form::kFull, "i cannot find a {d} with {s} {v}."},
    {Speaker::kUser, ActType::kBye, Form::kBare, "thank you, goodbye."},
    {Speaker::kUser, ActType::kThank, Form::kBare, "thank you."},
    {Speaker::kUser, ActType::kGreet, Form::kBare, "hello."},
    // system
    {Speaker::kSystem, ActType::kInform, Form::kDomainSlot, "i can tell you the {s} of the {d}."},
    {Speaker::kSystem, ActType::kInform, Form::kFull, "the {s} of the {d} is {v}."},
    {Speaker::kSystem, ActType::kRequest, Form::kDomainSlot, "what {s} would you like for the {d}?"},
    {Speaker::kSystem, ActType::kOffer, Form::kDomainSlot, "i can offer a {d} with any {s}."},
    {Speaker::kSystem, ActType::kOffer, Form::kFull, "i can offer a {d} with {s} {v}."},
    {Speaker::kSystem, ActType::kBook, Form::kDomainSlot, "i can book the {d}, the {s} will follow."},
    {Speaker::kSystem, ActType::kBook, Form::kFull, "i have booked the {d}, the {s} is {v}."},
    {Speaker::kSystem, ActType::kNoOffer, Form::kDomain, "sorry, there is no {d} matching your request."},
    {Speaker::kSystem, ActType::kNoOffer, Form::kDomainSlot, "sorry, there is no {d} with that {s}."},
    {Speaker::kSystem, ActType::kNoOffer, Form::kFull, "sorry, there is no {d} with {s} {v}."},
    {Speaker::kSystem, ActType::kBye, Form::kBare, "goodbye, have a nice day."},
    {Speaker::kSystem, ActType::kThank, Form::kBare, "you are welcome."},
    {Speaker::kSystem, ActType::kGreet, Form::kBare, "how can i help you?"},
};

Form form_of(const DialogueAct& act) {
  if (is_bare(act.type)) return Form::kBare;
  if (act.type == ActType::kInform && act.slot == Ontology::kBookingSlot && act.value == "yes") {
    return Form::kBookingYes;
  }
  if (act.slot.empty()) return Form::kDomain;
  if (act.value.empty()) return Form::kDomainSlot;
  return Form::kFull;
}

const Template* find_template(Speaker speaker, ActType type, Form form) {
  for (const auto& t : kTemplates) {
    if (t.speaker == speaker && t.type == type && t.form == form) return &t;
  }
  if (form == Form::kBookingYes) return find_template(speaker, type, Form::kFull);
  return nullptr;
}

std::string fill(const Template& t, const DialogueAct& act) {
  std::string out;
  std::string_view p = t.pattern;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == '{' && i + 2 < p.size() && p[i + 2] == '}') {
      switch (p[i + 1]) {
        case 'd': out += act.domain; break;
        case 's': out += act.slot; break;
        case 'v': out += act.value; break;
      }
      i += 2;
    } else {
      out += p[i];
    }
  }
  return out;
}

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

struct Fields {
  std::string_view domain, slot, value;
};

// Calls on_match(end, fields) for every way `pattern` matches text starting at
// `pos`; stops early when on_match returns true.
bool match_pattern(std::string_view pattern, std::size_t pi, std::string_view text,
                   std::size_t pos, Fields& fields,
                   const std::function<bool(std::size_t, const Fields&)>& on_match) {
  if (pi == pattern.size()) return on_match(pos, fields);
  if (pattern[pi] == '{' && pi + 2 < pattern.size() && pattern[pi + 2] == '}') {
    const char hole = pattern[pi + 1];
    if (hole == 'v') {
      // Any non-empty run without surrounding blanks.
      for (std::size_t end = pos + 1; end <= text.size(); ++end) {
        std::string_view v = text.substr(pos, end - pos);
        if (v.front() == ' ' || v.back() == ' ') continue;
        fields.value = v;
        if (match_pattern(pattern, pi + 3, text, end, fields, on_match)) return true;
      }
      return false;
    }
    std::size_t end = pos;
    while (end < text.size() && is_ident_char(text[end])) ++end;
    // Identifiers are maximal runs; the following literal never starts with an
    // identifier character.
    if (end == pos) return false;
    (hole == 'd' ? fields.domain : fields.slot) = text.substr(pos, end - pos);
    return match_pattern(pattern, pi + 3, text, end, fields, on_match);
  }
  if (pos >= text.size() || text[pos] != pattern[pi]) return false;
  return match_pattern(pattern, pi + 1, text, pos + 1, fields, on_match);
}

DialogueAct act_from(const Template& t, const Fields& f) {
  DialogueAct act;
  act.type = t.type;
  if (t.form == Form::kBare) return act;
  act.domain = std::string(f.domain);
  if (t.form == Form::kBookingYes) {
    act.slot = std::string(Ontology::kBookingSlot);
    act.value = "yes";
    return act;
  }
  if (t.form == Form::kDomainSlot || t.form == Form::kFull) act.slot = std::string(f.slot);
  if (t.form == Form::kFull) act.value = std::string(f.value);
  return act;
}

bool parse_sequence(std::string_view text, std::size_t pos, bool user, bool system,
                    std::vector<ParsedClause>& out) {
  for (const auto& t : kTemplates) {
    if ((t.speaker == Speaker::kUser && !user) || (t.speaker == Speaker::kSystem && !system)) {
      continue;
    }
    Fields fields;
    bool done = match_pattern(t.pattern, 0, text, pos, fields,
                              [&](std::size_t end, const Fields& f) {
                                DialogueAct act = act_from(t, f);
                                // Re-realization must reproduce the clause exactly.
                                if (act_violation(act) ||
                                    find_template(t.speaker, act.type, form_of(act)) != &t) {
                                  return false;
                                }
                                out.push_back({t.speaker, std::move(act)});
                                if (end == text.size()) return true;
                                if (text[end] == ' ' &&
                                    parse_sequence(text, end + 1, user, system, out)) {
                                  return true;
                                }
                                out.pop_back();
                                return false;
                              });
    if (done) return true;
  }
  return false;
}

std::optional<std::vector<ParsedClause>> parse_with(std::string_view text, bool user,
                                                    bool system) {
  std::vector<ParsedClause> out;
  if (text == kEmptyUtterance) return out;
  if (text.empty() || !parse_sequence(text, 0, user, system, out)) return std::nullopt;
  return out;
}

}  // namespace

std::string_view to_string(Speaker s) { return s == Speaker::kUser ? "user" : "system"; }

std::string realize(Speaker speaker, std::span<const DialogueAct> acts) {
  if (acts.empty()) return std::string(kEmptyUtterance);
  std::string out;
  for (const auto& act : acts) {
    const Template* t = find_template(speaker, act.type, form_of(act));
    if (t == nullptr) continue;  // only reachable for malformed acts
    if (!out.empty()) out += ' ';
    out += fill(*t, act);
  }
  return out;
}

std::optional<std::vector<DialogueAct>> parse_utterance(Speaker speaker, std::string_view text) {
  auto clauses = parse_with(text, speaker == Speaker::kUser, speaker == Speaker::kSystem);
  if (!clauses) return std::nullopt;
  std::vector<DialogueAct> acts;
  acts.reserve(clauses->size());
  for (auto& c : *clauses) acts.push_back(std::move(c.act));
  return acts;
}

std::optional<std::vector<ParsedClause>> parse_any(std::string_view text) {
  return parse_with(text, true, true);
}

}  // namespace todsim
