#include "json_codec.hpp"

#include <set>

namespace todsim::detail {

namespace {

std::string pointer_escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

std::string child(const std::string& path, const std::string& key) {
  return path + "/" + pointer_escape(key);
}

std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const char* type_name(const json& j) { return j.type_name(); }

}  // namespace

void violation(const std::string& path, const std::string& rule) {
  throw SchemaViolation{path, rule};
}

std::string dump_canonical(const json& j) {
  try {
    return j.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
  } catch (const json::exception& e) {
    violation("", std::string("cannot encode: ") + e.what());
  }
}

std::string dump_line(const json& j) {
  try {
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
  } catch (const json::exception& e) {
    violation("", std::string("cannot encode: ") + e.what());
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    violation("", std::string("not valid JSON: ") + e.what());
  }
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) violation(path, "missing member '" + key + "'");
  return *it;
}

const json* optional_member(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) violation(path, std::string("expected a string, found ") + type_name(j));
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) violation(path, std::string("expected a boolean, found ") + type_name(j));
  return j.get<bool>();
}

std::int64_t get_int(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX)) violation(path, "integer out of range");
    return static_cast<std::int64_t>(v);
  }
  if (!j.is_number_integer()) {
    violation(path, std::string("expected an integer, found ") + type_name(j));
  }
  return j.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  violation(path, std::string("expected a non-negative integer, found ") + type_name(j));
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) violation(path, std::string("expected a number, found ") + type_name(j));
  return j.get<double>();
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) violation(path, std::string("expected an object, found ") + type_name(j));
}

void require_array(const json& j, const std::string& path) {
  if (!j.is_array()) violation(path, std::string("expected an array, found ") + type_name(j));
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed,
               const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) violation(child(path, it.key()), "unknown member '" + it.key() + "'");
  }
}

void check_header(const json& doc, const std::string& format) {
  require_object(doc, "");
  const std::string f = get_string(member(doc, "format", ""), "/format");
  if (f != format) violation("/format", "expected '" + format + "', found '" + f + "'");
  const auto v = get_int(member(doc, "version", ""), "/version");
  if (v != kCorpusFormatVersion) {
    violation("/version", "unsupported version " + std::to_string(v) + " (expected " +
                              std::to_string(kCorpusFormatVersion) + ")");
  }
}

json header(const std::string& format) {
  return json{{"format", format}, {"version", kCorpusFormatVersion}};
}

// ---------------------------------------------------------------------------

json act_to_json(const DialogueAct& act) {
  json j = json::object();
  j["act"] = std::string(to_string(act.type));
  if (!act.domain.empty()) j["domain"] = act.domain;
  if (!act.slot.empty()) j["slot"] = act.slot;
  if (!act.value.empty()) j["value"] = act.value;
  return j;
}

std::optional<DialogueAct> act_from_json(const json& j, const std::string& path,
                                         const ActDecoding& opts) {
  require_object(j, path);
  only_keys(j, {"act", "domain", "slot", "value"}, path);
  const std::string name = canonical(get_string(member(j, "act", path), child(path, "act")));
  auto field = [&](const char* key) {
    const json* m = optional_member(j, key);
    return m == nullptr ? std::string() : get_string(*m, child(path, key));
  };
  DialogueAct act;
  act.domain = canonical(field("domain"));
  act.slot = canonical(field("slot"));
  act.value = canonical(field("value"));

  bool foreign = false;
  if (auto t = parse_act_type(name)) {
    act.type = *t;
  } else if (!opts.allow_foreign) {
    violation(child(path, "act"), "unknown act type '" + name + "'");
  } else if (auto mapped = map_foreign_act(name)) {
    act.type = *mapped;
    foreign = true;
    if (opts.result != nullptr) {
      ++opts.result->warnings;
      opts.result->messages.push_back(path + ": act '" + name + "' mapped to '" +
                                      std::string(to_string(*mapped)) + "'");
    }
  } else {
    if (opts.result != nullptr) {
      ++opts.result->warnings;
      opts.result->messages.push_back(path + ": unknown act '" + name + "' dropped");
    }
    return std::nullopt;
  }
  if (foreign && is_bare(act.type)) {
    act.domain.clear();
    act.slot.clear();
    act.value.clear();
  }
  if (auto v = act_violation(act)) {
    if (foreign) {
      if (opts.result != nullptr) {
        opts.result->messages.push_back(path + ": mapped act dropped: " + *v);
      }
      return std::nullopt;
    }
    violation(path, *v);
  }
  if (opts.ontology != nullptr && !is_bare(act.type)) {
    if (!opts.ontology->has_domain(act.domain)) {
      violation(child(path, "domain"), "unknown domain '" + act.domain + "'");
    }
    if (!act.slot.empty() && !opts.ontology->is_valid_slot(act.domain, act.slot)) {
      violation(child(path, "slot"), "unknown slot '" + act.domain + "." + act.slot + "'");
    }
    if (!act.value.empty() && !opts.ontology->is_valid_value(act.domain, act.slot, act.value)) {
      violation(child(path, "value"),
                "unknown value '" + act.value + "' for " + act.domain + "." + act.slot);
    }
  }
  return act;
}

json acts_to_json(const std::vector<DialogueAct>& acts) {
  json j = json::array();
  for (const auto& a : acts) j.push_back(act_to_json(a));
  return j;
}

std::vector<DialogueAct> acts_from_json(const json& j, const std::string& path,
                                        const ActDecoding& opts) {
  require_array(j, path);
  std::vector<DialogueAct> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (auto a = act_from_json(j[i], child(path, i), opts)) out.push_back(std::move(*a));
  }
  return out;
}

namespace {

std::string canonical_key(std::set<std::string>& seen, const std::string& raw,
                          const std::string& path) {
  std::string key = canonical(raw);
  if (key.empty()) violation(path, "empty name");
  if (!seen.insert(key).second) violation(path, "duplicate name '" + key + "'");
  return key;
}

}  // namespace

json goal_to_json(const Goal& goal) {
  json j = json::object();
  for (const auto& [d, dg] : goal.domains) {
    json inf = json::object();
    for (const auto& [s, v] : dg.informable) inf[s] = v;
    json req = json::array();
    for (const auto& s : dg.requestable) req.push_back(s);
    j[d] = json{{"informable", inf}, {"requestable", req}, {"booking", dg.needs_booking}};
  }
  return j;
}

Goal goal_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  Goal goal;
  std::set<std::string> seen_domains;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string dpath = child(path, it.key());
    const std::string d = canonical_key(seen_domains, it.key(), dpath);
    require_object(*it, dpath);
    only_keys(*it, {"informable", "requestable", "booking"}, dpath);
    DomainGoal dg;
    if (const json* inf = optional_member(*it, "informable")) {
      const std::string ipath = child(dpath, "informable");
      require_object(*inf, ipath);
      std::set<std::string> seen;
      for (auto s = inf->begin(); s != inf->end(); ++s) {
        const std::string spath = child(ipath, s.key());
        dg.informable[canonical_key(seen, s.key(), spath)] = canonical(get_string(*s, spath));
      }
    }
    if (const json* req = optional_member(*it, "requestable")) {
      const std::string rpath = child(dpath, "requestable");
      require_array(*req, rpath);
      for (std::size_t i = 0; i < req->size(); ++i) {
        const std::string s = canonical(get_string((*req)[i], child(rpath, i)));
        if (!dg.requestable.insert(s).second) {
          violation(child(rpath, i), "duplicate requestable '" + s + "'");
        }
      }
    }
    if (const json* b = optional_member(*it, "booking")) {
      dg.needs_booking = get_bool(*b, child(dpath, "booking"));
    }
    goal.domains[d] = std::move(dg);
  }
  return goal;
}

json item_to_json(const GoalItem& item) {
  static constexpr const char* kKinds[] = {"inform", "request", "booking"};
  json j = json::object();
  j["kind"] = kKinds[static_cast<int>(item.kind)];
  j["domain"] = item.domain;
  if (!item.slot.empty()) j["slot"] = item.slot;
  if (!item.value.empty()) j["value"] = item.value;
  return j;
}

GoalItem item_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  only_keys(j, {"kind", "domain", "slot", "value"}, path);
  const std::string kind = get_string(member(j, "kind", path), child(path, "kind"));
  const std::string d = get_string(member(j, "domain", path), child(path, "domain"));
  auto field = [&](const char* key) {
    const json* m = optional_member(j, key);
    return m == nullptr ? std::string() : get_string(*m, child(path, key));
  };
  const std::string s = field("slot");
  const std::string v = field("value");
  if (canonical(d).empty()) violation(child(path, "domain"), "empty domain");
  if (kind == "inform") {
    if (canonical(s).empty() || canonical(v).empty()) {
      violation(path, "inform item needs slot and value");
    }
    return GoalItem::inform(d, s, v);
  }
  if (kind == "request") {
    if (canonical(s).empty() || !v.empty()) violation(path, "request item needs a slot only");
    return GoalItem::request(d, s);
  }
  if (kind == "booking") {
    if (!s.empty() || !v.empty()) violation(path, "booking item carries no slot or value");
    return GoalItem::booking(d);
  }
  violation(child(path, "kind"), "unknown goal item kind '" + kind + "'");
}

json goal_state_to_json(const GoalState& state) {
  json u = json::array();
  for (const auto& i : state.unfinished) u.push_back(item_to_json(i));
  json f = json::array();
  for (const auto& i : state.finished) f.push_back(item_to_json(i));
  return json{{"unfinished", u}, {"finished", f}};
}

GoalState goal_state_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  only_keys(j, {"unfinished", "finished"}, path);
  GoalState st;
  auto read_set = [&](const char* key, std::set<GoalItem>& out) {
    const std::string p = child(path, key);
    const json& arr = member(j, key, path);
    require_array(arr, p);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!out.insert(item_from_json(arr[i], child(p, i))).second) {
        violation(child(p, i), "duplicate goal item");
      }
    }
  };
  read_set("unfinished", st.unfinished);
  read_set("finished", st.finished);
  for (const auto& i : st.unfinished) {
    if (st.finished.contains(i)) violation(path, "item both unfinished and finished");
  }
  return st;
}

json belief_to_json(const BeliefState& belief) {
  json j = json::object();
  for (const auto& [d, slots] : belief.constraints) {
    json o = json::object();
    for (const auto& [s, v] : slots) o[s] = v;
    j[d] = o;
  }
  return j;
}

BeliefState belief_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  BeliefState b;
  std::set<std::string> seen_domains;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string dpath = child(path, it.key());
    const std::string d = canonical_key(seen_domains, it.key(), dpath);
    require_object(*it, dpath);
    std::set<std::string> seen;
    auto& slots = b.constraints[d];
    for (auto s = it->begin(); s != it->end(); ++s) {
      const std::string spath = child(dpath, s.key());
      slots[canonical_key(seen, s.key(), spath)] = canonical(get_string(*s, spath));
    }
  }
  return b;
}

json turn_to_json(const Turn& turn) {
  return json{{"index", turn.index},
              {"user", turn.user_utterance},
              {"user_acts", acts_to_json(turn.user_acts)},
              {"system", turn.system_utterance},
              {"system_acts", acts_to_json(turn.system_acts)},
              {"belief", belief_to_json(turn.belief_state)}};
}

Turn turn_from_json(const json& j, const std::string& path, const ActDecoding& opts) {
  require_object(j, path);
  only_keys(j, {"index", "user", "user_acts", "system", "system_acts", "belief"}, path);
  Turn t;
  const auto index = get_int(member(j, "index", path), child(path, "index"));
  if (index < 0 || index > INT32_MAX) violation(child(path, "index"), "turn index out of range");
  t.index = static_cast<int>(index);
  t.user_utterance = get_string(member(j, "user", path), child(path, "user"));
  t.user_acts = acts_from_json(member(j, "user_acts", path), child(path, "user_acts"), opts);
  t.system_utterance = get_string(member(j, "system", path), child(path, "system"));
  t.system_acts = acts_from_json(member(j, "system_acts", path), child(path, "system_acts"), opts);
  if (const json* b = optional_member(j, "belief")) {
    t.belief_state = belief_from_json(*b, child(path, "belief"));
  }
  return t;
}

}  // namespace todsim::detail
