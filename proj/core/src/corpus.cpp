#include "todsim/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_codec.hpp"
#include "todsim/toy.hpp"

namespace todsim {

using detail::json;

CorpusError::CorpusError(std::string file, std::string path, std::string rule)
    : Error(file + ": " + (path.empty() ? std::string("/") : path) + ": " + rule),
      file_(std::move(file)),
      path_(std::move(path)),
      rule_(std::move(rule)) {}

std::optional<ActType> map_foreign_act(std::string_view name) {
  const std::string n = canonical(name);
  if (n == "recommend" || n == "select" || n == "offerbook") return ActType::kOffer;
  if (n == "offerbooked") return ActType::kBook;
  if (n == "nobook") return ActType::kNoOffer;
  if (n == "welcome") return ActType::kGreet;
  return std::nullopt;
}

namespace {

template <typename Fn>
auto with_file(const std::string& file, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const detail::SchemaViolation& v) {
    throw CorpusError(file, v.path, v.rule);
  }
}

std::string idx(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

void check_goal(const Goal& goal, const Ontology& ontology, const std::string& path,
                bool require_domain) {
  if (require_domain && goal.empty()) detail::violation(path, "goal names no domain");
  auto violations = validate_goal(goal, ontology);
  if (!violations.empty()) {
    detail::violation(path, violations.front().rule + ": " + violations.front().detail);
  }
}

}  // namespace

std::string encode_ontology(const Ontology& ontology) {
  json doc = detail::header("todsim-ontology");
  json domains = json::object();
  for (const auto& [d, schema] : ontology.domains()) {
    json inf = json::object();
    for (const auto& [s, values] : schema.informable) inf[s] = json(values);
    domains[d] = json{{"informable", inf}, {"requestable", json(schema.requestable)}};
  }
  doc["domains"] = domains;
  return detail::dump_canonical(doc);
}

Ontology decode_ontology(std::string_view text, const std::string& file) {
  return with_file(file, [&] {
    json doc = detail::parse_json(text);
    detail::check_header(doc, "todsim-ontology");
    detail::only_keys(doc, {"format", "version", "domains"}, "");
    const json& domains = detail::member(doc, "domains", "");
    detail::require_object(domains, "/domains");
    if (domains.empty()) detail::violation("/domains", "ontology has no domains");
    std::map<std::string, DomainSchema> out;
    for (auto it = domains.begin(); it != domains.end(); ++it) {
      const std::string dpath = "/domains/" + it.key();
      const std::string d = canonical(it.key());
      if (d.empty() || out.contains(d)) detail::violation(dpath, "empty or duplicate domain");
      detail::require_object(*it, dpath);
      detail::only_keys(*it, {"informable", "requestable"}, dpath);
      DomainSchema schema;
      const json& inf = detail::member(*it, "informable", dpath);
      detail::require_object(inf, dpath + "/informable");
      for (auto s = inf.begin(); s != inf.end(); ++s) {
        const std::string spath = dpath + "/informable/" + s.key();
        const std::string slot = canonical(s.key());
        if (slot.empty() || schema.informable.contains(slot)) {
          detail::violation(spath, "empty or duplicate slot");
        }
        detail::require_array(*s, spath);
        auto& values = schema.informable[slot];
        for (std::size_t i = 0; i < s->size(); ++i) {
          const std::string v = canonical(detail::get_string((*s)[i], idx(spath, i)));
          if (v.empty() || !values.insert(v).second) {
            detail::violation(idx(spath, i), "empty or duplicate value");
          }
        }
      }
      const json& req = detail::member(*it, "requestable", dpath);
      detail::require_array(req, dpath + "/requestable");
      for (std::size_t i = 0; i < req.size(); ++i) {
        const std::string rpath = idx(dpath + "/requestable", i);
        const std::string slot = canonical(detail::get_string(req[i], rpath));
        if (slot.empty() || !schema.requestable.insert(slot).second) {
          detail::violation(rpath, "empty or duplicate slot");
        }
        if (schema.informable.contains(slot)) {
          detail::violation(rpath, "slot '" + slot + "' is both informable and requestable");
        }
      }
      out[d] = std::move(schema);
    }
    try {
      return Ontology(std::move(out));
    } catch (const InvalidArgument& e) {
      detail::violation("/domains", e.what());
    }
  });
}

std::string encode_database(const VenueDatabase& db) {
  json doc = detail::header("todsim-database");
  json entities = json::object();
  for (const auto& [d, list] : db.entities()) {
    json arr = json::array();
    for (const auto& e : list) arr.push_back(json(e));
    entities[d] = arr;
  }
  doc["entities"] = entities;
  return detail::dump_canonical(doc);
}

VenueDatabase decode_database(std::string_view text, const Ontology& ontology,
                              const std::string& file) {
  return with_file(file, [&] {
    json doc = detail::parse_json(text);
    detail::check_header(doc, "todsim-database");
    detail::only_keys(doc, {"format", "version", "entities"}, "");
    const json& entities = detail::member(doc, "entities", "");
    detail::require_object(entities, "/entities");
    std::map<std::string, std::vector<Entity>> out;
    for (auto it = entities.begin(); it != entities.end(); ++it) {
      const std::string dpath = "/entities/" + it.key();
      const std::string d = canonical(it.key());
      if (!ontology.has_domain(d)) detail::violation(dpath, "unknown domain '" + d + "'");
      if (out.contains(d)) detail::violation(dpath, "duplicate domain '" + d + "'");
      detail::require_array(*it, dpath);
      auto& list = out[d];
      std::set<std::string> names;
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string epath = idx(dpath, i);
        const json& ej = (*it)[i];
        detail::require_object(ej, epath);
        Entity e;
        for (auto s = ej.begin(); s != ej.end(); ++s) {
          const std::string spath = epath + "/" + s.key();
          const std::string slot = canonical(s.key());
          const std::string value = canonical(detail::get_string(*s, spath));
          if (!ontology.is_valid_slot(d, slot)) {
            detail::violation(spath, "unknown slot '" + d + "." + slot + "'");
          }
          if (!ontology.is_valid_value(d, slot, value)) {
            detail::violation(spath, "unknown value '" + value + "' for " + d + "." + slot);
          }
          if (e.contains(slot)) detail::violation(spath, "duplicate slot '" + slot + "'");
          e[slot] = value;
        }
        auto name = e.find(std::string(Ontology::kNameSlot));
        if (name == e.end() || name->second.empty()) detail::violation(epath, "entity has no name");
        if (!names.insert(name->second).second) {
          detail::violation(epath, "duplicate entity name '" + name->second + "'");
        }
        list.push_back(std::move(e));
      }
    }
    try {
      return VenueDatabase(ontology, std::move(out));
    } catch (const InvalidArgument& e) {
      detail::violation("/entities", e.what());
    }
  });
}

std::string encode_goals(std::span<const Goal> goals) {
  json doc = detail::header("todsim-goals");
  json arr = json::array();
  for (const auto& g : goals) arr.push_back(detail::goal_to_json(g));
  doc["goals"] = arr;
  return detail::dump_canonical(doc);
}

std::vector<Goal> decode_goals(std::string_view text, const Ontology& ontology,
                               const std::string& file) {
  return with_file(file, [&] {
    json doc = detail::parse_json(text);
    detail::check_header(doc, "todsim-goals");
    detail::only_keys(doc, {"format", "version", "goals"}, "");
    const json& goals = detail::member(doc, "goals", "");
    detail::require_array(goals, "/goals");
    std::vector<Goal> out;
    for (std::size_t i = 0; i < goals.size(); ++i) {
      Goal g = detail::goal_from_json(goals[i], idx("/goals", i));
      check_goal(g, ontology, idx("/goals", i), true);
      out.push_back(std::move(g));
    }
    return out;
  });
}

namespace {

json annotated_turn_to_json(const AnnotatedTurn& t) {
  return json{{"user", t.user_utterance},
              {"user_acts", detail::acts_to_json(t.user_acts)},
              {"system", t.system_utterance},
              {"system_acts", detail::acts_to_json(t.system_acts)}};
}

}  // namespace

std::string encode_dialogues(std::span<const AnnotatedDialogue> dialogues) {
  json doc = detail::header("todsim-dialogues");
  json arr = json::array();
  for (const auto& d : dialogues) {
    json turns = json::array();
    for (const auto& t : d.turns) turns.push_back(annotated_turn_to_json(t));
    arr.push_back(json{{"id", d.id}, {"goal", detail::goal_to_json(d.goal)}, {"turns", turns}});
  }
  doc["dialogues"] = arr;
  return detail::dump_canonical(doc);
}

std::vector<AnnotatedDialogue> decode_dialogues(std::string_view text, const Ontology& ontology,
                                                DecodeResult* result, const std::string& file) {
  return with_file(file, [&] {
    json doc = detail::parse_json(text);
    detail::check_header(doc, "todsim-dialogues");
    detail::only_keys(doc, {"format", "version", "dialogues"}, "");
    const json& dialogues = detail::member(doc, "dialogues", "");
    detail::require_array(dialogues, "/dialogues");
    const detail::ActDecoding acts{&ontology, true, result};
    std::vector<AnnotatedDialogue> out;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
      const std::string path = idx("/dialogues", i);
      const json& dj = dialogues[i];
      detail::require_object(dj, path);
      detail::only_keys(dj, {"id", "goal", "turns"}, path);
      AnnotatedDialogue d;
      d.id = detail::get_string(detail::member(dj, "id", path), path + "/id");
      if (d.id.empty() || !ids.insert(d.id).second) {
        detail::violation(path + "/id", "empty or duplicate dialogue id");
      }
      d.goal = detail::goal_from_json(detail::member(dj, "goal", path), path + "/goal");
      check_goal(d.goal, ontology, path + "/goal", true);
      const json& turns = detail::member(dj, "turns", path);
      detail::require_array(turns, path + "/turns");
      if (turns.empty()) detail::violation(path + "/turns", "empty dialogue");
      for (std::size_t t = 0; t < turns.size(); ++t) {
        const std::string tpath = idx(path + "/turns", t);
        const json& tj = turns[t];
        detail::require_object(tj, tpath);
        detail::only_keys(tj, {"user", "user_acts", "system", "system_acts"}, tpath);
        AnnotatedTurn at;
        at.user_utterance = detail::get_string(detail::member(tj, "user", tpath), tpath + "/user");
        at.user_acts = detail::acts_from_json(detail::member(tj, "user_acts", tpath),
                                              tpath + "/user_acts", acts);
        at.system_utterance =
            detail::get_string(detail::member(tj, "system", tpath), tpath + "/system");
        at.system_acts = detail::acts_from_json(detail::member(tj, "system_acts", tpath),
                                                tpath + "/system_acts", acts);
        d.turns.push_back(std::move(at));
      }
      out.push_back(std::move(d));
    }
    return out;
  });
}

std::string encode_sessions(std::span<const Session> sessions) {
  json doc = detail::header("todsim-sessions");
  json arr = json::array();
  for (const auto& s : sessions) {
    json turns = json::array();
    for (const auto& t : s.turns) turns.push_back(detail::turn_to_json(t));
    arr.push_back(json{{"id", s.id},
                       {"goal", detail::goal_to_json(s.goal)},
                       {"termination", s.termination ? json(std::string(to_string(*s.termination)))
                                                     : json(nullptr)},
                       {"turns", turns}});
  }
  doc["sessions"] = arr;
  return detail::dump_canonical(doc);
}

std::vector<Session> decode_sessions(std::string_view text, const Ontology& ontology,
                                     DecodeResult* result, const std::string& file) {
  return with_file(file, [&] {
    json doc = detail::parse_json(text);
    detail::check_header(doc, "todsim-sessions");
    detail::only_keys(doc, {"format", "version", "sessions"}, "");
    const json& sessions = detail::member(doc, "sessions", "");
    detail::require_array(sessions, "/sessions");
    const detail::ActDecoding acts{&ontology, true, result};
    std::vector<Session> out;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      const std::string path = idx("/sessions", i);
      const json& sj = sessions[i];
      detail::require_object(sj, path);
      detail::only_keys(sj, {"id", "goal", "termination", "turns"}, path);
      Session s;
      s.id = detail::get_string(detail::member(sj, "id", path), path + "/id");
      s.goal = detail::goal_from_json(detail::member(sj, "goal", path), path + "/goal");
      check_goal(s.goal, ontology, path + "/goal", false);
      const json& term = detail::member(sj, "termination", path);
      if (!term.is_null()) {
        const std::string name = detail::get_string(term, path + "/termination");
        s.termination = parse_termination(name);
        if (!s.termination) {
          detail::violation(path + "/termination", "unknown termination '" + name + "'");
        }
      }
      const json& turns = detail::member(sj, "turns", path);
      detail::require_array(turns, path + "/turns");
      for (std::size_t t = 0; t < turns.size(); ++t) {
        const std::string tpath = idx(path + "/turns", t);
        Turn turn = detail::turn_from_json(turns[t], tpath, acts);
        if (turn.index != static_cast<int>(t)) {
          detail::violation(tpath + "/index", "turn indices must be consecutive from 0");
        }
        if (!belief_is_valid(turn.belief_state, ontology)) {
          detail::violation(tpath + "/belief", "belief state not valid against the ontology");
        }
        s.turns.push_back(std::move(turn));
      }
      out.push_back(std::move(s));
    }
    return out;
  });
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path.string(), "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
  CorpusPaths p;
  p.ontology = dir / "ontology.json";
  p.database = dir / "database.json";
  p.goals = dir / "goals.json";
  if (std::filesystem::exists(dir / "dialogues.json")) p.dialogues = dir / "dialogues.json";
  return p;
}

LoadedCorpus load_corpus(const CorpusPaths& paths) {
  LoadedCorpus out;
  auto& b = out.bundle;
  b.ontology = decode_ontology(read_file(paths.ontology), paths.ontology.string());
  b.db = decode_database(read_file(paths.database), b.ontology, paths.database.string());
  b.goals = decode_goals(read_file(paths.goals), b.ontology, paths.goals.string());
  if (paths.dialogues) {
    b.dialogues = decode_dialogues(read_file(*paths.dialogues), b.ontology, &out.diagnostics,
                                   paths.dialogues->string());
  }
  return out;
}

LoadedCorpus load_corpus(const std::string& name_or_dir) {
  if (name_or_dir == "toy") return LoadedCorpus{toy_corpus(), {}};
  if (!std::filesystem::is_directory(name_or_dir)) {
    throw CorpusError(name_or_dir, "", "not 'toy' and not a corpus directory");
  }
  return load_corpus(CorpusPaths::in_directory(name_or_dir));
}

void write_corpus(const CorpusBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "ontology.json", encode_ontology(bundle.ontology));
  write_file(dir / "database.json", encode_database(bundle.db));
  write_file(dir / "goals.json", encode_goals(bundle.goals));
  write_file(dir / "dialogues.json", encode_dialogues(bundle.dialogues));
}

}  // namespace todsim
