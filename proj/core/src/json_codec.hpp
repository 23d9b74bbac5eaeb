#pragma once

// JSON forms of the core types, shared by the corpus files and the wire
// protocol. Decoders throw SchemaViolation with a JSON pointer to the fault.

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

#include <string>
#include <vector>

#include "todsim/corpus.hpp"
#include "todsim/domain.hpp"

namespace todsim::detail {

using json = nlohmann::json;

struct SchemaViolation {
  std::string path;
  std::string rule;
};

[[noreturn]] void violation(const std::string& path, const std::string& rule);

// Canonical text: sorted keys, two-space indent, no ASCII escaping.
std::string dump_canonical(const json& j);
// Single line, for the wire protocol.
std::string dump_line(const json& j);
// Throws SchemaViolation at path "" on a syntax error.
json parse_json(std::string_view text);

const json& member(const json& obj, const std::string& key, const std::string& path);
const json* optional_member(const json& obj, const std::string& key);
std::string get_string(const json& j, const std::string& path);
bool get_bool(const json& j, const std::string& path);
std::int64_t get_int(const json& j, const std::string& path);
std::uint64_t get_uint(const json& j, const std::string& path);
double get_number(const json& j, const std::string& path);
void require_object(const json& j, const std::string& path);
void require_array(const json& j, const std::string& path);
// Rejects members not listed in `allowed`.
void only_keys(const json& obj, std::initializer_list<const char*> allowed,
               const std::string& path);
// Checks {"format": ..., "version": 1}.
void check_header(const json& doc, const std::string& format);
json header(const std::string& format);

struct ActDecoding {
  const Ontology* ontology = nullptr;  // validate against it when set
  bool allow_foreign = false;          // map or drop unknown act names
  DecodeResult* result = nullptr;      // receives warnings
};

json act_to_json(const DialogueAct& act);
// nullopt when a foreign act is dropped.
std::optional<DialogueAct> act_from_json(const json& j, const std::string& path,
                                         const ActDecoding& opts);
json acts_to_json(const std::vector<DialogueAct>& acts);
std::vector<DialogueAct> acts_from_json(const json& j, const std::string& path,
                                        const ActDecoding& opts);

json goal_to_json(const Goal& goal);
Goal goal_from_json(const json& j, const std::string& path);

json item_to_json(const GoalItem& item);
GoalItem item_from_json(const json& j, const std::string& path);
json goal_state_to_json(const GoalState& state);
GoalState goal_state_from_json(const json& j, const std::string& path);

json belief_to_json(const BeliefState& belief);
BeliefState belief_from_json(const json& j, const std::string& path);

json turn_to_json(const Turn& turn);
Turn turn_from_json(const json& j, const std::string& path, const ActDecoding& opts);

}  // namespace todsim::detail
