#pragma once

// Template realization of act lists into utterances, and its inverse.
//
// Each act becomes one clause; clauses are joined by a single space. Within
// the toy ontology distinct act lists give distinct utterances, so the parser
// recovers the act list exactly.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "todsim/domain.hpp"

namespace todsim {

enum class Speaker : std::uint8_t { kUser, kSystem };

std::string_view to_string(Speaker s);

// Utterance realized for an empty act list.
inline constexpr std::string_view kEmptyUtterance = "ok.";

std::string realize(Speaker speaker, std::span<const DialogueAct> acts);

// Inverse of realize() for one speaker. nullopt when any part of the text
// matches no template.
std::optional<std::vector<DialogueAct>> parse_utterance(Speaker speaker, std::string_view text);

struct ParsedClause {
  Speaker speaker;
  DialogueAct act;
};

// Parse trying both speakers' templates clause by clause.
std::optional<std::vector<ParsedClause>> parse_any(std::string_view text);

}  // namespace todsim
