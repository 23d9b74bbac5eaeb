#pragma once

// Built-in toy corpus: restaurants and hotels, enough to run every component
// without external data.

#include <cstdint>
#include <span>
#include <vector>

#include "todsim/corpus.hpp"
#include "todsim/domain.hpp"
#include "todsim/engine.hpp"

namespace todsim {

Ontology toy_ontology();
VenueDatabase toy_database();

struct GoalSampling {
  int max_domains = 2;
  int min_informable = 1;
  int max_informable = 3;
  int max_requestable = 2;
  double booking_probability = 0.3;
};

// Each domain goal copies constraints from one database entity, so every
// sampled goal is satisfiable. Deterministic given the seed.
std::vector<Goal> sample_goals(const VenueDatabase& db, std::size_t n, std::uint64_t seed,
                               const GoalSampling& opts = {});

// Annotations produced by an agenda simulator (one act per turn) talking to
// the rule system; ids are "<prefix>-<index>".
std::vector<AnnotatedDialogue> annotate_goals(std::span<const Goal> goals, const VenueDatabase& db,
                                              std::uint64_t seed,
                                              const std::string& id_prefix = "dialogue");

AnnotatedDialogue to_annotated(const Session& session);

inline constexpr std::size_t kToyGoalCount = 200;
inline constexpr std::size_t kToyDialogueCount = 100;
inline constexpr std::uint64_t kToySeed = 20230501;

// Fixed toy corpus: kToyGoalCount goals, the first kToyDialogueCount of
// which are annotated as dialogues.
CorpusBundle toy_corpus();

}  // namespace todsim
