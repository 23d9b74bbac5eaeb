#pragma once

// Resolution of agent and scorer specs into live objects.
//
// Simulator specs: "agenda", "agenda:<acts per turn>", "policy:<file>".
// System specs: "rule", "random", "oracle" (replays annotated system turns),
// "policy:<file>". Either role also accepts "exec:<cmd>" and
// "tcp:<host>:<port>". Sentence scorers: "lm:<file>" or an endpoint; pair
// scorers: "clf:<file>" or an endpoint.

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "todsim/corpus.hpp"
#include "todsim/engine.hpp"
#include "todsim/protocol.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

bool is_endpoint(std::string_view spec);

// The factory keeps a reference to `corpus`; policy files are read here, once.
// Throws ConfigError for an unknown spec or a policy that does not fit the
// corpus ontology.
AgentFactory make_agent_factory(AgentRole role, const std::string& spec,
                                const CorpusBundle& corpus,
                                std::chrono::milliseconds timeout = kDefaultProtocolTimeout,
                                int max_tokens = kDefaultMaxTokens);

std::unique_ptr<SentenceScorer> load_sentence_scorer(
    const std::string& spec, std::chrono::milliseconds timeout = kDefaultProtocolTimeout);
std::unique_ptr<PairScorer> load_pair_scorer(
    const std::string& spec, std::chrono::milliseconds timeout = kDefaultProtocolTimeout);

// Sentence scorer that owns its language model.
class OwnedLmScorer final : public SentenceScorer {
 public:
  explicit OwnedLmScorer(LanguageModel lm) : lm_(std::move(lm)), scorer_(lm_) {}
  OwnedLmScorer(const OwnedLmScorer&) = delete;
  OwnedLmScorer& operator=(const OwnedLmScorer&) = delete;
  double score(std::string_view text) const override { return scorer_.score(text); }
  const LanguageModel& model() const { return lm_; }

 private:
  LanguageModel lm_;
  LmSentenceScorer scorer_;
};

// Sessions whose turns replay annotated dialogues verbatim, for scoring a
// reference corpus.
std::vector<Session> annotated_sessions(std::span<const AnnotatedDialogue> dialogues);

}  // namespace todsim
