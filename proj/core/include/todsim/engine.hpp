#pragma once

// Dialogue drivers. Interactive mode lets a simulator and a system talk until
// the goal tracker ends the session; traditional mode replays annotated user
// turns against a system regardless of what it answers.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "todsim/agents.hpp"
#include "todsim/domain.hpp"
#include "todsim/errors.hpp"
#include "todsim/goal_tracker.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

struct AnnotatedTurn {
  std::string user_utterance;
  std::vector<DialogueAct> user_acts;
  std::string system_utterance;
  std::vector<DialogueAct> system_acts;

  bool operator==(const AnnotatedTurn&) const = default;
};

struct AnnotatedDialogue {
  std::string id;
  Goal goal;
  std::vector<AnnotatedTurn> turns;

  bool operator==(const AnnotatedDialogue&) const = default;
};

// An agent failed mid-session. Carries everything completed before the
// failure; `partial.termination` is max_turns_exceeded when the agent timed
// out, unset otherwise.
class SessionError : public Error {
 public:
  SessionError(const std::string& what, Session partial)
      : Error(what), partial_(std::move(partial)) {}
  const Session& partial() const { return partial_; }

 private:
  Session partial_;
};

// Sees every agent call: which side, the request it got and what it returned.
using TurnObserver =
    std::function<void(AgentRole, const TurnRequest&, const AgentTurnOutput&)>;

// Per-turn agent seeds: simulator derive_seed(seed, 2t), system 2t + 1.
// Throws PreconditionError for a goal invalid against db.ontology() and
// SessionError when an agent throws or returns a malformed act.
Session run_interactive(Agent& simulator, Agent& system, const Goal& goal,
                        const VenueDatabase& db, const TerminationConfig& cfg,
                        std::uint64_t seed, const std::string& session_id = {},
                        const TurnObserver& observer = {});

// Throws PreconditionError("empty dialogue") for a dialogue without turns.
Session run_traditional(Agent& system, const AnnotatedDialogue& annotated,
                        const VenueDatabase& db, std::uint64_t seed = 0,
                        const TurnObserver& observer = {});

// Replays the annotated system side of dialogues looked up by session id.
class OraclePlaybackSystem final : public Agent {
 public:
  explicit OraclePlaybackSystem(std::span<const AnnotatedDialogue> dialogues);
  AgentRole role() const override { return AgentRole::kSystem; }
  AgentTurnOutput respond(const TurnRequest& request) override;

 private:
  std::map<std::string, const AnnotatedDialogue*, std::less<>> by_id_;
};

// ---------------------------------------------------------------------------
// Corpus runs and reports

enum class EvalMode : std::uint8_t { kInteractive, kTraditional };

std::string_view to_string(EvalMode mode);

struct SessionRecord {
  std::string session_id;
  bool failed = false;
  std::string error;  // failed sessions only
  bool inform = false;
  bool success = false;
  int turns = 0;
  std::optional<Termination> termination;
  std::optional<double> sent_score;
  std::optional<double> sess_score;

  bool operator==(const SessionRecord&) const = default;
};

struct ReportAggregates {
  std::size_t sessions = 0;  // completed sessions only
  std::size_t failures = 0;
  double inform_pct = 0.0;
  double success_pct = 0.0;
  std::optional<double> bleu;      // traditional mode only
  std::optional<double> combined;  // needs bleu
  std::optional<double> mean_sent;
  std::optional<double> mean_sess;

  bool operator==(const ReportAggregates&) const = default;
};

struct EvaluationReport {
  EvalMode mode = EvalMode::kInteractive;
  std::vector<SessionRecord> records;  // input order
  ReportAggregates aggregates;
  std::vector<Session> sessions;  // completed sessions, input order
};

// Means and percentages over non-failed records. Scores are averaged over the
// records that have them; absent when none do.
ReportAggregates aggregate(std::span<const SessionRecord> records, std::optional<double> bleu);

// Mean sentence score over the session's system utterances that contain at
// least one token. Throws PreconditionError when there are none.
double session_sentence_score(const SentenceScorer& scorer, const Session& session);

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

struct CorpusRun {
  AgentFactory simulator;  // interactive mode only
  AgentFactory system;
  TerminationConfig termination;
  const SentenceScorer* sentence_scorer = nullptr;
  const PairScorer* pair_scorer = nullptr;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

// Session i runs with seed derive_seed(run.seed, i) and id "session-<i>"
// (interactive) or the dialogue id (traditional). Each worker builds its own
// agents. Results do not depend on the worker count. Throws PreconditionError
// on empty input.
EvaluationReport run_corpus(const CorpusRun& run, std::span<const Goal> goals,
                            const VenueDatabase& db);
EvaluationReport run_corpus(const CorpusRun& run, std::span<const AnnotatedDialogue> dialogues,
                            const VenueDatabase& db);

inline constexpr std::string_view kReportCsvHeader =
    "session_id,inform,success,turns,termination,sent_score,sess_score";

// Missing values are written as NA; failed sessions have termination "failed".
void write_report_csv(std::ostream& out, std::span<const SessionRecord> records);
// Throws InvalidArgument on a malformed file or one with no records
// ("empty report").
std::vector<SessionRecord> read_report_csv(std::istream& in);

void write_report_text(std::ostream& out, const EvaluationReport& report);

// Histogram of the given values as a standalone SVG document.
void write_histogram_svg(std::ostream& out, std::span<const double> values,
                         const std::string& title, int bins = 20);

}  // namespace todsim
