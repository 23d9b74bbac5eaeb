#include "todsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "todsim/metrics.hpp"
#include "todsim/rng.hpp"

namespace todsim {

namespace {

void require_valid_goal(const Goal& goal, const Ontology& ontology) {
  auto violations = validate_goal(goal, ontology);
  if (!violations.empty()) {
    throw PreconditionError("invalid goal: " + violations.front().rule + " (" +
                            violations.front().detail + ")");
  }
}

std::string role_name(AgentRole role) { return std::string(to_string(role)); }

// Calls the agent and checks its reply; failures become SessionError carrying
// the turns completed so far.
AgentTurnOutput call_agent(Agent& agent, const TurnRequest& req, const Session& partial,
                           const VenueDatabase& db, const TurnObserver& observer) {
  AgentTurnOutput out;
  try {
    out = agent.respond(req);
  } catch (const AgentUnresponsive& e) {
    Session s = partial;
    s.termination = Termination::kMaxTurnsExceeded;
    throw SessionError(role_name(agent.role()) + " unresponsive: " + e.what(), std::move(s));
  } catch (const std::exception& e) {
    throw SessionError(role_name(agent.role()) + " failed: " + e.what(), partial);
  }
  for (const auto& act : out.acts) {
    if (auto v = act_violation(act)) {
      throw SessionError(role_name(agent.role()) + " returned a malformed act: " + *v, partial);
    }
  }
  if (out.belief_state && !belief_is_valid(*out.belief_state, db.ontology())) {
    throw SessionError(role_name(agent.role()) + " returned an invalid belief state", partial);
  }
  if (observer) observer(agent.role(), req, out);
  return out;
}

}  // namespace

Session run_interactive(Agent& simulator, Agent& system, const Goal& goal,
                        const VenueDatabase& db, const TerminationConfig& cfg,
                        std::uint64_t seed, const std::string& session_id,
                        const TurnObserver& observer) {
  if (cfg.max_turns < 1) throw ConfigError("max_turns must be >= 1");
  require_valid_goal(goal, db.ontology());

  Session session{session_id, goal, {}, std::nullopt};
  GoalState state = GoalState::from_goal(goal);
  BeliefState belief;
  for (int t = 0;; ++t) {
    TurnRequest ureq;
    ureq.session_id = session_id;
    ureq.turn_index = t;
    ureq.goal_state = state;
    ureq.history = session.turns;
    ureq.seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(t));
    AgentTurnOutput user = call_agent(simulator, ureq, session, db, observer);

    TurnRequest sreq;
    sreq.session_id = session_id;
    sreq.turn_index = t;
    sreq.history = std::move(ureq.history);
    sreq.user_utterance = user.utterance;
    sreq.user_acts = user.acts;
    sreq.belief = belief;
    sreq.seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1);
    AgentTurnOutput sys = call_agent(system, sreq, session, db, observer);
    if (sys.belief_state) belief = std::move(*sys.belief_state);

    // Termination is judged on the state the simulator acted on, so the
    // simulator's closing turn is part of the session.
    GoalState next = update(state, extract_finished(state, user.acts, sys.acts));
    auto reason = should_terminate(state, t, user.acts, sys.acts, cfg);
    session.turns.push_back(Turn{t, std::move(user.utterance), std::move(user.acts),
                                 std::move(sys.utterance), std::move(sys.acts), belief});
    state = std::move(next);
    if (reason) {
      session.termination = reason;
      return session;
    }
  }
}

Session run_traditional(Agent& system, const AnnotatedDialogue& annotated,
                        const VenueDatabase& db, std::uint64_t seed,
                        const TurnObserver& observer) {
  if (annotated.turns.empty()) throw PreconditionError("empty dialogue");
  require_valid_goal(annotated.goal, db.ontology());

  Session session{annotated.id, annotated.goal, {}, std::nullopt};
  BeliefState belief;
  for (std::size_t i = 0; i < annotated.turns.size(); ++i) {
    const auto& at = annotated.turns[i];
    const int t = static_cast<int>(i);
    TurnRequest req;
    req.session_id = annotated.id;
    req.turn_index = t;
    req.history = session.turns;
    req.user_utterance = at.user_utterance;
    req.user_acts = at.user_acts;
    req.belief = belief;
    req.seed = derive_seed(seed, i);
    AgentTurnOutput sys = call_agent(system, req, session, db, observer);
    if (sys.belief_state) belief = std::move(*sys.belief_state);
    session.turns.push_back(Turn{t, at.user_utterance, at.user_acts, std::move(sys.utterance),
                                 std::move(sys.acts), belief});
  }
  session.termination = Termination::kReplayExhausted;
  return session;
}

OraclePlaybackSystem::OraclePlaybackSystem(std::span<const AnnotatedDialogue> dialogues) {
  for (const auto& d : dialogues) {
    if (!by_id_.emplace(d.id, &d).second) {
      throw InvalidArgument("duplicate dialogue id '" + d.id + "'");
    }
  }
}

AgentTurnOutput OraclePlaybackSystem::respond(const TurnRequest& request) {
  auto it = by_id_.find(request.session_id);
  if (it == by_id_.end()) throw Error("no annotated dialogue '" + request.session_id + "'");
  const auto& turns = it->second->turns;
  if (request.turn_index < 0 || static_cast<std::size_t>(request.turn_index) >= turns.size()) {
    throw Error("annotated dialogue '" + request.session_id + "' has no turn " +
                std::to_string(request.turn_index));
  }
  const auto& at = turns[static_cast<std::size_t>(request.turn_index)];
  AgentTurnOutput out;
  out.acts = at.system_acts;
  out.utterance = at.system_utterance;
  out.belief_state = update_belief(request.belief, request.user_acts);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::kInteractive ? "interactive" : "traditional";
}

ReportAggregates aggregate(std::span<const SessionRecord> records, std::optional<double> bleu) {
  ReportAggregates a;
  std::size_t inform = 0;
  std::size_t success = 0;
  double sent_sum = 0.0;
  double sess_sum = 0.0;
  std::size_t sent_n = 0;
  std::size_t sess_n = 0;
  for (const auto& r : records) {
    if (r.failed) {
      ++a.failures;
      continue;
    }
    ++a.sessions;
    inform += r.inform ? 1 : 0;
    success += r.success ? 1 : 0;
    if (r.sent_score) {
      sent_sum += *r.sent_score;
      ++sent_n;
    }
    if (r.sess_score) {
      sess_sum += *r.sess_score;
      ++sess_n;
    }
  }
  if (a.sessions > 0) {
    a.inform_pct = 100.0 * static_cast<double>(inform) / static_cast<double>(a.sessions);
    a.success_pct = 100.0 * static_cast<double>(success) / static_cast<double>(a.sessions);
  }
  if (sent_n > 0) a.mean_sent = sent_sum / static_cast<double>(sent_n);
  if (sess_n > 0) a.mean_sess = sess_sum / static_cast<double>(sess_n);
  a.bleu = bleu;
  if (bleu) a.combined = combined_score(a.inform_pct, a.success_pct, *bleu);
  return a;
}

double session_sentence_score(const SentenceScorer& scorer, const Session& session) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& turn : session.turns) {
    if (tokenize(turn.system_utterance).empty()) continue;
    sum += scorer.score(turn.system_utterance);
    ++n;
  }
  if (n == 0) throw PreconditionError("session has no scorable system utterance");
  return sum / static_cast<double>(n);
}

namespace {

struct Outcome {
  SessionRecord record;
  std::optional<Session> session;
};

SessionRecord score_session(const Session& s, const VenueDatabase& db, const CorpusRun& run) {
  SessionRecord r;
  r.session_id = s.id;
  const MetricResult m = inform_success(s, db);
  r.inform = m.inform;
  r.success = m.success;
  r.turns = static_cast<int>(s.turns.size());
  r.termination = s.termination;
  if (run.sentence_scorer != nullptr) {
    try {
      r.sent_score = session_sentence_score(*run.sentence_scorer, s);
    } catch (const PreconditionError&) {
      // No scorable utterance: leave the score absent.
    }
  }
  if (run.pair_scorer != nullptr && !s.turns.empty()) {
    r.sess_score = session_score(*run.pair_scorer, s);
  }
  return r;
}

// Runs fn(i, agents) for every i on a pool of workers; each worker owns the
// agents its factories build. Outcomes land at their input index.
template <typename Fn>
std::vector<Outcome> run_pool(std::size_t n, const CorpusRun& run, bool needs_simulator, Fn fn) {
  std::vector<Outcome> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    try {
      std::unique_ptr<Agent> sim = needs_simulator ? run.simulator() : nullptr;
      std::unique_ptr<Agent> sys = run.system();
      if ((needs_simulator && !sim) || !sys) throw ConfigError("agent factory returned null");
      for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i, sim.get(), *sys);
    } catch (...) {
      std::lock_guard lock(fatal_mu);
      if (!fatal) fatal = std::current_exception();
      next = n;
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(run.workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

Outcome failed_outcome(const std::string& id, const SessionError& e) {
  Outcome o;
  o.record.session_id = id;
  o.record.failed = true;
  o.record.error = e.what();
  o.record.turns = static_cast<int>(e.partial().turns.size());
  return o;
}

EvaluationReport assemble(EvalMode mode, std::vector<Outcome> outcomes,
                          std::optional<double> bleu) {
  EvaluationReport report;
  report.mode = mode;
  for (auto& o : outcomes) {
    report.records.push_back(std::move(o.record));
    if (o.session) report.sessions.push_back(std::move(*o.session));
  }
  report.aggregates = aggregate(report.records, bleu);
  return report;
}

std::string session_id_for(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "session-%04zu", i);
  return buf;
}

}  // namespace

EvaluationReport run_corpus(const CorpusRun& run, std::span<const Goal> goals,
                            const VenueDatabase& db) {
  if (goals.empty()) throw PreconditionError("run_corpus: no goals");
  if (!run.simulator || !run.system) throw ConfigError("run_corpus: missing agent factory");
  auto outcomes = run_pool(goals.size(), run, true, [&](std::size_t i, Agent* sim, Agent& sys) {
    const std::string id = session_id_for(i);
    try {
      Session s =
          run_interactive(*sim, sys, goals[i], db, run.termination, derive_seed(run.seed, i), id);
      Outcome o;
      o.record = score_session(s, db, run);
      o.session = std::move(s);
      return o;
    } catch (const SessionError& e) {
      return failed_outcome(id, e);
    }
  });
  return assemble(EvalMode::kInteractive, std::move(outcomes), std::nullopt);
}

EvaluationReport run_corpus(const CorpusRun& run, std::span<const AnnotatedDialogue> dialogues,
                            const VenueDatabase& db) {
  if (dialogues.empty()) throw PreconditionError("run_corpus: no dialogues");
  if (!run.system) throw ConfigError("run_corpus: missing system factory");
  auto outcomes =
      run_pool(dialogues.size(), run, false, [&](std::size_t i, Agent*, Agent& sys) {
        try {
          Session s = run_traditional(sys, dialogues[i], db, derive_seed(run.seed, i));
          Outcome o;
          o.record = score_session(s, db, run);
          o.session = std::move(s);
          return o;
        } catch (const SessionError& e) {
          return failed_outcome(dialogues[i].id, e);
        }
      });

  std::vector<std::vector<std::string>> hyps;
  std::vector<std::vector<std::string>> refs;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].session) continue;
    const auto& turns = outcomes[i].session->turns;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      hyps.push_back(tokenize(turns[t].system_utterance));
      refs.push_back(tokenize(dialogues[i].turns[t].system_utterance));
    }
  }
  std::optional<double> bleu;
  if (!hyps.empty()) bleu = corpus_bleu(hyps, refs);
  return assemble(EvalMode::kTraditional, std::move(outcomes), bleu);
}

// ---------------------------------------------------------------------------
// Report I/O

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int digits = 6) {
  return v ? fixed(*v, digits) : std::string("NA");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::optional<double> parse_opt_double(const std::string& cell, int line_no) {
  if (cell == "NA") return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("report line " + std::to_string(line_no) + ": bad number '" + cell +
                          "'");
  }
}

bool parse_bit(const std::string& cell, int line_no) {
  if (cell == "0") return false;
  if (cell == "1") return true;
  throw InvalidArgument("report line " + std::to_string(line_no) + ": expected 0 or 1, got '" +
                        cell + "'");
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const SessionRecord> records) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : records) {
    if (r.session_id.find_first_of(",\n\r") != std::string::npos) {
      throw InvalidArgument("session id '" + r.session_id + "' cannot be written to CSV");
    }
    out << r.session_id << ',';
    if (r.failed) {
      out << "NA,NA," << r.turns << ",failed,NA,NA\n";
      continue;
    }
    out << (r.inform ? 1 : 0) << ',' << (r.success ? 1 : 0) << ',' << r.turns << ','
        << (r.termination ? to_string(*r.termination) : std::string_view("NA")) << ','
        << opt_fixed(r.sent_score) << ',' << opt_fixed(r.sess_score) << '\n';
  }
}

std::vector<SessionRecord> read_report_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line.empty()) throw InvalidArgument("empty report");
  if (line != kReportCsvHeader) throw InvalidArgument("report line 1: unexpected header");
  std::vector<SessionRecord> records;
  while (next()) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 7) {
      throw InvalidArgument("report line " + std::to_string(line_no) + ": expected 7 fields");
    }
    SessionRecord r;
    r.session_id = cells[0];
    try {
      std::size_t used = 0;
      r.turns = std::stoi(cells[3], &used);
      if (used != cells[3].size() || r.turns < 0) throw std::invalid_argument(cells[3]);
    } catch (const std::exception&) {
      throw InvalidArgument("report line " + std::to_string(line_no) + ": bad turn count");
    }
    if (cells[4] == "failed") {
      r.failed = true;
    } else {
      r.inform = parse_bit(cells[1], line_no);
      r.success = parse_bit(cells[2], line_no);
      if (cells[4] != "NA") {
        r.termination = parse_termination(cells[4]);
        if (!r.termination) {
          throw InvalidArgument("report line " + std::to_string(line_no) +
                                ": unknown termination '" + cells[4] + "'");
        }
      }
      r.sent_score = parse_opt_double(cells[5], line_no);
      r.sess_score = parse_opt_double(cells[6], line_no);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw InvalidArgument("empty report");
  return records;
}

void write_report_text(std::ostream& out, const EvaluationReport& report) {
  const auto& a = report.aggregates;
  char buf[160];
  out << "mode: " << to_string(report.mode) << '\n';
  out << "sessions: " << a.sessions << " completed, " << a.failures << " failed\n\n";
  auto row = [&](const char* name, const std::string& value) {
    std::snprintf(buf, sizeof buf, "  %-12s %10s\n", name, value.c_str());
    out << buf;
  };
  row("Inform", fixed(a.inform_pct, 2));
  row("Success", fixed(a.success_pct, 2));
  row("BLEU", a.bleu ? fixed(*a.bleu, 2) : "N/A");
  row("Comb. Score", a.combined ? fixed(*a.combined, 2) : "N/A");
  row("Sent-Score", a.mean_sent ? fixed(*a.mean_sent, 4) : "N/A");
  row("Sess-Score", a.mean_sess ? fixed(*a.mean_sess, 4) : "N/A");
  out << '\n';

  std::size_t id_width = 10;
  for (const auto& r : report.records) id_width = std::max(id_width, r.session_id.size());
  std::snprintf(buf, sizeof buf, "%-*s %6s %7s %5s  %-18s %10s %10s\n", static_cast<int>(id_width),
                "session_id", "inform", "success", "turns", "termination", "sent", "sess");
  out << buf;
  for (const auto& r : report.records) {
    const std::string term =
        r.failed ? "failed" : (r.termination ? std::string(to_string(*r.termination)) : "NA");
    std::snprintf(buf, sizeof buf, "%-*s %6s %7s %5d  %-18s %10s %10s\n",
                  static_cast<int>(id_width), r.session_id.c_str(),
                  r.failed ? "NA" : (r.inform ? "1" : "0"),
                  r.failed ? "NA" : (r.success ? "1" : "0"), r.turns, term.c_str(),
                  opt_fixed(r.sent_score, 4).c_str(), opt_fixed(r.sess_score, 4).c_str());
    out << buf;
  }
}

void write_histogram_svg(std::ostream& out, std::span<const double> values,
                         const std::string& title, int bins) {
  if (bins < 1) throw PreconditionError("histogram needs at least one bin");
  constexpr int kWidth = 640;
  constexpr int kHeight = 360;
  constexpr int kMargin = 40;
  double lo = 0.0;
  double hi = 1.0;
  if (!values.empty()) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
  const double bar_w = static_cast<double>(kWidth - 2 * kMargin) / bins;
  const double plot_h = kHeight - 2 * kMargin;

  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '&': escaped += "&amp;"; break;
      default: escaped += c;
    }
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"14\">" << escaped << "</text>\n";
  for (int b = 0; b < bins; ++b) {
    const double h = plot_h * counts[static_cast<std::size_t>(b)] / peak;
    out << "<rect x=\"" << fixed(kMargin + b * bar_w, 2) << "\" y=\""
        << fixed(kHeight - kMargin - h, 2) << "\" width=\"" << fixed(bar_w - 1.0, 2)
        << "\" height=\"" << fixed(h, 2) << "\" fill=\"steelblue\"/>\n";
  }
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(lo, 3) << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(hi, 3)
      << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << peak
      << "</text>\n";
  out << "</svg>\n";
}

}  // namespace todsim
