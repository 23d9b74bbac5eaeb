// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "todsim/corpus.hpp"
#include "todsim/engine.hpp"
#include "todsim/goal_tracker.hpp"
#include "todsim/metrics.hpp"
#include "todsim/rl.hpp"
#include "todsim/scorers.hpp"
#include "todsim/toy.hpp"

using namespace todsim;

namespace {

// Failures inside a criterion are collected, not thrown, so every line prints.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("FAILED " + f);
    if (failed_ > failures_.size()) {
      out += "; " + std::to_string(failed_ - failures_.size()) + " more failures";
    }
    return out;
  }

 private:
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string csv_of(const EvaluationReport& r) {
  std::ostringstream out;
  write_report_csv(out, r.records);
  return out.str();
}

// ---------------------------------------------------------------------------

void combined_score_rows(Checks& c) {
  constexpr double kTol = 0.01;
  struct Row {
    double inform, success, bleu, printed;
  };
  const Row rows[] = {{91.90, 82.80, 19.10, 106.45},
                      {92.00, 79.90, 18.42, 104.37},
                      {94.30, 85.40, 19.47, 109.32}};
  double worst = 0.0;
  for (const auto& r : rows) {
    const double got = combined_score(r.inform, r.success, r.bleu);
    worst = std::max(worst, std::abs(got - r.printed));
    c.expect(std::abs(got - r.printed) <= kTol, fmt("row printed %.2f", r.printed));
  }
  c.note("max |diff| " + fmt("%.4f", worst));
}

class FixedTokenModel final : public TokenModel {
 public:
  explicit FixedTokenModel(std::vector<double> p) : p_(std::move(p)) {}
  double probability(std::span<const std::string> history, const std::string&) const override {
    return p_.at(history.size());
  }

 private:
  std::vector<double> p_;
};

void sentence_score_exactness(Checks& c) {
  constexpr double kUniformTol = 1e-9;
  constexpr double kExampleTol = 1e-4;
  Rng rng(77);
  double worst = 0.0;
  for (std::size_t v : {2u, 4u, 17u, 100u}) {
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < v; ++i) vocab.push_back("w" + std::to_string(i));
    const auto lm = LanguageModel::uniform(vocab);
    const double expected = std::log(static_cast<double>(lm.vocabulary().size()));
    for (int k = 0; k < 50; ++k) {
      std::vector<std::string> tokens(1 + rng.below(12));
      for (auto& t : tokens) t = rng.below(5) == 0 ? "oov" : vocab[rng.below(v)];
      const double got = sentence_score(lm, TokenSequence::make(tokens));
      worst = std::max(worst, std::abs(got - expected));
    }
  }
  c.expect(worst < kUniformTol, "uniform model equals ln V");
  const double example =
      sentence_score(FixedTokenModel({0.5, 0.25}), TokenSequence::make({"x", "y"}));
  c.expect(std::abs(example - 1.0397) < kExampleTol, "two-token example " + fmt("%.6f", example));
  c.note("uniform max err " + fmt("%.2e", worst) + ", example " + fmt("%.4f", example));
}

// sum_i gamma^(n-i) * R * log pi(chosen_i | x_i), recomputed from the parameters.
double objective(const TurnTrace& trace, const PolicyParameters& params, double reward,
                 double gamma) {
  const std::size_t n = trace.tokens.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = action_probabilities(params, trace.tokens[i].features);
    total += std::pow(gamma, static_cast<double>(n - 1 - i)) * reward *
             std::log(p[trace.tokens[i].chosen]);
  }
  return total;
}

void gradient_check(Checks& c) {
  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-4;
  const auto w = position_weights(3, 0.99);
  c.expect(w.size() == 3 && std::abs(w[0] - 0.9801) < 1e-15 && std::abs(w[1] - 0.99) < 1e-15 &&
               w[2] == 1.0,
           "position weights 0.9801, 0.99, 1");

  const Ontology o = toy_ontology();
  Rng rng(101);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int t = 0; t < 100; ++t) {
    const AgentRole role = t % 2 == 0 ? AgentRole::kSimulator : AgentRole::kSystem;
    const FeatureSchema schema(role, o);
    auto params = PolicyParameters::zeros(schema);
    for (double& x : params.weights) x = (rng.uniform() * 2.0 - 1.0) * 0.5;
    std::vector<double> context(schema.context_size());
    for (double& x : context) x = rng.below(3) == 0 ? 1.0 : 0.0;
    context[0] = 1.0;
    Rng sampler(rng.next());
    const TurnTrace trace = sample_turn(params, schema, context, 4, sampler);
    const double reward = 0.5 + rng.uniform();
    const double gamma = 0.9 + 0.1 * rng.uniform();
    const auto grad = turn_gradient(trace, params, reward, gamma);
    for (std::size_t k = 0; k < grad.size(); ++k) {
      const std::size_t f = k / params.vocab_size();
      bool active = false;
      for (const auto& tok : trace.tokens) active = active || tok.features[f] != 0.0;
      if (!active) {
        // Rows of features that were zero at every step carry no gradient.
        c.expect(grad[k] == 0.0, "inactive feature row is zero");
        continue;
      }
      auto plus = params, minus = params;
      plus.weights[k] += kStep;
      minus.weights[k] -= kStep;
      const double num = (objective(trace, plus, reward, gamma) -
                          objective(trace, minus, reward, gamma)) / (2 * kStep);
      const double err =
          std::abs(num - grad[k]) / std::max(1e-6, std::abs(num) + std::abs(grad[k]));
      worst = std::max(worst, err);
      ++checked;
    }
  }
  c.expect(worst < kRelTol, "finite differences");
  c.note("100 traces, " + std::to_string(checked) + " coordinates, max rel err " +
         fmt("%.2e", worst));
}

void closed_loop(Checks& c) {
  const VenueDatabase& db = test::toy_db();
  const auto goals = sample_goals(db, 100, 4242);
  CorpusRun run;
  run.simulator = [] { return std::make_unique<AgendaSimulator>(); };
  run.system = [&db] { return std::make_unique<RuleSystem>(db); };
  run.seed = 1;
  const auto good = run_corpus(run, std::span(goals), db);
  c.expect(good.aggregates.failures == 0, "no failed sessions");
  c.expect(good.aggregates.inform_pct == 100.0, "agenda+rule inform 100%");
  c.expect(good.aggregates.success_pct == 100.0, "agenda+rule success 100%");
  for (const auto& s : good.sessions) {
    const std::size_t items = goal_to_items(s.goal).size();
    c.expect(s.turns.size() <= items + 2, s.id + " within #items + 2 turns");
  }

  run.system = [&db] { return std::make_unique<UniformRandomSystem>(db); };
  const auto random = run_corpus(run, std::span(goals), db);
  c.expect(random.aggregates.success_pct < 10.0, "uniform random success < 10%");
  c.note("agenda+rule inform " + fmt("%.1f", good.aggregates.inform_pct) + "% success " +
         fmt("%.1f", good.aggregates.success_pct) + "%; random success " +
         fmt("%.1f", random.aggregates.success_pct) + "%");
}

void tracker_invariants(Checks& c) {
  const Ontology o = toy_ontology();
  Rng rng(2024);
  std::size_t steps_total = 0;
  for (int k = 0; k < 1000; ++k) {
    const Goal goal = test::random_goal(rng, o, true);
    const std::set<GoalItem> all = goal_to_items(goal);
    GoalState s = GoalState::from_goal(goal);
    const int steps = 1 + static_cast<int>(rng.below(10));
    for (int t = 0; t < steps; ++t, ++steps_total) {
      std::vector<DialogueAct> user = test::random_acts(rng, o, 3);
      std::vector<DialogueAct> sys = test::random_acts(rng, o, 3);
      // Bias towards the goal so items actually get finished.
      for (const auto& item : s.unfinished) {
        if (rng.below(4) != 0) continue;
        if (item.kind == GoalItemKind::kInform) {
          user.push_back(DialogueAct::make(ActType::kInform, item.domain, item.slot, item.value));
        } else if (item.kind == GoalItemKind::kRequest) {
          sys.push_back(DialogueAct::make(ActType::kInform, item.domain, item.slot, "x"));
        } else {
          sys.push_back(DialogueAct::make(ActType::kBook, item.domain, "reference", "r"));
        }
      }
      const auto finished = extract_finished(s, user, sys);
      bool agrees = true;
      for (const auto& item : s.unfinished) {
        agrees = agrees && finished.contains(item) == test::finishes(item, user, sys);
      }
      for (const auto& f : finished) agrees = agrees && s.unfinished.contains(f);
      c.expect(agrees, "finished set matches the rules");

      const GoalState n = update(s, finished);
      c.expect(n.unfinished.size() <= s.unfinished.size() &&
                   std::includes(n.finished.begin(), n.finished.end(), s.finished.begin(),
                                 s.finished.end()),
               "monotonicity");
      std::set<GoalItem> joined = n.finished;
      joined.insert(n.unfinished.begin(), n.unfinished.end());
      bool disjoint = true;
      for (const auto& item : n.finished) disjoint = disjoint && !n.unfinished.contains(item);
      c.expect(joined == all && disjoint, "conservation");
      c.expect(update(n, {}) == n && update(n, extract_finished(n, user, sys)) == n,
               "fixed point");
      s = n;
    }
  }
  c.note("1000 cases, " + std::to_string(steps_total) + " updates");
}

void rl_improvement(Checks& c) {
  constexpr double kGainPp = 20.0;
  constexpr int kSeeds = 5;
  constexpr int kNeeded = 3;
  const VenueDatabase& db = test::toy_db();
  const auto& pool = test::toy().goals;
  const auto sim0 = PolicyParameters::zeros(FeatureSchema(AgentRole::kSimulator, db.ontology()));
  const auto sys0 = PolicyParameters::zeros(FeatureSchema(AgentRole::kSystem, db.ontology()));
  int improved = 0;
  std::string gains;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    RLConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.01;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 0xe7a1);
    const double before = evaluate_success(sim0, sys0, pool, db, cfg, eval_seed);
    try {
      // The freeze contract is enforced after every phase; a violation throws.
      const auto result = train_alternating(sim0, sys0, pool, db, cfg);
      c.expect(result.log.size() == 2 * static_cast<std::size_t>(cfg.epochs),
               "one log row per phase");
      const double after =
          evaluate_success(result.simulator, result.system, pool, db, cfg, eval_seed);
      const double gain = 100.0 * (after - before);
      improved += gain >= kGainPp;
      gains += (gains.empty() ? "" : ", ") + fmt("%+.1f", gain);
    } catch (const Error& e) {
      c.expect(false, "seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  c.expect(improved >= kNeeded, "at least 3 of 5 seeds gain >= 20 pp");
  c.note("gains (pp) " + gains + "; " + std::to_string(improved) + "/5 seeds >= 20 pp");
}

void reward_settings(Checks& c) {
  // RL-Sent: alpha 0.1, sentence score 0.8. RL-Sess: beta 0.1, session score 0.95.
  c.expect(make_reward(true, 0.8, 0.0, 0.1, 0.0, 0.1).total == 1.125, "RL-Sent example 1.125");
  c.expect(make_reward(true, 0.0, 0.95, 0.0, 0.1, 0.1).total == 1.095, "RL-Sess example 1.095");
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const bool success = rng.below(2) == 1;
    const double sent = rng.uniform() * 5.0;
    const double sess = rng.uniform();
    const double alpha = rng.uniform();
    const double beta = rng.uniform();
    const double d = rng.uniform();
    const double base = make_reward(success, sent, sess, alpha, beta, 0.1).total;
    c.expect(make_reward(success, sent + d, sess, alpha, beta, 0.1).total <= base,
             "reward does not grow with sentence score");
    c.expect(make_reward(success, sent, std::min(1.0, sess + d), alpha, beta, 0.1).total >= base,
             "reward does not shrink with session score");
    c.expect(make_reward(true, sent, sess, alpha, beta, 0.1).total >=
                 make_reward(false, sent, sess, alpha, beta, 0.1).total,
             "success never lowers the reward");
  }
  c.note("1000 triples");
}

void scorer_discrimination(Checks& c) {
  constexpr int kShuffleNeeded = 190;  // 95% of 200
  constexpr double kHeldOut = 0.9;
  constexpr int kCorruptNeeded = 95;  // 95% of 100
  const VenueDatabase& db = test::toy_db();
  CorpusRun run;
  run.simulator = [] { return std::make_unique<AgendaSimulator>(1); };
  run.system = [&db] { return std::make_unique<RuleSystem>(db); };
  run.seed = 5;
  const auto sessions = run_corpus(run, std::span(test::toy().goals), db).sessions;

  std::vector<TokenSequence> corpus;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) {
      corpus.push_back(TokenSequence::from_text(t.system_utterance));
      auto tokens = tokenize(t.system_utterance);
      if (tokens.size() >= 3) sentences.push_back(std::move(tokens));
    }
  }
  const LanguageModel lm = train_lm(corpus, 3, 0.1);
  Rng rng(10);
  rng.shuffle(sentences.begin(), sentences.end());
  int worse = 0;
  if (sentences.size() < 200) {
    c.expect(false, "200 templated sentences available");
  } else {
    for (std::size_t i = 0; i < 200; ++i) {
      auto shuffled = sentences[i];
      while (shuffled == sentences[i]) rng.shuffle(shuffled.begin(), shuffled.end());
      worse += sentence_score(lm, TokenSequence::make(shuffled)) >
               sentence_score(lm, TokenSequence::make(sentences[i]));
    }
  }
  c.expect(worse >= kShuffleNeeded, "shuffled ranked worse");

  const auto train = make_pair_samples(std::span(sessions).first(100), 1.0, 1);
  const auto held_out = make_pair_samples(std::span(sessions).subspan(100), 1.0, 2);
  const auto clf = train_session_scorer(train, 1);
  std::size_t correct = 0;
  for (const auto& s : held_out) correct += (clf.confidence(s.left, s.right) >= 0.5) == s.coherent;
  const double acc = static_cast<double>(correct) / static_cast<double>(held_out.size());
  c.expect(acc >= kHeldOut, "held-out accuracy");

  Rng corrupt(19);
  int lower = 0;
  for (std::size_t i = 100; i < 200; ++i) {
    Session s = sessions[i];
    for (auto& t : s.turns) {
      std::size_t j;
      do {
        j = corrupt.below(sessions.size());
      } while (j == i);
      const auto& other = sessions[j].turns;
      t.system_utterance = other[corrupt.below(other.size())].system_utterance;
    }
    lower += session_score(clf, s) < session_score(clf, sessions[i]);
  }
  c.expect(lower >= kCorruptNeeded, "corrupted sessions score lower");
  c.note("shuffled worse " + std::to_string(worse) + "/200, held-out accuracy " +
         fmt("%.4f", acc) + ", corrupted lower " + std::to_string(lower) + "/100");
}

void mode_contracts(Checks& c) {
  const VenueDatabase& db = test::toy_db();
  const auto& dialogues = test::toy().dialogues;

  CorpusRun trad;
  trad.system = [&db] { return std::make_unique<UniformRandomSystem>(db); };
  trad.seed = 3;
  const auto t = run_corpus(trad, std::span(dialogues), db);
  bool verbatim = t.sessions.size() == dialogues.size();
  for (std::size_t i = 0; verbatim && i < dialogues.size(); ++i) {
    const auto& s = t.sessions[i];
    verbatim = s.turns.size() == dialogues[i].turns.size();
    for (std::size_t k = 0; verbatim && k < s.turns.size(); ++k) {
      verbatim = s.turns[k].user_utterance == dialogues[i].turns[k].user_utterance &&
                 s.turns[k].user_acts == dialogues[i].turns[k].user_acts;
    }
  }
  c.expect(verbatim, "traditional user turns byte-identical");
  c.expect(t.mode == EvalMode::kTraditional && t.aggregates.bleu.has_value() &&
               t.aggregates.combined.has_value(),
           "traditional reports BLEU");

  CorpusRun inter;
  inter.simulator = [] { return std::make_unique<AgendaSimulator>(); };
  inter.system = [&db] { return std::make_unique<RuleSystem>(db); };
  const auto i = run_corpus(inter, std::span(test::toy().goals).first(50), db);
  std::ostringstream text;
  write_report_text(text, i);
  c.expect(i.mode == EvalMode::kInteractive && !i.aggregates.bleu && !i.aggregates.combined,
           "interactive has no BLEU");
  c.expect(text.str().find("N/A") != std::string::npos, "report prints N/A");

  // Instrumentation: every simulator request after turn 0 carries exactly the
  // generated turns and a goal state derived from them alone.
  AgendaSimulator sim(1);
  UniformRandomSystem sys(db);
  Rng rng(31);
  std::size_t observed = 0;
  for (int k = 0; k < 50; ++k) {
    std::vector<TurnRequest> requests;
    std::vector<AgentTurnOutput> replies;
    const TurnObserver observer = [&](AgentRole role, const TurnRequest& req,
                                      const AgentTurnOutput& out) {
      if (role == AgentRole::kSimulator) {
        requests.push_back(req);
      } else {
        replies.push_back(out);
      }
    };
    const Goal g = test::random_goal(rng, db.ontology());
    const Session s = run_interactive(sim, sys, g, db, {}, rng.next(), "obs", observer);
    c.expect(requests.size() == s.turns.size(), "one simulator request per turn");
    GoalState expected = GoalState::from_goal(g);
    for (std::size_t turn = 0; turn < requests.size() && turn < s.turns.size(); ++turn) {
      const auto& req = requests[turn];
      bool ok = req.history.size() == turn && req.user_acts.empty() && req.user_utterance.empty() &&
                req.goal_state == expected;
      for (std::size_t h = 0; ok && h < turn; ++h) {
        ok = req.history[h] == s.turns[h] && req.history[h].system_acts == replies[h].acts &&
             req.history[h].system_utterance == replies[h].utterance;
      }
      c.expect(ok, "user turn depends only on generated history");
      expected = update(expected, extract_finished(expected, s.turns[turn].user_acts,
                                                   s.turns[turn].system_acts));
      ++observed;
    }
  }
  c.note("traditional BLEU " + fmt("%.2f", t.aggregates.bleu.value_or(-1)) + ", " +
         std::to_string(observed) + " instrumented user turns");
}

void determinism_round_trips(Checks& c) {
  const VenueDatabase& db = test::toy_db();
  const auto& goals = test::toy().goals;
  CorpusRun run;
  run.simulator = [] { return std::make_unique<AgendaSimulator>(1); };
  run.system = [&db] { return std::make_unique<UniformRandomSystem>(db); };
  run.seed = 11;
  const std::string reference = csv_of(run_corpus(run, std::span(goals), db));
  for (unsigned w : {1u, 2u, 3u, 8u}) {
    run.workers = w;
    c.expect(csv_of(run_corpus(run, std::span(goals), db)) == reference,
             "CSV identical at " + std::to_string(w) + " workers");
  }

  Rng rng(2718);
  for (int k = 0; k < 1000; ++k) {
    const Message m = test::random_message(rng);
    const std::string line = encode_message(m);
    bool ok = line.find('\n') == std::string::npos;
    try {
      ok = ok && decode_message(line) == m && encode_message(decode_message(line)) == line;
    } catch (const Error&) {
      ok = false;
    }
    c.expect(ok, "protocol round-trip: " + line.substr(0, 80));
  }

  const Ontology o = toy_ontology();
  Rng crng(1234);
  for (int k = 0; k < 1000; ++k) {
    bool ok = false;
    try {
      switch (k % 3) {
        case 0: {
          const std::vector<Goal> gs = {test::random_goal(crng, o)};
          ok = decode_goals(encode_goals(gs), o) == gs;
          break;
        }
        case 1: {
          const std::vector<AnnotatedDialogue> ds = {test::random_dialogue(crng, o, "d")};
          DecodeResult diag;
          ok = decode_dialogues(encode_dialogues(ds), o, &diag) == ds && diag.warnings == 0;
          break;
        }
        default: {
          const std::vector<Session> ss = {test::random_session(crng, o, "s")};
          ok = decode_sessions(encode_sessions(ss), o) == ss;
          break;
        }
      }
    } catch (const Error&) {
      ok = false;
    }
    c.expect(ok, "corpus record round-trip");
  }
  c.note("workers 1/2/3/8, 1000 messages, 1000 corpus records");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<void(Checks&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "combined-score arithmetic", 1, combined_score_rows},
      {2, "sentence-score exactness", 1, sentence_score_exactness},
      {3, "policy-gradient check", 10, gradient_check},
      {4, "closed-loop sanity", 30, closed_loop},
      {5, "goal-tracker properties", 30, tracker_invariants},
      {6, "RL improvement", 600, rl_improvement},
      {7, "reward settings", 5, reward_settings},
      {8, "scorer discrimination", 60, scorer_discrimination},
      {9, "mode contracts", 30, mode_contracts},
      {10, "determinism and round-trips", 60, determinism_round_trips},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.expect(secs < cr.budget_seconds,
                  "runtime budget " + fmt("%.0f s", cr.budget_seconds));
    const bool ok = checks.ok();
    failed += !ok;
    std::printf("%s %2d %-28s %8.2f s  %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                checks.detail().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
