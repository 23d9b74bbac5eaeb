#include <benchmark/benchmark.h>

#include <algorithm>

#include "todsim/agents.hpp"
#include "todsim/engine.hpp"
#include "todsim/metrics.hpp"
#include "todsim/policy.hpp"
#include "todsim/protocol.hpp"
#include "todsim/rl.hpp"
#include "todsim/scorers.hpp"
#include "todsim/toy.hpp"

using namespace todsim;

namespace {

const CorpusBundle& toy() {
  static const CorpusBundle bundle = toy_corpus();
  return bundle;
}

void BM_InteractiveSession(benchmark::State& state) {
  const auto& bundle = toy();
  AgendaSimulator sim;
  RuleSystem sys(bundle.db);
  std::size_t i = 0;
  for (auto _ : state) {
    const Goal& g = bundle.goals[i++ % bundle.goals.size()];
    benchmark::DoNotOptimize(run_interactive(sim, sys, g, bundle.db, {}, i));
  }
}
BENCHMARK(BM_InteractiveSession);

void BM_CorpusRun(benchmark::State& state) {
  const auto& bundle = toy();
  const VenueDatabase* db = &bundle.db;
  CorpusRun run;
  run.simulator = [] { return std::make_unique<AgendaSimulator>(); };
  run.system = [db] { return std::make_unique<RuleSystem>(*db); };
  run.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_corpus(run, std::span(bundle.goals), *db));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bundle.goals.size()));
}
BENCHMARK(BM_CorpusRun)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_PolicyEpisode(benchmark::State& state) {
  const auto& bundle = toy();
  const auto sim = PolicyParameters::zeros(FeatureSchema(AgentRole::kSimulator, bundle.ontology));
  const auto sys = PolicyParameters::zeros(FeatureSchema(AgentRole::kSystem, bundle.ontology));
  RLConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(sim, sys, bundle.goals[seed % bundle.goals.size()],
                                         bundle.db, cfg, seed));
    ++seed;
  }
}
BENCHMARK(BM_PolicyEpisode);

std::vector<std::vector<std::string>> system_turns() {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : toy().dialogues) {
    for (const auto& t : d.turns) out.push_back(tokenize(t.system_utterance));
  }
  return out;
}

void BM_CorpusBleu(benchmark::State& state) {
  const auto refs = system_turns();
  auto hyps = refs;
  std::rotate(hyps.begin(), hyps.begin() + 1, hyps.end());
  for (auto _ : state) benchmark::DoNotOptimize(corpus_bleu(hyps, refs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(refs.size()));
}
BENCHMARK(BM_CorpusBleu);

void BM_SentenceScore(benchmark::State& state) {
  std::vector<TokenSequence> corpus;
  for (auto& t : system_turns()) {
    if (!t.empty()) corpus.push_back(TokenSequence::make(std::move(t)));
  }
  const LanguageModel lm = train_lm(corpus, 3, 0.1);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sentence_score(lm, corpus[i++ % corpus.size()]));
}
BENCHMARK(BM_SentenceScore);

void BM_SessionScore(benchmark::State& state) {
  const auto sessions = [] {
    const VenueDatabase* db = &toy().db;
    CorpusRun run;
    run.simulator = [] { return std::make_unique<AgendaSimulator>(1); };
    run.system = [db] { return std::make_unique<RuleSystem>(*db); };
    return run_corpus(run, std::span(toy().goals), *db).sessions;
  }();
  const auto clf = train_session_scorer(make_pair_samples(sessions, 1.0, 1), 1);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(session_score(clf, sessions[i++ % sessions.size()]));
}
BENCHMARK(BM_SessionScore);

TurnRequestMsg sample_request() {
  const auto& bundle = toy();
  AgendaSimulator sim;
  RuleSystem sys(bundle.db);
  const Session s = run_interactive(sim, sys, bundle.goals.front(), bundle.db, {}, 1);
  TurnRequest r;
  r.session_id = s.id;
  r.turn_index = static_cast<int>(s.turns.size());
  r.history = s.turns;
  r.goal_state = GoalState::from_goal(s.goal);
  r.belief = s.turns.back().belief_state;
  return TurnRequestMsg{r};
}

void BM_ProtocolEncode(benchmark::State& state) {
  const Message m = sample_request();
  for (auto _ : state) benchmark::DoNotOptimize(encode_message(m));
}
BENCHMARK(BM_ProtocolEncode);

void BM_ProtocolDecode(benchmark::State& state) {
  const std::string line = encode_message(sample_request());
  for (auto _ : state) benchmark::DoNotOptimize(decode_message(line));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(line.size()));
}
BENCHMARK(BM_ProtocolDecode);

}  // namespace

BENCHMARK_MAIN();
