#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "todsim/config.hpp"
#include "todsim/corpus.hpp"
#include "todsim/engine.hpp"
#include "todsim/harness.hpp"
#include "todsim/metrics.hpp"
#include "todsim/protocol.hpp"
#include "todsim/rl.hpp"
#include "todsim/scorers.hpp"

namespace todsim {

namespace {

namespace fs = std::filesystem;

// Flags shared by the subcommands that run against a corpus. Unset flags
// leave the config file (or default) value alone.
struct CommonFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> corpus;
  std::optional<std::string> system;
  std::optional<std::string> simulator;
  std::optional<std::string> sentence_scorer;
  std::optional<std::string> pair_scorer;
  std::optional<std::size_t> limit;
};

void add_config_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--corpus", f.corpus, "'toy' or a corpus directory");
  cmd->add_option("--limit", f.limit, "Use only the first N goals or dialogues")
      ->check(CLI::PositiveNumber);
}

void add_agent_flags(CLI::App* cmd, CommonFlags& f, bool simulator) {
  cmd->add_option("--workers", f.workers, "Parallel sessions (0: available parallelism)");
  cmd->add_option("--system", f.system, "rule | random | oracle | policy:<file> | <endpoint>");
  if (simulator) {
    cmd->add_option("--simulator", f.simulator, "agenda | agenda:<k> | policy:<file> | <endpoint>");
  }
}

void add_scorer_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--sentence-scorer", f.sentence_scorer, "lm:<file> or an lm_scorer endpoint");
  cmd->add_option("--pair-scorer", f.pair_scorer, "clf:<file> or a pair_scorer endpoint");
}

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_file.empty()) cfg = parse_run_config(read_file(f.config_file), f.config_file);
  apply_environment(cfg);
  if (f.seed) cfg.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  if (f.corpus) cfg.corpus = *f.corpus;
  if (f.system) cfg.system = *f.system;
  if (f.simulator) cfg.simulator = *f.simulator;
  if (f.sentence_scorer) cfg.sentence_scorer = *f.sentence_scorer;
  if (f.pair_scorer) cfg.pair_scorer = *f.pair_scorer;
  if (f.limit) cfg.limit = *f.limit;
  cfg.rl.seed = cfg.seed;
  cfg.rl.termination = cfg.termination;
  validate(cfg);
  return cfg;
}

LoadedCorpus load(const RunConfig& cfg, std::ostream& err) {
  LoadedCorpus c = load_corpus(cfg.corpus);
  if (c.diagnostics.warnings > 0) {
    err << "corpus '" << cfg.corpus << "': " << c.diagnostics.warnings << " warning(s)\n";
    for (const auto& m : c.diagnostics.messages) err << "  " << m << '\n';
  }
  return c;
}

template <typename T>
std::span<const T> limited(const std::vector<T>& v, const std::optional<std::size_t>& limit) {
  const std::size_t n = limit ? std::min(*limit, v.size()) : v.size();
  return std::span<const T>(v.data(), n);
}


struct Scorers {
  std::unique_ptr<SentenceScorer> sentence;
  std::unique_ptr<PairScorer> pair;
};

Scorers load_scorers(const RunConfig& cfg) {
  Scorers s;
  if (cfg.sentence_scorer) s.sentence = load_sentence_scorer(*cfg.sentence_scorer, cfg.timeout);
  if (cfg.pair_scorer) s.pair = load_pair_scorer(*cfg.pair_scorer, cfg.timeout);
  return s;
}

// ---------------------------------------------------------------------------

struct EvalFlags {
  CommonFlags common;
  std::string csv_out;
  std::string sessions_out;
  std::string plot_out;
};

void add_eval_outputs(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--out", f.csv_out, "Per-session CSV report");
  cmd->add_option("--sessions-out", f.sessions_out, "Session log (JSON)");
  cmd->add_option("--plot", f.plot_out, "SVG histogram of per-session scores");
}

const char* plot_metric(const std::vector<SessionRecord>& records, std::vector<double>& values) {
  values.clear();
  for (const auto& r : records) {
    if (r.sess_score) values.push_back(*r.sess_score);
  }
  if (!values.empty()) return "Sess-Score";
  for (const auto& r : records) {
    if (r.sent_score) values.push_back(*r.sent_score);
  }
  if (!values.empty()) return "Sent-Score";
  for (const auto& r : records) {
    if (!r.failed) values.push_back(static_cast<double>(r.turns));
  }
  return "Turns";
}

int run_eval(const EvalFlags& f, std::optional<EvalMode> forced, std::ostream& out,
             std::ostream& err) {
  RunConfig cfg = resolve_config(f.common);
  const EvalMode mode = forced.value_or(cfg.mode);
  const LoadedCorpus corpus = load(cfg, err);
  const CorpusBundle& bundle = corpus.bundle;
  Scorers scorers = load_scorers(cfg);

  CorpusRun run;
  run.system = make_agent_factory(AgentRole::kSystem, cfg.system, bundle, cfg.timeout,
                                  cfg.rl.max_tokens);
  run.termination = cfg.termination;
  run.sentence_scorer = scorers.sentence.get();
  run.pair_scorer = scorers.pair.get();
  run.seed = cfg.seed;
  run.workers = effective_workers(cfg);

  EvaluationReport report;
  if (mode == EvalMode::kInteractive) {
    run.simulator = make_agent_factory(AgentRole::kSimulator, cfg.simulator, bundle, cfg.timeout,
                                       cfg.rl.max_tokens);
    auto goals = limited(bundle.goals, cfg.limit);
    if (goals.empty()) throw ConfigError("corpus '" + cfg.corpus + "' has no goals");
    report = run_corpus(run, goals, bundle.db);
  } else {
    auto dialogues = limited(bundle.dialogues, cfg.limit);
    if (dialogues.empty()) throw ConfigError("corpus '" + cfg.corpus + "' has no dialogues");
    report = run_corpus(run, dialogues, bundle.db);
  }

  write_report_text(out, report);
  for (const auto& r : report.records) {
    if (r.failed) err << r.session_id << ": " << r.error << '\n';
  }
  if (!f.csv_out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, report.records);
    write_file(f.csv_out, csv.str());
  }
  if (!f.sessions_out.empty()) write_file(f.sessions_out, encode_sessions(report.sessions));
  if (!f.plot_out.empty()) {
    std::vector<double> values;
    const char* title = plot_metric(report.records, values);
    std::ostringstream svg;
    write_histogram_svg(svg, values, title);
    write_file(f.plot_out, svg.str());
  }
  return report.aggregates.sessions == 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct TrainRlFlags {
  CommonFlags common;
  std::string out_dir;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> epochs;
  std::string dev_goals;
  std::optional<std::string> dev_selection;
};

int run_train_rl(const TrainRlFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve_config(f.common);
  if (f.alpha) cfg.rl.alpha = *f.alpha;
  if (f.beta) cfg.rl.beta = *f.beta;
  if (f.epochs) cfg.rl.epochs = *f.epochs;
  if (f.dev_selection) {
    const auto s = parse_dev_selection(*f.dev_selection);
    if (!s) throw ConfigError("--dev-selection must be none, first_half or second_half");
    cfg.rl.dev_selection = *s;
  }
  // A dev file alone turns selection on; an explicit "none" keeps it off.
  if (!f.dev_goals.empty() && !f.dev_selection &&
      cfg.rl.dev_selection == DevSelection::kNone) {
    cfg.rl.dev_selection = DevSelection::kFirstHalf;
  }
  validate(cfg.rl);
  const LoadedCorpus corpus = load(cfg, err);
  const CorpusBundle& bundle = corpus.bundle;
  auto pool = limited(bundle.goals, cfg.limit);
  if (pool.empty()) throw ConfigError("corpus '" + cfg.corpus + "' has no goals");
  Scorers scorers = load_scorers(cfg);
  std::vector<Goal> dev_goals;
  if (cfg.rl.dev_selection != DevSelection::kNone) {
    if (f.dev_goals.empty()) {
      throw ConfigError("dev selection '" + std::string(to_string(cfg.rl.dev_selection)) +
                        "' needs --dev-goals");
    }
    dev_goals = decode_goals(read_file(f.dev_goals), bundle.ontology, f.dev_goals);
    if (dev_half(dev_goals, cfg.rl.dev_selection).empty()) {
      throw ConfigError(f.dev_goals + ": too few goals for dev selection '" +
                        std::string(to_string(cfg.rl.dev_selection)) + "'");
    }
  }

  const Ontology& ontology = bundle.db.ontology();
  const auto sim0 = PolicyParameters::zeros(FeatureSchema(AgentRole::kSimulator, ontology));
  const auto sys0 = PolicyParameters::zeros(FeatureSchema(AgentRole::kSystem, ontology));
  const std::uint64_t eval_seed = derive_seed(cfg.seed, 0xe7a1);
  const double before = evaluate_success(sim0, sys0, pool, bundle.db, cfg.rl, eval_seed);

  out << kTrainingLogHeader << '\n';
  auto on_row = [&](const TrainingLogRow& row) {
    write_training_log(out, std::span<const TrainingLogRow>(&row, 1));
    out.flush();
  };
  TrainingResult result = train_alternating(sim0, sys0, pool, bundle.db, cfg.rl,
                                            scorers.sentence.get(), scorers.pair.get(), on_row,
                                            dev_goals);
  const double after =
      evaluate_success(result.simulator, result.system, pool, bundle.db, cfg.rl, eval_seed);
  char buf[96];
  if (result.selected_epoch) {
    std::snprintf(buf, sizeof buf, "selected epoch %d, dev success %.2f%%\n",
                  *result.selected_epoch,
                  100.0 * result.dev_success[static_cast<std::size_t>(*result.selected_epoch)]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "success before %.2f%%, after %.2f%%\n", 100.0 * before,
                100.0 * after);
  out << buf;

  fs::create_directories(f.out_dir);
  std::ostringstream sim, sys, log;
  write_policy(sim, result.simulator);
  write_policy(sys, result.system);
  log << kTrainingLogHeader << '\n';
  write_training_log(log, result.log);
  write_file((fs::path(f.out_dir) / "simulator.policy").string(), sim.str());
  write_file((fs::path(f.out_dir) / "system.policy").string(), sys.str());
  write_file((fs::path(f.out_dir) / "training_log.csv").string(), log.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct ScorerTrainFlags {
  CommonFlags common;
  std::string sessions_in;
  std::string out_file;
  std::optional<int> order;
  std::optional<double> smoothing;
  std::optional<double> negative_ratio;
};

std::vector<Session> source_sessions(const ScorerTrainFlags& f, const RunConfig& cfg,
                                     const CorpusBundle& bundle, std::ostream& err) {
  if (!f.sessions_in.empty()) {
    DecodeResult diag;
    auto sessions = decode_sessions(read_file(f.sessions_in), bundle.ontology, &diag, f.sessions_in);
    if (diag.warnings > 0) err << f.sessions_in << ": " << diag.warnings << " warning(s)\n";
    if (cfg.limit && sessions.size() > *cfg.limit) sessions.resize(*cfg.limit);
    if (sessions.empty()) throw ConfigError("session log '" + f.sessions_in + "' is empty");
    return sessions;
  }
  auto dialogues = limited(bundle.dialogues, cfg.limit);
  if (dialogues.empty()) throw ConfigError("corpus '" + cfg.corpus + "' has no dialogues");
  return annotated_sessions(dialogues);
}

int run_train_lm(const ScorerTrainFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve_config(f.common);
  if (f.order) cfg.lm_order = *f.order;
  if (f.smoothing) cfg.lm_smoothing = *f.smoothing;
  validate(cfg);
  const LoadedCorpus loaded = load(cfg, err);
  const auto sessions = source_sessions(f, cfg, loaded.bundle, err);
  std::vector<TokenSequence> corpus;
  for (const auto& s : sessions) {
    for (const auto& t : s.turns) {
      auto tokens = tokenize(t.system_utterance);
      if (!tokens.empty()) corpus.push_back(TokenSequence::make(std::move(tokens)));
    }
  }
  if (corpus.empty()) throw ConfigError("no system utterances to train on");
  const LanguageModel lm = train_lm(corpus, cfg.lm_order, cfg.lm_smoothing);
  std::ostringstream text;
  lm.write(text);
  write_file(f.out_file, text.str());
  out << "trained order-" << lm.order() << " model on " << corpus.size() << " sentences, "
      << lm.vocabulary().size() << " tokens in vocabulary\n";
  return 0;
}

int run_train_session_scorer(const ScorerTrainFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve_config(f.common);
  if (f.negative_ratio) cfg.negative_ratio = *f.negative_ratio;
  validate(cfg);
  const LoadedCorpus loaded = load(cfg, err);
  const auto sessions = source_sessions(f, cfg, loaded.bundle, err);
  const auto samples = make_pair_samples(sessions, cfg.negative_ratio, cfg.seed);
  const CoherenceClassifier clf =
      train_session_scorer(samples, cfg.seed, cfg.classifier, cfg.negative_ratio);
  std::size_t correct = 0;
  for (const auto& s : samples) {
    correct += (clf.confidence(s.left, s.right) >= 0.5) == s.coherent;
  }
  std::ostringstream text;
  clf.write(text);
  write_file(f.out_file, text.str());
  char buf[128];
  std::snprintf(buf, sizeof buf, "trained on %zu pairs in %d steps, training accuracy %.4f\n",
                samples.size(), clf.steps(),
                static_cast<double>(correct) / static_cast<double>(samples.size()));
  out << buf;
  return 0;
}

// ---------------------------------------------------------------------------

struct ScoreCorpusFlags {
  ScorerTrainFlags source;
  std::string csv_out;
};

int run_score_corpus(const ScoreCorpusFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve_config(f.source.common);
  if (!cfg.sentence_scorer && !cfg.pair_scorer) {
    throw ConfigError("score-corpus needs --sentence-scorer and/or --pair-scorer");
  }
  const LoadedCorpus corpus = load(cfg, err);
  const auto sessions = source_sessions(f.source, cfg, corpus.bundle, err);
  Scorers scorers = load_scorers(cfg);

  std::vector<SessionRecord> records;
  for (const auto& s : sessions) {
    SessionRecord r;
    r.session_id = s.id;
    r.turns = static_cast<int>(s.turns.size());
    r.termination = s.termination;
    const MetricResult m = inform_success(s, corpus.bundle.db);
    r.inform = m.inform;
    r.success = m.success;
    if (scorers.sentence && !s.turns.empty()) {
      try {
        r.sent_score = session_sentence_score(*scorers.sentence, s);
      } catch (const PreconditionError&) {
        // no tokenized system utterance: leave NA
      }
    }
    if (scorers.pair && !s.turns.empty()) r.sess_score = session_score(*scorers.pair, s);
    records.push_back(std::move(r));
  }
  const ReportAggregates a = aggregate(records, std::nullopt);
  auto cell = [](const std::optional<double>& v, const char* fmt) {
    if (!v) return std::string("N/A");
    char b[32];
    std::snprintf(b, sizeof b, fmt, *v);
    return std::string(b);
  };
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s\n", "", "Sent-Score", "Sess-Score");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s\n", "Testset", cell(a.mean_sent, "%.2f").c_str(),
                cell(a.mean_sess ? std::optional<double>(*a.mean_sess * 100.0) : std::nullopt,
                     "%.1f")
                    .c_str());
  out << buf;
  out << "sessions: " << sessions.size() << '\n';
  if (!f.csv_out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, records);
    write_file(f.csv_out, csv.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportFlags {
  std::string in;
  std::string plot;
  std::string metric = "auto";
};

int run_report(const ReportFlags& f, std::ostream& out) {
  std::ifstream in(f.in);
  if (!in) throw ConfigError("cannot open report '" + f.in + "'");
  const auto records = read_report_csv(in);
  EvaluationReport report;
  report.records = records;
  report.aggregates = aggregate(records, std::nullopt);
  write_report_text(out, report);
  if (!f.plot.empty()) {
    std::vector<double> values;
    std::string title;
    if (f.metric == "auto") {
      title = plot_metric(records, values);
    } else {
      for (const auto& r : records) {
        if (f.metric == "sent" && r.sent_score) values.push_back(*r.sent_score);
        if (f.metric == "sess" && r.sess_score) values.push_back(*r.sess_score);
        if (f.metric == "turns" && !r.failed) values.push_back(r.turns);
      }
      title = f.metric == "sent" ? "Sent-Score" : f.metric == "sess" ? "Sess-Score" : "Turns";
    }
    std::ostringstream svg;
    write_histogram_svg(svg, values, title);
    write_file(f.plot, svg.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_export(const CommonFlags& common, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  const RunConfig cfg = resolve_config(common);
  const LoadedCorpus corpus = load(cfg, err);
  write_corpus(corpus.bundle, out_dir);
  out << "wrote " << corpus.bundle.goals.size() << " goals and " << corpus.bundle.dialogues.size()
      << " dialogues to " << out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeFlags {
  CommonFlags common;
  std::string role;
  std::string agent;
  std::string model;
  std::optional<int> listen;
  std::string host = "127.0.0.1";
  bool once = false;
};

int run_serve(const ServeFlags& f, std::ostream& err) {
  RunConfig cfg = resolve_config(f.common);
  const auto role = parse_protocol_role(f.role);
  if (!role) throw ConfigError("unknown role '" + f.role + "'");
  std::signal(SIGPIPE, SIG_IGN);

  ServeOptions opts;
  opts.role = *role;
  std::optional<LoadedCorpus> corpus;
  std::unique_ptr<Agent> agent;
  AgentFactory factory;
  std::unique_ptr<SentenceScorer> sentence;
  std::unique_ptr<PairScorer> pair;
  switch (*role) {
    case ProtocolRole::kSystem:
    case ProtocolRole::kSimulator: {
      const AgentRole ar =
          *role == ProtocolRole::kSystem ? AgentRole::kSystem : AgentRole::kSimulator;
      const std::string spec =
          !f.agent.empty() ? f.agent : (ar == AgentRole::kSystem ? cfg.system : cfg.simulator);
      if (is_endpoint(spec)) throw ConfigError("serve needs a local agent, not an endpoint");
      corpus = load(cfg, err);
      factory = make_agent_factory(ar, spec, corpus->bundle, cfg.timeout, cfg.rl.max_tokens);
      break;
    }
    case ProtocolRole::kLmScorer:
      if (f.model.empty()) throw ConfigError("lm_scorer needs --model <lm file>");
      sentence = load_sentence_scorer("lm:" + f.model);
      opts.sentence = sentence.get();
      break;
    case ProtocolRole::kPairScorer:
      if (f.model.empty()) throw ConfigError("pair_scorer needs --model <scorer file>");
      pair = load_pair_scorer("clf:" + f.model);
      opts.pair = pair.get();
      break;
  }

  auto serve_one = [&](LineChannel& channel) {
    if (factory) {
      agent = factory();
      opts.agent = agent.get();
    }
    serve_protocol(channel, opts);
  };

  if (!f.listen) {
    FdChannel channel(0, 1);
    serve_one(channel);
    return 0;
  }
  TcpListener listener(f.host, *f.listen);
  err << "listening on " << f.host << ":" << listener.port() << '\n';
  err.flush();
  do {
    auto channel = listener.accept(std::chrono::milliseconds(0));
    try {
      serve_one(*channel);
    } catch (const Error& e) {
      err << "session ended: " << e.what() << '\n';
    }
  } while (!f.once);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interactive evaluation harness for task-oriented dialogue", "todsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "todsim 0.1.0");

  EvalFlags eval_flags, ei_flags, et_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate in the mode named by the config");
  add_config_flags(eval, eval_flags.common);
  add_agent_flags(eval, eval_flags.common, true);
  add_scorer_flags(eval, eval_flags.common);
  add_eval_outputs(eval, eval_flags);

  auto* ei = app.add_subcommand("eval-interactive", "Simulator and system talk to each other");
  add_config_flags(ei, ei_flags.common);
  add_agent_flags(ei, ei_flags.common, true);
  add_scorer_flags(ei, ei_flags.common);
  add_eval_outputs(ei, ei_flags);

  auto* et = app.add_subcommand("eval-traditional", "Replay annotated user turns");
  add_config_flags(et, et_flags.common);
  add_agent_flags(et, et_flags.common, false);
  add_scorer_flags(et, et_flags.common);
  add_eval_outputs(et, et_flags);

  TrainRlFlags rl_flags;
  auto* rl = app.add_subcommand("train-rl", "Alternating REINFORCE for simulator and system");
  add_config_flags(rl, rl_flags.common);
  add_scorer_flags(rl, rl_flags.common);
  rl->add_option("--out-dir", rl_flags.out_dir, "Directory for policies and the training log")
      ->required();
  rl->add_option("--alpha", rl_flags.alpha, "Weight of the sentence-score reward");
  rl->add_option("--beta", rl_flags.beta, "Weight of the session-score reward");
  rl->add_option("--epochs", rl_flags.epochs, "Training epochs");
  rl->add_option("--dev-goals", rl_flags.dev_goals,
                 "Goals file for picking the best epoch; implies first_half")
      ->check(CLI::ExistingFile);
  rl->add_option("--dev-selection", rl_flags.dev_selection,
                 "Dev half that picks the checkpoint: none, first_half, second_half");

  ScorerTrainFlags lm_flags, ss_flags;
  auto* lm = app.add_subcommand("train-lm", "Train the n-gram sentence scorer");
  add_config_flags(lm, lm_flags.common);
  lm->add_option("--sessions", lm_flags.sessions_in, "Session log instead of corpus dialogues")
      ->check(CLI::ExistingFile);
  lm->add_option("--out", lm_flags.out_file, "Model file")->required();
  lm->add_option("--order", lm_flags.order, "n-gram order")->check(CLI::PositiveNumber);
  lm->add_option("--smoothing", lm_flags.smoothing, "Additive smoothing constant");

  auto* ss = app.add_subcommand("train-session-scorer", "Train the pairwise coherence scorer");
  add_config_flags(ss, ss_flags.common);
  ss->add_option("--sessions", ss_flags.sessions_in, "Session log instead of corpus dialogues")
      ->check(CLI::ExistingFile);
  ss->add_option("--out", ss_flags.out_file, "Model file")->required();
  ss->add_option("--negative-ratio", ss_flags.negative_ratio, "Negatives per positive pair");

  ScoreCorpusFlags sc_flags;
  auto* sc = app.add_subcommand("score-corpus", "Score an existing session log");
  add_config_flags(sc, sc_flags.source.common);
  add_scorer_flags(sc, sc_flags.source.common);
  sc->add_option("--sessions", sc_flags.source.sessions_in,
                 "Session log (default: the corpus dialogues)")
      ->check(CLI::ExistingFile);
  sc->add_option("--out", sc_flags.csv_out, "Per-session CSV");

  ReportFlags rep_flags;
  auto* rep = app.add_subcommand("report", "Render a CSV report as a table and a histogram");
  rep->add_option("--in", rep_flags.in, "CSV report")->required();
  rep->add_option("--plot", rep_flags.plot, "SVG histogram output");
  rep->add_option("--metric", rep_flags.metric, "auto | sent | sess | turns")
      ->check(CLI::IsMember({"auto", "sent", "sess", "turns"}));

  CommonFlags ex_flags;
  std::string ex_dir;
  auto* ex = app.add_subcommand("export-corpus", "Write a corpus in canonical form");
  add_config_flags(ex, ex_flags);
  ex->add_option("--out-dir", ex_dir, "Destination directory")->required();

  ServeFlags sv_flags;
  auto* sv = app.add_subcommand("serve", "Serve a built-in agent or scorer over the protocol");
  add_config_flags(sv, sv_flags.common);
  sv->add_option("--role", sv_flags.role, "system | simulator | lm_scorer | pair_scorer")
      ->required()
      ->check(CLI::IsMember({"system", "simulator", "lm_scorer", "pair_scorer"}));
  sv->add_option("--agent", sv_flags.agent, "Agent spec for system/simulator roles");
  sv->add_option("--model", sv_flags.model, "Model file for scorer roles");
  sv->add_option("--listen", sv_flags.listen, "Serve TCP on this port instead of stdio");
  sv->add_option("--host", sv_flags.host, "Address to listen on");
  sv->add_flag("--once", sv_flags.once, "Exit after the first TCP client");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (eval->parsed()) return run_eval(eval_flags, std::nullopt, out, err);
    if (ei->parsed()) return run_eval(ei_flags, EvalMode::kInteractive, out, err);
    if (et->parsed()) return run_eval(et_flags, EvalMode::kTraditional, out, err);
    if (rl->parsed()) return run_train_rl(rl_flags, out, err);
    if (lm->parsed()) return run_train_lm(lm_flags, out, err);
    if (ss->parsed()) return run_train_session_scorer(ss_flags, out, err);
    if (sc->parsed()) return run_score_corpus(sc_flags, out, err);
    if (rep->parsed()) return run_report(rep_flags, out);
    if (sv->parsed()) return run_serve(sv_flags, err);
    if (ex->parsed()) return run_export(ex_flags, ex_dir, out, err);
  } catch (const std::exception& e) {
    err << "todsim: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace todsim
