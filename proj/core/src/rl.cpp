#include "todsim/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "todsim/engine.hpp"
#include "todsim/metrics.hpp"
#include "todsim/rng.hpp"

namespace todsim {

std::string_view to_string(DevSelection s) {
  switch (s) {
    case DevSelection::kNone: return "none";
    case DevSelection::kFirstHalf: return "first_half";
    case DevSelection::kSecondHalf: return "second_half";
  }
  return "none";
}

std::optional<DevSelection> parse_dev_selection(std::string_view text) {
  for (DevSelection s : {DevSelection::kNone, DevSelection::kFirstHalf, DevSelection::kSecondHalf}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::span<const Goal> dev_half(std::span<const Goal> dev_goals, DevSelection selection) {
  const std::size_t split = (dev_goals.size() + 1) / 2;
  switch (selection) {
    case DevSelection::kNone: return {};
    case DevSelection::kFirstHalf: return dev_goals.first(split);
    case DevSelection::kSecondHalf: return dev_goals.subspan(split);
  }
  return {};
}

void validate(const RLConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw ConfigError("rl config: " + field + " " + rule);
  };
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) fail("gamma", "must be in (0, 1]");
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) fail("alpha", "must be >= 0");
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) fail("beta", "must be >= 0");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    fail("learning_rate", "must be >= 0");
  }
  if (cfg.goals_per_epoch < 1) fail("goals_per_epoch", "must be >= 1");
  if (cfg.episodes_per_phase < 1) fail("episodes_per_phase", "must be >= 1");
  if (cfg.epochs < 0) fail("epochs", "must be >= 0");
  if (!(cfg.sent_floor > 0.0)) fail("sent_floor", "must be > 0");
  if (!(cfg.baseline_decay >= 0.0 && cfg.baseline_decay < 1.0)) {
    fail("baseline_decay", "must be in [0, 1)");
  }
  if (cfg.max_tokens < 1) fail("max_tokens", "must be >= 1");
  if (cfg.termination.max_turns < 1) fail("max_turns", "must be >= 1");
}

RewardSignal make_reward(bool success, double sent, double sess, double alpha, double beta,
                         double sent_floor) {
  RewardSignal r;
  r.success = success;
  r.sent = sent;
  r.sess = sess;
  r.total = (success ? 1.0 : 0.0) + alpha / std::max(sent, sent_floor) + beta * sess;
  return r;
}

RewardSignal compute_reward(const Session& session, const VenueDatabase& db, const RLConfig& cfg,
                            const SentenceScorer* sentence_scorer, const PairScorer* pair_scorer) {
  if (cfg.alpha > 0.0 && sentence_scorer == nullptr) {
    throw ConfigError("alpha > 0 needs a sentence scorer");
  }
  if (cfg.beta > 0.0 && pair_scorer == nullptr) throw ConfigError("beta > 0 needs a pair scorer");
  const bool success = inform_success(session, db).success;
  const double sent =
      sentence_scorer != nullptr ? session_sentence_score(*sentence_scorer, session) : 0.0;
  const double sess = pair_scorer != nullptr ? session_score(*pair_scorer, session) : 0.0;
  return make_reward(success, sent, sess, cfg.alpha, cfg.beta, cfg.sent_floor);
}

std::vector<double> position_weights(std::size_t len, double gamma) {
  std::vector<double> w(len);
  for (std::size_t i = 1; i <= len; ++i) w[i - 1] = std::pow(gamma, static_cast<double>(len - i));
  return w;
}

std::vector<double> turn_gradient(const TurnTrace& trace, const PolicyParameters& params,
                                  double reward, double gamma) {
  const std::size_t v = params.vocab_size();
  if (params.weights.size() != params.num_features * v) {
    throw InvalidArgument("turn_gradient: parameter weights have the wrong size");
  }
  if (trace.role != params.role) throw InvalidArgument("turn_gradient: trace role mismatch");
  std::vector<double> grad(params.weights.size(), 0.0);
  const auto pw = position_weights(trace.length(), gamma);
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const auto& tok = trace.tokens[i];
    if (tok.features.size() != params.num_features || tok.probs.size() != v || tok.chosen >= v) {
      throw InvalidArgument("turn_gradient: trace does not match the parameter shape");
    }
    const double scale = pw[i] * reward;
    if (scale == 0.0) continue;
    for (std::size_t f = 0; f < params.num_features; ++f) {
      const double x = tok.features[f];
      if (x == 0.0) continue;
      double* row = &grad[f * v];
      for (std::size_t a = 0; a < v; ++a) {
        const double indicator = a == tok.chosen ? 1.0 : 0.0;
        row[a] += scale * (indicator - tok.probs[a]) * x;
      }
    }
  }
  return grad;
}

namespace {

Episode play(PolicySimulator& sim, PolicySystem& sys, const Goal& goal, const VenueDatabase& db,
             const RLConfig& cfg, std::uint64_t seed, const SentenceScorer* sentence_scorer,
             const PairScorer* pair_scorer) {
  Episode ep;
  auto observe = [&](AgentRole, const TurnRequest&, const AgentTurnOutput& out) {
    if (out.trace) ep.traces.push_back(*out.trace);
  };
  ep.session = run_interactive(sim, sys, goal, db, cfg.termination, seed, {}, observe);
  ep.reward = compute_reward(ep.session, db, cfg, sentence_scorer, pair_scorer);
  return ep;
}

void guard_divergence(const PolicyParameters& p) {
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const double w = p.weights[i];
    if (!std::isfinite(w) || std::abs(w) > 1e6) {
      const std::size_t f = i / p.vocab_size();
      const std::size_t a = i % p.vocab_size();
      throw DivergenceError(std::string(to_string(p.role)) + " weight [feature " +
                            std::to_string(f) + ", token '" + p.vocabulary[a] + "'] = " +
                            std::to_string(w) + " exceeds 1e6");
    }
  }
}

}  // namespace

Episode run_episode(const PolicyParameters& sim_params, const PolicyParameters& sys_params,
                    const Goal& goal, const VenueDatabase& db, const RLConfig& cfg,
                    std::uint64_t seed, const SentenceScorer* sentence_scorer,
                    const PairScorer* pair_scorer) {
  PolicySimulator sim(sim_params, db.ontology(), cfg.max_tokens);
  PolicySystem sys(sys_params, db, cfg.max_tokens);
  return play(sim, sys, goal, db, cfg, seed, sentence_scorer, pair_scorer);
}

TrainingResult train_alternating(PolicyParameters sim_params, PolicyParameters sys_params,
                                 std::span<const Goal> goal_pool, const VenueDatabase& db,
                                 const RLConfig& cfg, const SentenceScorer* sentence_scorer,
                                 const PairScorer* pair_scorer,
                                 const std::function<void(const TrainingLogRow&)>& on_row,
                                 std::span<const Goal> dev_goals) {
  validate(cfg);
  if (goal_pool.empty()) throw PreconditionError("train_alternating: empty goal pool");
  const std::span<const Goal> dev = dev_half(dev_goals, cfg.dev_selection);
  if (cfg.dev_selection != DevSelection::kNone && dev.empty()) {
    throw PreconditionError("train_alternating: dev selection '" +
                            std::string(to_string(cfg.dev_selection)) + "' has no dev goals");
  }
  PolicySimulator sim(std::move(sim_params), db.ontology(), cfg.max_tokens);
  PolicySystem sys(std::move(sys_params), db, cfg.max_tokens);

  TrainingResult result;
  // Same seed every epoch, so checkpoints are compared on identical draws.
  const std::uint64_t dev_seed = derive_seed(cfg.seed, 0xde75e1ULL);
  PolicyParameters best_sim, best_sys;
  auto score_checkpoint = [&](int epoch) {
    if (dev.empty()) return;
    const double s = evaluate_success(sim.params(), sys.params(), dev, db, cfg, dev_seed);
    result.dev_success.push_back(s);
    if (!result.selected_epoch || s > result.dev_success[static_cast<std::size_t>(*result.selected_epoch)]) {
      result.selected_epoch = epoch;
      best_sim = sim.params();
      best_sys = sys.params();
    }
  };
  score_checkpoint(0);
  std::vector<std::size_t> order(goal_pool.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Goals for this epoch: a fresh permutation of the pool, cycled if short.
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng goal_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    goal_rng.shuffle(order.begin(), order.end());
    std::vector<const Goal*> goals;
    for (int g = 0; g < cfg.goals_per_epoch; ++g) {
      goals.push_back(&goal_pool[order[static_cast<std::size_t>(g) % order.size()]]);
    }

    for (AgentRole phase : {AgentRole::kSimulator, AgentRole::kSystem}) {
      PolicyParameters& learner = phase == AgentRole::kSimulator ? sim.params() : sys.params();
      const PolicyParameters& frozen =
          phase == AgentRole::kSimulator ? sys.params() : sim.params();
      const std::vector<double> frozen_before = frozen.weights;
      const std::uint64_t phase_seed = derive_seed(
          cfg.seed ^ 0x5eed5eedULL, static_cast<std::uint64_t>(epoch) * 2 +
                                        (phase == AgentRole::kSimulator ? 0 : 1));

      double baseline = 0.0;
      bool baseline_init = false;
      std::size_t successes = 0;
      double reward_sum = 0.0;
      double sent_sum = 0.0;
      double sess_sum = 0.0;
      for (int e = 0; e < cfg.episodes_per_phase; ++e) {
        const Goal& goal = *goals[static_cast<std::size_t>(e) % goals.size()];
        Episode ep = play(sim, sys, goal, db, cfg, derive_seed(phase_seed, static_cast<std::uint64_t>(e)),
                          sentence_scorer, pair_scorer);
        successes += ep.reward.success ? 1 : 0;
        reward_sum += ep.reward.total;
        sent_sum += ep.reward.sent;
        sess_sum += ep.reward.sess;

        double r = ep.reward.total;
        if (cfg.baseline) {
          if (!baseline_init) {
            baseline = r;
            baseline_init = true;
          }
          const double advantage = r - baseline;
          baseline = cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * r;
          r = advantage;
        }
        if (r == 0.0 || cfg.learning_rate == 0.0) continue;
        for (const auto& trace : ep.traces) {
          if (trace.role != phase) continue;
          const auto g = turn_gradient(trace, learner, r, cfg.gamma);
          for (std::size_t i = 0; i < g.size(); ++i) learner.weights[i] += cfg.learning_rate * g[i];
        }
        guard_divergence(learner);
      }
      if (frozen.weights != frozen_before) {
        throw Error("freeze contract violated: " + std::string(to_string(frozen.role)) +
                    " changed during the " + std::string(to_string(phase)) + " phase");
      }

      const double n = static_cast<double>(cfg.episodes_per_phase);
      TrainingLogRow row;
      row.epoch = epoch;
      row.phase = phase;
      row.success_rate = static_cast<double>(successes) / n;
      row.mean_reward = reward_sum / n;
      if (sentence_scorer != nullptr) row.mean_sent = sent_sum / n;
      if (pair_scorer != nullptr) row.mean_sess = sess_sum / n;
      if (on_row) on_row(row);
      result.log.push_back(row);
    }
    score_checkpoint(epoch);
  }
  if (result.selected_epoch) {
    result.simulator = std::move(best_sim);
    result.system = std::move(best_sys);
  } else {
    result.simulator = sim.params();
    result.system = sys.params();
  }
  return result;
}

double evaluate_success(const PolicyParameters& sim_params, const PolicyParameters& sys_params,
                        std::span<const Goal> goals, const VenueDatabase& db,
                        const RLConfig& cfg, std::uint64_t seed) {
  if (goals.empty()) throw PreconditionError("evaluate_success: no goals");
  PolicySimulator sim(sim_params, db.ontology(), cfg.max_tokens);
  PolicySystem sys(sys_params, db, cfg.max_tokens);
  RLConfig plain = cfg;
  plain.alpha = 0.0;
  plain.beta = 0.0;
  std::size_t successes = 0;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    Episode ep = play(sim, sys, goals[i], db, plain, derive_seed(seed, i), nullptr, nullptr);
    successes += ep.reward.success ? 1 : 0;
  }
  return static_cast<double>(successes) / static_cast<double>(goals.size());
}

void write_training_log(std::ostream& out, std::span<const TrainingLogRow> rows) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  out << kTrainingLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << to_string(r.phase) << ',' << num(r.success_rate) << ','
        << num(r.mean_reward) << ',' << (r.mean_sent ? num(*r.mean_sent) : "NA") << ','
        << (r.mean_sess ? num(*r.mean_sess) : "NA") << '\n';
  }
}

}  // namespace todsim
