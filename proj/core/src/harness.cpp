#include "todsim/harness.hpp"

#include <fstream>
#include <sstream>

#include "todsim/agents.hpp"
#include "todsim/errors.hpp"
#include "todsim/nlg.hpp"

namespace todsim {

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

PolicyParameters load_policy(const std::string& file, AgentRole role, const Ontology& ontology) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open policy file '" + file + "'");
  PolicyParameters p;
  try {
    p = read_policy(in);
  } catch (const InvalidArgument& e) {
    throw ConfigError("policy file '" + file + "': " + e.what());
  }
  if (p.role != role) {
    throw ConfigError("policy file '" + file + "' holds a " + std::string(to_string(p.role)) +
                      " policy, expected " + std::string(to_string(role)));
  }
  check_schema(p, FeatureSchema(role, ontology));
  return p;
}

ProtocolRole protocol_role(AgentRole role) {
  return role == AgentRole::kSystem ? ProtocolRole::kSystem : ProtocolRole::kSimulator;
}

}  // namespace

bool is_endpoint(std::string_view spec) {
  return starts_with(spec, "exec:") || starts_with(spec, "tcp:");
}

AgentFactory make_agent_factory(AgentRole role, const std::string& spec,
                                const CorpusBundle& corpus, std::chrono::milliseconds timeout,
                                int max_tokens) {
  const VenueDatabase* db = &corpus.db;
  if (is_endpoint(spec)) {
    return [spec, role, timeout]() -> std::unique_ptr<Agent> {
      return std::make_unique<ExternalAgent>(connect_protocol(spec, protocol_role(role), timeout));
    };
  }
  if (starts_with(spec, "policy:")) {
    const std::string file = spec.substr(7);
    auto params = load_policy(file, role, db->ontology());
    if (role == AgentRole::kSimulator) {
      return [params, db, max_tokens]() -> std::unique_ptr<Agent> {
        return std::make_unique<PolicySimulator>(params, db->ontology(), max_tokens);
      };
    }
    return [params, db, max_tokens]() -> std::unique_ptr<Agent> {
      return std::make_unique<PolicySystem>(params, *db, max_tokens);
    };
  }
  if (role == AgentRole::kSimulator) {
    if (spec == "agenda") {
      return []() -> std::unique_ptr<Agent> { return std::make_unique<AgendaSimulator>(); };
    }
    if (starts_with(spec, "agenda:")) {
      int k = 0;
      try {
        std::size_t used = 0;
        k = std::stoi(spec.substr(7), &used);
        if (used != spec.size() - 7) k = 0;
      } catch (const std::exception&) {
        k = 0;
      }
      if (k < 1) throw ConfigError("simulator spec '" + spec + "': acts per turn must be >= 1");
      return [k]() -> std::unique_ptr<Agent> { return std::make_unique<AgendaSimulator>(k); };
    }
    throw ConfigError("unknown simulator '" + spec +
                      "' (expected agenda, agenda:<k>, policy:<file>, exec:<cmd> or "
                      "tcp:<host>:<port>)");
  }
  if (spec == "rule") {
    return [db]() -> std::unique_ptr<Agent> { return std::make_unique<RuleSystem>(*db); };
  }
  if (spec == "random") {
    return [db]() -> std::unique_ptr<Agent> { return std::make_unique<UniformRandomSystem>(*db); };
  }
  if (spec == "oracle") {
    if (corpus.dialogues.empty()) throw ConfigError("system 'oracle' needs annotated dialogues");
    const auto* dialogues = &corpus.dialogues;
    return [dialogues]() -> std::unique_ptr<Agent> {
      return std::make_unique<OraclePlaybackSystem>(*dialogues);
    };
  }
  throw ConfigError("unknown system '" + spec +
                    "' (expected rule, random, oracle, policy:<file>, exec:<cmd> or "
                    "tcp:<host>:<port>)");
}

std::unique_ptr<SentenceScorer> load_sentence_scorer(const std::string& spec,
                                                     std::chrono::milliseconds timeout) {
  if (is_endpoint(spec)) {
    return std::make_unique<ExternalSentenceScorer>(
        connect_protocol(spec, ProtocolRole::kLmScorer, timeout));
  }
  if (starts_with(spec, "lm:")) {
    const std::string file = spec.substr(3);
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open language model '" + file + "'");
    try {
      return std::make_unique<OwnedLmScorer>(LanguageModel::read(in));
    } catch (const InvalidArgument& e) {
      throw ConfigError("language model '" + file + "': " + e.what());
    }
  }
  throw ConfigError("unknown sentence scorer '" + spec + "' (expected lm:<file> or an endpoint)");
}

std::unique_ptr<PairScorer> load_pair_scorer(const std::string& spec,
                                             std::chrono::milliseconds timeout) {
  if (is_endpoint(spec)) {
    return std::make_unique<ExternalPairScorer>(
        connect_protocol(spec, ProtocolRole::kPairScorer, timeout));
  }
  if (starts_with(spec, "clf:")) {
    const std::string file = spec.substr(4);
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open session scorer '" + file + "'");
    try {
      return std::make_unique<CoherenceClassifier>(CoherenceClassifier::read(in));
    } catch (const InvalidArgument& e) {
      throw ConfigError("session scorer '" + file + "': " + e.what());
    }
  }
  throw ConfigError("unknown pair scorer '" + spec + "' (expected clf:<file> or an endpoint)");
}

std::vector<Session> annotated_sessions(std::span<const AnnotatedDialogue> dialogues) {
  std::vector<Session> out;
  out.reserve(dialogues.size());
  for (const auto& d : dialogues) {
    Session s;
    s.id = d.id;
    s.goal = d.goal;
    BeliefState belief;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      const AnnotatedTurn& t = d.turns[i];
      belief = update_belief(belief, t.user_acts);
      s.turns.push_back(Turn{static_cast<int>(i), t.user_utterance, t.user_acts,
                             t.system_utterance, t.system_acts, belief});
    }
    s.termination = Termination::kReplayExhausted;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace todsim
