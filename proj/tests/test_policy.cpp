#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "todsim/errors.hpp"
#include "todsim/policy.hpp"

using namespace todsim;

TEST_CASE("vocabulary and schema shape") {
  const Ontology o = toy_ontology();
  for (AgentRole role : {AgentRole::kSimulator, AgentRole::kSystem}) {
    const FeatureSchema schema(role, o);
    REQUIRE(schema.vocabulary().front() == kEndOfTurnToken);
    CHECK(schema.size() == schema.context_size() + schema.vocabulary().size() - 1);
    CHECK(schema.names().front() == "bias");
    for (std::size_t t = 1; t < schema.vocabulary().size(); ++t) {
      CHECK(schema.names()[schema.emitted_index(t)] == "emitted:" + schema.vocabulary()[t]);
    }
    CHECK(schema.emitted_index(0) == FeatureSchema::npos);
    CHECK(schema.index("no such feature") == FeatureSchema::npos);
  }
  CHECK(FeatureSchema(AgentRole::kSystem, o).id() != FeatureSchema(AgentRole::kSimulator, o).id());
}

TEST_CASE("zero weights give uniform probabilities") {
  const FeatureSchema schema(AgentRole::kSystem, toy_ontology());
  const auto params = PolicyParameters::zeros(schema);
  const std::vector<double> context(schema.context_size(), 1.0);
  Rng rng(1);
  const TurnTrace trace = sample_turn(params, schema, context, 4, rng);
  REQUIRE(trace.length() >= 1);
  const double v = static_cast<double>(params.vocab_size());
  for (const auto& tok : trace.tokens) {
    for (double p : tok.probs) CHECK(p == doctest::Approx(1.0 / v).epsilon(1e-15));
  }
}

TEST_CASE("saturated logit is always chosen") {
  const FeatureSchema schema(AgentRole::kSimulator, toy_ontology());
  auto params = PolicyParameters::zeros(schema);
  params.at(0, 1) = 1000.0;  // bias -> "bye"
  std::vector<double> context(schema.context_size(), 0.0);
  context[0] = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const TurnTrace trace = sample_turn(params, schema, context, 4, rng);
    REQUIRE(trace.length() >= 1);
    CHECK(trace.tokens[0].chosen == 1);
    CHECK(trace.tokens[0].probs[1] == 1.0);
  }
}

TEST_CASE("trace log-probabilities match the recorded distributions") {
  const FeatureSchema schema(AgentRole::kSystem, toy_ontology());
  auto params = PolicyParameters::zeros(schema);
  Rng init(8);
  for (double& w : params.weights) w = (init.uniform() - 0.5) * 6.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    std::vector<double> context(schema.context_size());
    for (double& x : context) x = init.below(2);
    const TurnTrace trace = sample_turn(params, schema, context, 4, rng);
    CHECK(trace.length() <= 4);
    for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
      const auto& tok = trace.tokens[i];
      double total = 0.0;
      for (double p : tok.probs) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(tok.log_prob - std::log(tok.probs[tok.chosen])) <= 1e-12);
      CHECK(tok.probs == action_probabilities(params, tok.features));
      // Only the last draw may be <eot>.
      if (i + 1 < trace.tokens.size()) CHECK(tok.chosen != 0);
    }
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const FeatureSchema schema(AgentRole::kSimulator, toy_ontology());
  const auto params = PolicyParameters::zeros(schema);
  const std::vector<double> context(schema.context_size(), 1.0);
  Rng a(77), b(77);
  CHECK(sample_turn(params, schema, context, 4, a) == sample_turn(params, schema, context, 4, b));
}

TEST_CASE("policy files round-trip and are checked against the schema") {
  const Ontology o = toy_ontology();
  const FeatureSchema schema(AgentRole::kSystem, o);
  auto params = PolicyParameters::zeros(schema);
  Rng rng(2);
  for (double& w : params.weights) w = rng.uniform() * 2.0 - 1.0;
  params.weights[3] = 1.0 / 3.0;
  std::stringstream buf;
  write_policy(buf, params);
  const PolicyParameters back = read_policy(buf);
  CHECK(back == params);
  CHECK_NOTHROW(check_schema(back, schema));
  CHECK(policy_violations(back, o).empty());
  CHECK_THROWS_AS(check_schema(back, FeatureSchema(AgentRole::kSimulator, o)), ConfigError);

  std::stringstream bad("not a policy\n");
  CHECK_THROWS_AS(read_policy(bad), InvalidArgument);
  std::string text;
  {
    std::stringstream again;
    write_policy(again, params);
    text = again.str();
  }
  std::stringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(read_policy(truncated), InvalidArgument);
}
