#include "todsim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "text_io.hpp"
#include "todsim/errors.hpp"

namespace todsim {

std::string_view to_string(AgentRole r) {
  return r == AgentRole::kSimulator ? "simulator" : "system";
}

std::vector<std::string> action_vocabulary(AgentRole role, const Ontology& ontology) {
  std::vector<std::string> v{std::string(kEndOfTurnToken), "bye"};
  if (role == AgentRole::kSimulator) v.emplace_back("thank");
  for (const auto& [d, schema] : ontology.domains()) {
    if (role == AgentRole::kSimulator) {
      for (const auto& [s, _] : schema.informable) v.push_back("inform:" + d + ":" + s);
      v.push_back("inform:" + d + ":booking");
      for (const auto& s : schema.requestable) v.push_back("request:" + d + ":" + s);
    } else {
      v.push_back("offer:" + d + ":name");
      for (const auto& s : schema.requestable) v.push_back("inform:" + d + ":" + s);
      v.push_back("book:" + d + ":reference");
      for (const auto& [s, _] : schema.informable) v.push_back("request:" + d + ":" + s);
      v.push_back("nooffer:" + d);
    }
  }
  return v;
}

FeatureSchema::FeatureSchema(AgentRole role, const Ontology& ontology)
    : role_(role), vocabulary_(action_vocabulary(role, ontology)) {
  names_.emplace_back("bias");
  const AgentRole other = role == AgentRole::kSimulator ? AgentRole::kSystem : AgentRole::kSimulator;
  if (role == AgentRole::kSimulator) {
    for (const auto& [d, schema] : ontology.domains()) {
      for (const auto& [s, _] : schema.informable) names_.push_back("pending:inform:" + d + ":" + s);
      for (const auto& s : schema.requestable) names_.push_back("pending:request:" + d + ":" + s);
      names_.push_back("pending:booking:" + d);
    }
  }
  for (const auto& tok : action_vocabulary(other, ontology)) {
    if (tok != kEndOfTurnToken) names_.push_back("opp:" + tok);
  }
  for (ActType t : kAllActTypes) names_.push_back("opp_type:" + std::string(to_string(t)));
  if (role == AgentRole::kSystem) {
    for (const auto& [d, _] : ontology.domains()) {
      names_.push_back("belief:" + d);
      names_.push_back("match:" + d);
    }
  }
  for (const char* b : {"turn:0", "turn:1", "turn:2-3", "turn:4+"}) names_.emplace_back(b);
  context_size_ = names_.size();
  for (std::size_t t = 1; t < vocabulary_.size(); ++t) names_.push_back("emitted:" + vocabulary_[t]);

  std::string joined;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    index_.emplace(names_[i], i);
    joined += names_[i];
    joined += '\n';
  }
  for (const auto& t : vocabulary_) {
    joined += t;
    joined += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(joined)));
  id_ = "bag-v1/" + std::string(to_string(role)) + "/" + buf;
}

std::size_t FeatureSchema::index(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? npos : it->second;
}

std::size_t FeatureSchema::emitted_index(std::size_t token) const {
  if (token == 0 || token >= vocabulary_.size()) return npos;
  return context_size_ + token - 1;
}

PolicyParameters PolicyParameters::zeros(const FeatureSchema& schema) {
  PolicyParameters p;
  p.role = schema.role();
  p.schema_id = schema.id();
  p.vocabulary = schema.vocabulary();
  p.num_features = schema.size();
  p.weights.assign(p.num_features * p.vocabulary.size(), 0.0);
  return p;
}

void check_schema(const PolicyParameters& params, const FeatureSchema& schema) {
  if (params.role != schema.role()) {
    throw ConfigError("policy role is " + std::string(to_string(params.role)) + ", expected " +
                      std::string(to_string(schema.role())));
  }
  if (params.schema_id != schema.id() || params.num_features != schema.size() ||
      params.vocabulary != schema.vocabulary()) {
    throw ConfigError("feature schema mismatch: policy has '" + params.schema_id +
                      "', agent expects '" + schema.id() + "'");
  }
  if (params.weights.size() != params.num_features * params.vocabulary.size()) {
    throw ConfigError("policy weight matrix has the wrong shape");
  }
}

std::vector<std::string> policy_violations(const PolicyParameters& params,
                                           const Ontology& ontology) {
  std::vector<std::string> out;
  for (const auto& tok : params.vocabulary) {
    if (tok == kEndOfTurnToken) continue;
    auto parts = std::vector<std::string>{};
    std::size_t start = 0;
    while (true) {
      auto colon = tok.find(':', start);
      parts.push_back(tok.substr(start, colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    auto type = parse_act_type(parts[0]);
    if (!type) {
      out.push_back("token '" + tok + "' has unknown act type");
      continue;
    }
    if (is_bare(*type)) {
      if (parts.size() != 1) out.push_back("token '" + tok + "' carries extra fields");
      continue;
    }
    if (parts.size() < 2 || !ontology.has_domain(parts[1])) {
      out.push_back("token '" + tok + "' has unknown domain");
      continue;
    }
    if (parts.size() >= 3 && !ontology.is_valid_slot(parts[1], parts[2])) {
      out.push_back("token '" + tok + "' has unknown slot");
    }
  }
  for (double w : params.weights) {
    if (!std::isfinite(w)) {
      out.emplace_back("non-finite weight");
      break;
    }
  }
  return out;
}

std::vector<double> action_probabilities(const PolicyParameters& params,
                                         std::span<const double> features) {
  const std::size_t v = params.vocab_size();
  std::vector<double> logits(v, 0.0);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const double x = features[f];
    if (x == 0.0) continue;
    const double* row = params.weights.data() + f * v;
    for (std::size_t a = 0; a < v; ++a) logits[a] += x * row[a];
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

TurnTrace sample_turn(const PolicyParameters& params, const FeatureSchema& schema,
                      std::span<const double> context, int max_tokens, Rng& rng) {
  TurnTrace trace;
  trace.role = params.role;
  std::vector<double> features(schema.size(), 0.0);
  std::copy(context.begin(), context.end(), features.begin());
  for (int i = 0; i < max_tokens; ++i) {
    TokenRecord rec;
    rec.features = features;
    rec.probs = action_probabilities(params, features);
    rec.chosen = rng.categorical(rec.probs);
    rec.log_prob = std::log(rec.probs[rec.chosen]);
    const std::size_t chosen = rec.chosen;
    trace.tokens.push_back(std::move(rec));
    if (chosen == 0) break;
    features[schema.emitted_index(chosen)] = 1.0;
  }
  return trace;
}

std::vector<std::size_t> chosen_tokens(const TurnTrace& trace) {
  std::vector<std::size_t> out;
  for (const auto& t : trace.tokens) {
    if (t.chosen != 0) out.push_back(t.chosen);
  }
  return out;
}

void write_policy(std::ostream& out, const PolicyParameters& params) {
  out << "todsim-policy v1\n";
  out << "role " << to_string(params.role) << '\n';
  out << "schema " << params.schema_id << '\n';
  out << "tokens " << params.vocabulary.size() << '\n';
  for (const auto& t : params.vocabulary) out << t << '\n';
  out << "features " << params.num_features << '\n';
  out << "weights\n";
  const std::size_t v = params.vocabulary.size();
  for (std::size_t f = 0; f < params.num_features; ++f) {
    for (std::size_t a = 0; a < v; ++a) {
      if (a) out << ' ';
      out << detail::format_double(params.weights[f * v + a]);
    }
    out << '\n';
  }
}

PolicyParameters read_policy(std::istream& in) {
  detail::LineReader r(in, "policy");
  r.expect("todsim-policy v1");
  PolicyParameters p;
  const std::string role = r.field("role");
  if (role == "simulator") {
    p.role = AgentRole::kSimulator;
  } else if (role == "system") {
    p.role = AgentRole::kSystem;
  } else {
    r.fail("unknown role '" + role + "'");
  }
  p.schema_id = r.field("schema");
  const auto v = detail::parse_uint(r.field("tokens"));
  for (std::uint64_t i = 0; i < v; ++i) p.vocabulary.push_back(r.next());
  p.num_features = detail::parse_uint(r.field("features"));
  r.expect("weights");
  p.weights.reserve(p.num_features * v);
  for (std::size_t f = 0; f < p.num_features; ++f) {
    const std::string line = r.next();
    auto cells = detail::split_spaces(line);
    if (cells.size() != v) r.fail("weight row has the wrong width");
    for (auto c : cells) p.weights.push_back(detail::parse_double(c));
  }
  return p;
}

}  // namespace todsim
