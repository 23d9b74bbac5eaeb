#pragma once

// Softmax token policies for the trainable simulator and system.
//
// A turn is generated token by token: each token is an action skeleton
// ("inform:restaurant:food", "bye", "<eot>", ...) drawn from
// softmax(W^T x) where x is the turn's feature vector extended with indicators
// of tokens already emitted this turn. Sampling stops at <eot> or after
// max_tokens draws.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "todsim/domain.hpp"
#include "todsim/rng.hpp"

namespace todsim {

enum class AgentRole : std::uint8_t { kSimulator, kSystem };

std::string_view to_string(AgentRole r);

inline constexpr std::string_view kEndOfTurnToken = "<eot>";

// Ordered action tokens for a role. Index 0 is always <eot>.
std::vector<std::string> action_vocabulary(AgentRole role, const Ontology& ontology);

// Feature names for a role: turn-context features first, then one
// "emitted:<token>" indicator per non-<eot> action token.
class FeatureSchema {
 public:
  FeatureSchema(AgentRole role, const Ontology& ontology);

  AgentRole role() const { return role_; }
  const std::string& id() const { return id_; }
  std::size_t size() const { return names_.size(); }
  std::size_t context_size() const { return context_size_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  // Index of a feature name, or npos.
  std::size_t index(std::string_view name) const;
  // Index of the emitted-indicator feature for an action token, or npos.
  std::size_t emitted_index(std::size_t token) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  AgentRole role_;
  std::vector<std::string> names_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t context_size_ = 0;
  std::string id_;
};

struct PolicyParameters {
  AgentRole role = AgentRole::kSimulator;
  std::string schema_id;
  std::vector<std::string> vocabulary;
  std::size_t num_features = 0;
  std::vector<double> weights;  // row-major [feature][token]

  static PolicyParameters zeros(const FeatureSchema& schema);

  std::size_t vocab_size() const { return vocabulary.size(); }
  double& at(std::size_t feature, std::size_t token) {
    return weights[feature * vocabulary.size() + token];
  }
  double at(std::size_t feature, std::size_t token) const {
    return weights[feature * vocabulary.size() + token];
  }

  bool operator==(const PolicyParameters&) const = default;
};

// Throws ConfigError when params do not belong to `schema`.
void check_schema(const PolicyParameters& params, const FeatureSchema& schema);
// Empty when every token decodes against the ontology and weights are finite.
std::vector<std::string> policy_violations(const PolicyParameters& params,
                                           const Ontology& ontology);

struct TokenRecord {
  std::vector<double> features;
  std::size_t chosen = 0;
  double log_prob = 0.0;
  std::vector<double> probs;

  bool operator==(const TokenRecord&) const = default;
};

struct TurnTrace {
  AgentRole role = AgentRole::kSimulator;
  std::vector<TokenRecord> tokens;  // length |A_t|

  std::size_t length() const { return tokens.size(); }
  bool operator==(const TurnTrace&) const = default;
};

// softmax(W^T x), computed with the max logit subtracted.
std::vector<double> action_probabilities(const PolicyParameters& params,
                                         std::span<const double> features);

// Draws tokens until <eot> or max_tokens. `context` holds the first
// schema.context_size() features; emitted indicators are filled in per draw.
TurnTrace sample_turn(const PolicyParameters& params, const FeatureSchema& schema,
                      std::span<const double> context, int max_tokens, Rng& rng);

// Token indices chosen in a trace, excluding <eot>.
std::vector<std::size_t> chosen_tokens(const TurnTrace& trace);

void write_policy(std::ostream& out, const PolicyParameters& params);
// Throws InvalidArgument on malformed input.
PolicyParameters read_policy(std::istream& in);

}  // namespace todsim
