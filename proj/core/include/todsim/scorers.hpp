#pragma once

// Sentence-level fluency and session-level coherence scores.
//
// Sentence score: mean negative natural-log likelihood of the response tokens
// under a language model (lower is better). Session score: mean positive-class
// confidence of a pairwise coherence classifier over every adjacent
// (user, response) and (response, next user) pair.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "todsim/domain.hpp"

namespace todsim {

struct TokenSequence {
  std::vector<std::string> tokens;  // y_1..y_L, sentinels excluded

  // Throws PreconditionError when tokens is empty.
  static TokenSequence make(std::vector<std::string> tokens);
  static TokenSequence from_text(std::string_view text);
};

// p(token | history) for any token; history excludes the begin sentinel.
class TokenModel {
 public:
  virtual ~TokenModel() = default;
  virtual double probability(std::span<const std::string> history,
                             const std::string& token) const = 0;
};

// -(1/L) * sum_i ln p_i
double mean_negative_log(std::span<const double> token_probabilities);

double sentence_score(const TokenModel& lm, const TokenSequence& seq);

inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kEndToken = "</s>";
inline constexpr std::string_view kBeginToken = "<s>";

// Additive-smoothing n-gram model interpolated with its lower orders:
//   p_k(w | h) = (c(h w) + delta * V * p_{k-1}(w | h')) / (c(h) + delta * V)
// with p_0 = 1/V. Every conditional distribution sums to one and is strictly
// positive.
class LanguageModel final : public TokenModel {
 public:
  static LanguageModel train(std::span<const TokenSequence> corpus, int order, double smoothing);
  // Uniform distribution over the given tokens.
  static LanguageModel uniform(std::vector<std::string> vocabulary);

  double probability(std::span<const std::string> history,
                     const std::string& token) const override;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  void write(std::ostream& out) const;
  static LanguageModel read(std::istream& in);

  // Same parameters and counts.
  bool operator==(const LanguageModel& other) const;

 private:
  using Key = std::vector<std::uint32_t>;

  std::uint32_t id_of(const std::string& token) const;
  void rebuild_index();

  std::vector<std::string> vocab_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
  int order_ = 1;
  double smoothing_ = 1.0;
  std::uint64_t fingerprint_ = 0;
  std::map<Key, std::uint64_t> ngrams_;    // context + word, all orders
  std::map<Key, std::uint64_t> contexts_;  // sum of continuation counts
};

// Throws PreconditionError on an empty corpus, order < 1 or smoothing <= 0.
LanguageModel train_lm(std::span<const TokenSequence> corpus, int order, double smoothing);

// Fluency of raw text.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual double score(std::string_view text) const = 0;
};

class LmSentenceScorer final : public SentenceScorer {
 public:
  explicit LmSentenceScorer(const LanguageModel& lm) : lm_(&lm) {}
  double score(std::string_view text) const override;

 private:
  const LanguageModel* lm_;
};

// Confidence in (0, 1) that `right` coherently follows `left`.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double confidence(std::string_view left, std::string_view right) const = 0;
};

// ---------------------------------------------------------------------------

struct PairSample {
  std::string left;
  std::string right;
  bool coherent = true;

  bool operator==(const PairSample&) const = default;
};

// (u_0, r_0), (r_0, u_1), (u_1, r_1), ... in order.
std::vector<std::pair<std::string, std::string>> adjacent_pairs(const Session& session);

// Positives are every adjacent pair; negatives replace the right element of a
// positive with a response drawn uniformly from a different session, cycling
// through positives until round(ratio * positives) are made. Throws
// PreconditionError for fewer than two sessions or no foreign responses.
std::vector<PairSample> make_pair_samples(std::span<const Session> corpus, double negative_ratio,
                                          std::uint64_t seed);

using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

// Feature names in index order.
const std::vector<std::string>& pair_feature_names();
// Token overlap, parsed act-template indicators and their crossings, slot and
// value overlaps, answered requests, lengths.
SparseFeatures pair_features(std::string_view left, std::string_view right);

struct ClassifierTraining {
  double learning_rate = 0.5;
  double tolerance = 1e-6;  // on the largest gradient component
  int max_steps = 10000;

  bool operator==(const ClassifierTraining&) const = default;
};

class CoherenceClassifier final : public PairScorer {
 public:
  CoherenceClassifier() = default;
  CoherenceClassifier(std::vector<double> weights, double bias, double negative_ratio,
                      std::uint64_t seed, int steps);

  double confidence(std::string_view left, std::string_view right) const override;
  double confidence(const SparseFeatures& x) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  double negative_ratio() const { return negative_ratio_; }
  std::uint64_t seed() const { return seed_; }
  int steps() const { return steps_; }

  void write(std::ostream& out) const;
  static CoherenceClassifier read(std::istream& in);

  bool operator==(const CoherenceClassifier& other) const;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  double negative_ratio_ = 1.0;
  std::uint64_t seed_ = 0;
  int steps_ = 0;
};

// Full-batch gradient descent on the logistic loss. Throws PreconditionError
// unless both labels are present.
CoherenceClassifier train_session_scorer(std::span<const PairSample> samples, std::uint64_t seed,
                                         const ClassifierTraining& opts = {},
                                         double negative_ratio = 1.0);

// Mean confidence over adjacent_pairs(session). Throws PreconditionError for a
// session without turns.
double session_score(const PairScorer& scorer, const Session& session);

}  // namespace todsim
