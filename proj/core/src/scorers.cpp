#include "todsim/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "text_io.hpp"
#include "todsim/errors.hpp"
#include "todsim/metrics.hpp"
#include "todsim/nlg.hpp"
#include "todsim/rng.hpp"

namespace todsim {

TokenSequence TokenSequence::make(std::vector<std::string> tokens) {
  if (tokens.empty()) throw PreconditionError("token sequence must be non-empty");
  return TokenSequence{std::move(tokens)};
}

TokenSequence TokenSequence::from_text(std::string_view text) { return make(tokenize(text)); }

double mean_negative_log(std::span<const double> token_probabilities) {
  if (token_probabilities.empty()) throw PreconditionError("no tokens to score");
  double sum = 0.0;
  for (double p : token_probabilities) sum += std::log(p);
  return -sum / static_cast<double>(token_probabilities.size());
}

double sentence_score(const TokenModel& lm, const TokenSequence& seq) {
  if (seq.tokens.empty()) throw PreconditionError("sentence_score: empty sequence");
  std::vector<double> probs;
  probs.reserve(seq.tokens.size());
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    probs.push_back(lm.probability(std::span(seq.tokens).first(i), seq.tokens[i]));
  }
  return mean_negative_log(probs);
}

// ---------------------------------------------------------------------------
// LanguageModel

namespace {

std::uint64_t corpus_fingerprint(std::span<const TokenSequence> corpus) {
  std::uint64_t h = fnv1a("todsim-lm");
  for (const auto& seq : corpus) {
    for (const auto& t : seq.tokens) h = fnv1a(t, fnv1a(" ", h));
    h = fnv1a("\n", h);
  }
  return h;
}

}  // namespace

void LanguageModel::rebuild_index() {
  index_.clear();
  for (std::uint32_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
}

std::uint32_t LanguageModel::id_of(const std::string& token) const {
  if (token == kBeginToken) return static_cast<std::uint32_t>(vocab_.size());
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  auto unk = index_.find(kUnknownToken);
  return unk == index_.end() ? static_cast<std::uint32_t>(vocab_.size() + 1) : unk->second;
}

LanguageModel LanguageModel::train(std::span<const TokenSequence> corpus, int order,
                                   double smoothing) {
  if (corpus.empty()) throw PreconditionError("train_lm: empty corpus");
  if (order < 1) throw PreconditionError("train_lm: order must be >= 1");
  if (!(smoothing > 0.0)) throw PreconditionError("train_lm: smoothing must be > 0");

  LanguageModel lm;
  lm.order_ = order;
  lm.smoothing_ = smoothing;
  std::set<std::string> words;
  for (const auto& seq : corpus) {
    if (seq.tokens.empty()) throw PreconditionError("train_lm: empty sentence in corpus");
    words.insert(seq.tokens.begin(), seq.tokens.end());
  }
  words.erase(std::string(kUnknownToken));
  words.erase(std::string(kEndToken));
  words.erase(std::string(kBeginToken));
  lm.vocab_.assign(words.begin(), words.end());
  lm.vocab_.emplace_back(kUnknownToken);
  lm.vocab_.emplace_back(kEndToken);
  lm.rebuild_index();
  lm.fingerprint_ = corpus_fingerprint(corpus);

  const auto begin = static_cast<std::uint32_t>(lm.vocab_.size());
  for (const auto& seq : corpus) {
    Key padded(static_cast<std::size_t>(order - 1), begin);
    for (const auto& t : seq.tokens) padded.push_back(lm.id_of(t));
    padded.push_back(lm.id_of(std::string(kEndToken)));
    for (std::size_t pos = static_cast<std::size_t>(order - 1); pos < padded.size(); ++pos) {
      for (int k = 1; k <= order; ++k) {
        Key gram(padded.begin() + static_cast<long>(pos) - (k - 1),
                 padded.begin() + static_cast<long>(pos) + 1);
        ++lm.ngrams_[gram];
        gram.pop_back();
        ++lm.contexts_[gram];
      }
    }
  }
  return lm;
}

LanguageModel LanguageModel::uniform(std::vector<std::string> vocabulary) {
  if (vocabulary.empty()) throw PreconditionError("uniform model needs a vocabulary");
  LanguageModel lm;
  lm.vocab_ = std::move(vocabulary);
  lm.rebuild_index();
  return lm;
}

double LanguageModel::probability(std::span<const std::string> history,
                                  const std::string& token) const {
  const double v = static_cast<double>(vocab_.size());
  const double dv = smoothing_ * v;
  const auto begin = static_cast<std::uint32_t>(vocab_.size());
  const std::uint32_t w = id_of(token);

  // Last (order-1) history ids, left-padded with the begin sentinel.
  const std::size_t need = static_cast<std::size_t>(order_ - 1);
  Key ctx(need, begin);
  const std::size_t take = std::min(need, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    ctx[need - take + i] = id_of(history[history.size() - take + i]);
  }

  double p = 1.0 / v;
  for (int k = 1; k <= order_; ++k) {
    Key h(ctx.end() - (k - 1), ctx.end());
    auto cit = contexts_.find(h);
    const double ch = cit == contexts_.end() ? 0.0 : static_cast<double>(cit->second);
    h.push_back(w);
    auto nit = ngrams_.find(h);
    const double chw = nit == ngrams_.end() ? 0.0 : static_cast<double>(nit->second);
    p = (chw + dv * p) / (ch + dv);
  }
  return p;
}

bool LanguageModel::operator==(const LanguageModel& other) const {
  // index_ is derived from vocab_.
  return vocab_ == other.vocab_ && order_ == other.order_ && smoothing_ == other.smoothing_ &&
         fingerprint_ == other.fingerprint_ && ngrams_ == other.ngrams_ &&
         contexts_ == other.contexts_;
}

void LanguageModel::write(std::ostream& out) const {
  out << "todsim-ngram-lm v1\n";
  out << "order " << order_ << '\n';
  out << "smoothing " << detail::format_double(smoothing_) << '\n';
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint_));
  out << "fingerprint " << buf << '\n';
  out << "vocab " << vocab_.size() << '\n';
  for (const auto& t : vocab_) out << t << '\n';
  out << "ngrams " << ngrams_.size() << '\n';
  for (const auto& [key, count] : ngrams_) {
    out << count;
    for (auto id : key) out << ' ' << (id == vocab_.size() ? std::string(kBeginToken) : vocab_[id]);
    out << '\n';
  }
}

LanguageModel LanguageModel::read(std::istream& in) {
  detail::LineReader r(in, "language model");
  r.expect("todsim-ngram-lm v1");
  LanguageModel lm;
  lm.order_ = static_cast<int>(detail::parse_uint(r.field("order")));
  if (lm.order_ < 1) r.fail("order must be >= 1");
  lm.smoothing_ = detail::parse_double(r.field("smoothing"));
  if (!(lm.smoothing_ > 0.0)) r.fail("smoothing must be > 0");
  const std::string fp = r.field("fingerprint");
  lm.fingerprint_ = std::stoull(fp, nullptr, 16);
  const auto v = detail::parse_uint(r.field("vocab"));
  for (std::uint64_t i = 0; i < v; ++i) lm.vocab_.push_back(r.next());
  lm.rebuild_index();
  if (lm.index_.size() != lm.vocab_.size()) r.fail("duplicate vocabulary entry");
  const auto n = detail::parse_uint(r.field("ngrams"));
  const auto begin = static_cast<std::uint32_t>(lm.vocab_.size());
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string line = r.next();
    auto cells = detail::split_spaces(line);
    if (cells.size() < 2 || cells.size() > static_cast<std::size_t>(lm.order_) + 1) {
      r.fail("malformed n-gram line");
    }
    const auto count = detail::parse_uint(cells[0]);
    Key key;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c] == kBeginToken) {
        key.push_back(begin);
        continue;
      }
      auto it = lm.index_.find(cells[c]);
      if (it == lm.index_.end()) r.fail("n-gram token not in vocabulary");
      key.push_back(it->second);
    }
    lm.ngrams_[key] = count;
    key.pop_back();
    lm.contexts_[key] += count;
  }
  return lm;
}

LanguageModel train_lm(std::span<const TokenSequence> corpus, int order, double smoothing) {
  return LanguageModel::train(corpus, order, smoothing);
}

double LmSentenceScorer::score(std::string_view text) const {
  return sentence_score(*lm_, TokenSequence::from_text(text));
}

// ---------------------------------------------------------------------------
// Pair samples

std::vector<std::pair<std::string, std::string>> adjacent_pairs(const Session& session) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t t = 0; t < session.turns.size(); ++t) {
    const auto& turn = session.turns[t];
    out.emplace_back(turn.user_utterance, turn.system_utterance);
    if (t + 1 < session.turns.size()) {
      out.emplace_back(turn.system_utterance, session.turns[t + 1].user_utterance);
    }
  }
  return out;
}

std::vector<PairSample> make_pair_samples(std::span<const Session> corpus, double negative_ratio,
                                          std::uint64_t seed) {
  if (corpus.size() < 2) {
    throw PreconditionError("make_pair_samples: need at least two sessions for negatives");
  }
  if (negative_ratio < 0.0) throw PreconditionError("make_pair_samples: negative ratio < 0");

  std::vector<PairSample> samples;
  std::vector<std::size_t> owner;  // session index of each positive
  struct Response {
    std::size_t session;
    const std::string* text;
  };
  std::vector<Response> responses;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (auto& [l, r] : adjacent_pairs(corpus[s])) {
      samples.push_back({std::move(l), std::move(r), true});
      owner.push_back(s);
    }
    for (const auto& turn : corpus[s].turns) responses.push_back({s, &turn.system_utterance});
  }
  const std::size_t positives = samples.size();
  const auto negatives =
      static_cast<std::size_t>(std::llround(negative_ratio * static_cast<double>(positives)));
  if (negatives == 0) return samples;
  if (positives == 0) throw PreconditionError("make_pair_samples: corpus has no turns");

  Rng rng(seed);
  for (std::size_t i = 0; i < negatives; ++i) {
    const std::size_t p = i % positives;
    std::vector<std::size_t> foreign;
    // Rejection sampling over all responses keeps the draw uniform.
    std::size_t pick = 0;
    std::size_t attempts = 0;
    do {
      pick = rng.below(responses.size());
      if (++attempts > 64 * responses.size()) {
        throw PreconditionError("make_pair_samples: no responses from other sessions");
      }
    } while (responses[pick].session == owner[p]);
    samples.push_back({samples[p].left, *responses[pick].text, false});
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Pair features

namespace {

constexpr const char* kNumericFeatures[] = {
    "token_jaccard", "slot_overlap",  "value_overlap", "domain_overlap",
    "requests_answered", "left_length", "right_length", "length_gap",
};

std::vector<std::string> clause_kinds() {
  std::vector<std::string> kinds;
  for (const char* sp : {"user", "system"}) {
    for (ActType t : kAllActTypes) kinds.push_back(std::string(sp) + ":" + std::string(to_string(t)));
  }
  kinds.emplace_back("empty");
  kinds.emplace_back("unparsed");
  return kinds;
}

struct FeatureSpace {
  std::vector<std::string> names;
  std::vector<std::string> kinds;
  std::map<std::string, std::uint32_t, std::less<>> kind_index;
  std::uint32_t left_base = 0, right_base = 0, cross_base = 0;

  FeatureSpace() {
    for (const char* n : kNumericFeatures) names.emplace_back(n);
    kinds = clause_kinds();
    for (std::uint32_t i = 0; i < kinds.size(); ++i) kind_index.emplace(kinds[i], i);
    left_base = static_cast<std::uint32_t>(names.size());
    for (const auto& k : kinds) names.push_back("l:" + k);
    right_base = static_cast<std::uint32_t>(names.size());
    for (const auto& k : kinds) names.push_back("r:" + k);
    cross_base = static_cast<std::uint32_t>(names.size());
    for (const auto& a : kinds) {
      for (const auto& b : kinds) names.push_back("x:" + a + "|" + b);
    }
  }
};

const FeatureSpace& space() {
  static const FeatureSpace s;
  return s;
}

struct TextView {
  std::set<std::string> tokens;
  std::set<std::uint32_t> kinds;
  std::set<std::pair<std::string, std::string>> slots;
  std::set<std::string> values;
  std::set<std::string> domains;
  std::vector<DialogueAct> acts;
  std::size_t length = 0;
};

TextView view_of(std::string_view text) {
  TextView v;
  auto toks = tokenize(text);
  v.length = toks.size();
  v.tokens.insert(toks.begin(), toks.end());
  const auto& sp = space();
  auto parsed = parse_any(text);
  if (!parsed) {
    v.kinds.insert(sp.kind_index.at("unparsed"));
    return v;
  }
  if (parsed->empty()) v.kinds.insert(sp.kind_index.at("empty"));
  for (auto& c : *parsed) {
    v.kinds.insert(sp.kind_index.at(std::string(to_string(c.speaker)) + ":" +
                                    std::string(to_string(c.act.type))));
    if (!c.act.domain.empty()) v.domains.insert(c.act.domain);
    if (!c.act.slot.empty()) v.slots.emplace(c.act.domain, c.act.slot);
    if (!c.act.value.empty()) v.values.insert(c.act.value);
    v.acts.push_back(std::move(c.act));
  }
  return v;
}

template <typename T>
double jaccard(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const std::vector<std::string>& pair_feature_names() { return space().names; }

SparseFeatures pair_features(std::string_view left, std::string_view right) {
  const auto& sp = space();
  const TextView l = view_of(left);
  const TextView r = view_of(right);
  SparseFeatures x;
  auto add = [&](std::uint32_t i, double v) {
    if (v != 0.0) x.emplace_back(i, v);
  };
  add(0, jaccard(l.tokens, r.tokens));
  add(1, jaccard(l.slots, r.slots));
  add(2, jaccard(l.values, r.values));
  add(3, jaccard(l.domains, r.domains));
  std::size_t requests = 0;
  std::size_t answered = 0;
  for (const auto& a : l.acts) {
    if (a.type != ActType::kRequest) continue;
    ++requests;
    const bool hit = std::any_of(r.acts.begin(), r.acts.end(), [&](const DialogueAct& b) {
      return (b.type == ActType::kInform || b.type == ActType::kOffer) && b.domain == a.domain &&
             b.slot == a.slot && !b.value.empty();
    });
    answered += hit ? 1 : 0;
  }
  add(4, requests == 0 ? 0.0 : static_cast<double>(answered) / static_cast<double>(requests));
  const double ll = std::min(1.0, static_cast<double>(l.length) / 40.0);
  const double rl = std::min(1.0, static_cast<double>(r.length) / 40.0);
  add(5, ll);
  add(6, rl);
  add(7, std::abs(ll - rl));
  for (auto k : l.kinds) add(sp.left_base + k, 1.0);
  for (auto k : r.kinds) add(sp.right_base + k, 1.0);
  const auto nk = static_cast<std::uint32_t>(sp.kinds.size());
  for (auto a : l.kinds) {
    for (auto b : r.kinds) add(sp.cross_base + a * nk + b, 1.0);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Classifier

CoherenceClassifier::CoherenceClassifier(std::vector<double> weights, double bias,
                                         double negative_ratio, std::uint64_t seed, int steps)
    : weights_(std::move(weights)),
      bias_(bias),
      negative_ratio_(negative_ratio),
      seed_(seed),
      steps_(steps) {
  if (weights_.size() != pair_feature_names().size()) {
    throw InvalidArgument("coherence classifier weight count does not match the feature space");
  }
}

double CoherenceClassifier::confidence(const SparseFeatures& x) const {
  double z = bias_;
  for (const auto& [i, v] : x) z += weights_[i] * v;
  return sigmoid(z);
}

double CoherenceClassifier::confidence(std::string_view left, std::string_view right) const {
  return confidence(pair_features(left, right));
}

bool CoherenceClassifier::operator==(const CoherenceClassifier& other) const {
  return weights_ == other.weights_ && bias_ == other.bias_ &&
         negative_ratio_ == other.negative_ratio_ && seed_ == other.seed_ && steps_ == other.steps_;
}

void CoherenceClassifier::write(std::ostream& out) const {
  out << "todsim-coherence v1\n";
  out << "negative_ratio " << detail::format_double(negative_ratio_) << '\n';
  out << "seed " << seed_ << '\n';
  out << "steps " << steps_ << '\n';
  out << "bias " << detail::format_double(bias_) << '\n';
  out << "features " << weights_.size() << '\n';
  const auto& names = pair_feature_names();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out << names[i] << ' ' << detail::format_double(weights_[i]) << '\n';
  }
}

CoherenceClassifier CoherenceClassifier::read(std::istream& in) {
  detail::LineReader r(in, "coherence classifier");
  r.expect("todsim-coherence v1");
  const double ratio = detail::parse_double(r.field("negative_ratio"));
  const auto seed = detail::parse_uint(r.field("seed"));
  const auto steps = static_cast<int>(detail::parse_uint(r.field("steps")));
  const double bias = detail::parse_double(r.field("bias"));
  const auto n = detail::parse_uint(r.field("features"));
  const auto& names = pair_feature_names();
  if (n != names.size()) r.fail("feature count does not match this build");
  std::vector<double> w;
  w.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string line = r.next();
    auto sp = line.rfind(' ');
    if (sp == std::string::npos || line.substr(0, sp) != names[i]) r.fail("unexpected feature name");
    w.push_back(detail::parse_double(std::string_view(line).substr(sp + 1)));
  }
  return CoherenceClassifier(std::move(w), bias, ratio, seed, steps);
}

CoherenceClassifier train_session_scorer(std::span<const PairSample> samples, std::uint64_t seed,
                                         const ClassifierTraining& opts, double negative_ratio) {
  const bool has_pos = std::any_of(samples.begin(), samples.end(),
                                   [](const PairSample& s) { return s.coherent; });
  const bool has_neg = std::any_of(samples.begin(), samples.end(),
                                   [](const PairSample& s) { return !s.coherent; });
  if (!has_pos || !has_neg) {
    throw PreconditionError("train_session_scorer: both labels must be present");
  }
  std::vector<SparseFeatures> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(pair_features(s.left, s.right));

  const std::size_t dim = pair_feature_names().size();
  std::vector<double> w(dim, 0.0);
  std::vector<double> grad(dim, 0.0);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  int step = 0;
  for (; step < opts.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double z = b;
      for (const auto& [j, v] : xs[i]) z += w[j] * v;
      const double err = sigmoid(z) - (samples[i].coherent ? 1.0 : 0.0);
      gb += err;
      for (const auto& [j, v] : xs[i]) grad[j] += err * v;
    }
    double gmax = std::abs(gb * inv_n);
    for (double g : grad) gmax = std::max(gmax, std::abs(g * inv_n));
    if (gmax < opts.tolerance) break;
    b -= opts.learning_rate * gb * inv_n;
    for (std::size_t j = 0; j < dim; ++j) w[j] -= opts.learning_rate * grad[j] * inv_n;
  }
  return CoherenceClassifier(std::move(w), b, negative_ratio, seed, step);
}

double session_score(const PairScorer& scorer, const Session& session) {
  if (session.turns.empty()) throw PreconditionError("session_score: session has no turns");
  const auto pairs = adjacent_pairs(session);
  double sum = 0.0;
  for (const auto& [l, r] : pairs) sum += scorer.confidence(l, r);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace todsim
