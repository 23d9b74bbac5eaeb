#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "todsim/harness.hpp"
#include "todsim/metrics.hpp"
#include "todsim/scorers.hpp"

using namespace todsim;

namespace {

class FixedTokenModel final : public TokenModel {
 public:
  explicit FixedTokenModel(std::vector<double> p) : p_(std::move(p)) {}
  double probability(std::span<const std::string> history, const std::string&) const override {
    return p_.at(history.size());
  }

 private:
  std::vector<double> p_;
};

class ConstantPairScorer final : public PairScorer {
 public:
  explicit ConstantPairScorer(double c) : c_(c) {}
  double confidence(std::string_view, std::string_view) const override { return c_; }

 private:
  double c_;
};

// Confidence looked up per (left, right), default 0.5.
class TablePairScorer final : public PairScorer {
 public:
  std::map<std::pair<std::string, std::string>, double> table;
  double confidence(std::string_view l, std::string_view r) const override {
    auto it = table.find({std::string(l), std::string(r)});
    return it == table.end() ? 0.5 : it->second;
  }
};

// 200 interactive toy sessions from the agenda simulator (one act per turn)
// and the rule system.
const std::vector<Session>& toy_sessions() {
  static const std::vector<Session> sessions = [] {
    const VenueDatabase* db = &test::toy_db();
    CorpusRun run;
    run.simulator = [] { return std::make_unique<AgendaSimulator>(1); };
    run.system = [db] { return std::make_unique<RuleSystem>(*db); };
    run.seed = 5;
    return run_corpus(run, std::span(test::toy().goals), *db).sessions;
  }();
  return sessions;
}

LanguageModel toy_lm() {
  std::vector<TokenSequence> corpus;
  for (const auto& s : toy_sessions()) {
    for (const auto& t : s.turns) corpus.push_back(TokenSequence::from_text(t.system_utterance));
  }
  return train_lm(corpus, 3, 0.1);
}

double accuracy(const PairScorer& clf, std::span<const PairSample> samples) {
  std::size_t ok = 0;
  for (const auto& s : samples) ok += (clf.confidence(s.left, s.right) >= 0.5) == s.coherent;
  return static_cast<double>(ok) / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("sentence score arithmetic") {
  const auto seq = TokenSequence::make({"x", "y"});
  CHECK(sentence_score(FixedTokenModel({0.5, 0.25}), seq) ==
        doctest::Approx((std::log(2.0) + std::log(4.0)) / 2).epsilon(1e-15));
  CHECK(std::abs(sentence_score(FixedTokenModel({0.5, 0.25}), seq) - 1.0397) < 1e-4);
  CHECK_THROWS_AS(TokenSequence::make({}), PreconditionError);

  const auto uniform = LanguageModel::uniform({"a", "b", "c", "d"});
  for (const auto& text : {"a", "a b c d", "zz top", "b b b b b b b"}) {
    CHECK(std::abs(sentence_score(uniform, TokenSequence::from_text(text)) - std::log(4.0)) < 1e-9);
  }
}

TEST_CASE("add-one unigram example") {
  const std::vector<TokenSequence> corpus = {TokenSequence::make({"a", "b"})};
  const LanguageModel lm = train_lm(corpus, 1, 1.0);
  REQUIRE(lm.vocabulary().size() == 4);
  CHECK(lm.probability({}, "a") == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(lm.probability({}, "</s>") == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(lm.probability({}, "<unk>") == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(lm.probability({}, "never seen") == lm.probability({}, "<unk>"));
}

TEST_CASE("conditional distributions sum to one and stay positive") {
  const LanguageModel lm = toy_lm();
  Rng rng(3);
  const auto& vocab = lm.vocabulary();
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> history(rng.below(4));
    for (auto& h : history) h = vocab[rng.below(vocab.size())];
    double total = 0.0;
    for (const auto& w : vocab) {
      const double p = lm.probability(history, w);
      CHECK(p > 0.0);
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("language model training rules") {
  const std::vector<TokenSequence> corpus = {TokenSequence::make({"a", "b"}),
                                             TokenSequence::make({"b", "c", "a"})};
  CHECK(train_lm(corpus, 2, 0.5) == train_lm(corpus, 2, 0.5));
  CHECK_THROWS_AS(train_lm(std::vector<TokenSequence>{}, 2, 0.5), PreconditionError);
  CHECK_THROWS_AS(train_lm(corpus, 0, 0.5), PreconditionError);
  CHECK_THROWS_AS(train_lm(corpus, 2, 0.0), PreconditionError);

  const LanguageModel lm = toy_lm();
  std::stringstream buf;
  lm.write(buf);
  const LanguageModel back = LanguageModel::read(buf);
  CHECK(back == lm);
  const std::string text = "the phone of the restaurant is 01223-111.";
  CHECK(LmSentenceScorer(back).score(text) == LmSentenceScorer(lm).score(text));
  std::stringstream junk("todsim-ngram-lm v1\norder x\n");
  CHECK_THROWS_AS(LanguageModel::read(junk), InvalidArgument);
}

TEST_CASE("sentence score has no hidden state") {
  const LanguageModel lm = toy_lm();
  const LmSentenceScorer scorer(lm);
  const double first = scorer.score("i can offer a restaurant with name x.");
  (void)scorer.score("completely different words here");
  CHECK(scorer.score("i can offer a restaurant with name x.") == first);
  CHECK(first >= 0.0);
}

TEST_CASE("shuffled sentences score worse") {
  const LanguageModel lm = toy_lm();
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : toy_sessions()) {
    for (const auto& t : s.turns) {
      auto tokens = tokenize(t.system_utterance);
      if (tokens.size() >= 3) sentences.push_back(std::move(tokens));
    }
  }
  Rng rng(10);
  rng.shuffle(sentences.begin(), sentences.end());
  REQUIRE(sentences.size() >= 200);
  int worse = 0;
  for (int i = 0; i < 200; ++i) {
    const auto& original = sentences[static_cast<std::size_t>(i)];
    auto shuffled = original;
    while (shuffled == original) rng.shuffle(shuffled.begin(), shuffled.end());
    worse += sentence_score(lm, TokenSequence::make(shuffled)) >
             sentence_score(lm, TokenSequence::make(original));
  }
  MESSAGE("shuffled worse: ", worse, "/200");
  CHECK(worse >= 190);
}

TEST_CASE("pair samples") {
  const auto& sessions = toy_sessions();
  const auto two = std::span(sessions).first(2);
  std::size_t positives = 0;
  for (const auto& s : two) positives += 2 * s.turns.size() - 1;

  const auto samples = make_pair_samples(two, 1.0, 4);
  CHECK(samples.size() == 2 * positives);
  CHECK(std::count_if(samples.begin(), samples.end(), [](auto& s) { return s.coherent; }) ==
        static_cast<long>(positives));
  CHECK(samples == make_pair_samples(two, 1.0, 4));
  CHECK(make_pair_samples(two, 0.5, 4).size() ==
        positives + static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(positives))));

  // Negatives take their response from the other session.
  std::set<std::string> other;
  for (const auto& t : two[1].turns) other.insert(t.system_utterance);
  const std::size_t first_positives = 2 * two[0].turns.size() - 1;
  for (std::size_t i = 0; i < positives; ++i) {
    const auto& neg = samples[positives + i];
    CHECK_FALSE(neg.coherent);
    CHECK(neg.left == samples[i].left);
    if (i < first_positives) CHECK(other.contains(neg.right));
  }

  Session s;
  s.turns.resize(2);
  s.turns[0].user_utterance = "u0";
  s.turns[0].system_utterance = "r0";
  s.turns[1].user_utterance = "u1";
  s.turns[1].system_utterance = "r1";
  using P = std::pair<std::string, std::string>;
  CHECK(adjacent_pairs(s) == std::vector<P>{{"u0", "r0"}, {"r0", "u1"}, {"u1", "r1"}});

  CHECK_THROWS_AS(make_pair_samples(std::span(sessions).first(1), 1.0, 1), PreconditionError);
}

TEST_CASE("classifier: separable data and the base-rate limit") {
  std::vector<PairSample> separable;
  for (int i = 0; i < 20; ++i) {
    const std::string w = "word" + std::to_string(i);
    separable.push_back({w + " alpha", w + " alpha", true});
    separable.push_back({w + " alpha", "other" + std::to_string(i) + " beta", false});
  }
  const auto clf = train_session_scorer(separable, 1);
  CHECK(accuracy(clf, separable) == 1.0);

  std::vector<PairSample> flat;
  for (int i = 0; i < 100; ++i) flat.push_back({"same left", "same right", i < 30});
  const auto base = train_session_scorer(flat, 1);
  CHECK(base.confidence("same left", "same right") == doctest::Approx(0.3).epsilon(1e-3));

  CHECK_THROWS_AS(train_session_scorer(std::vector<PairSample>{{"a", "b", true}}, 1),
                  PreconditionError);
}

TEST_CASE("classifier generalizes to held-out sessions and survives serialization") {
  const auto& sessions = toy_sessions();
  const auto train = make_pair_samples(std::span(sessions).first(100), 1.0, 1);
  const auto test_set = make_pair_samples(std::span(sessions).subspan(100), 1.0, 2);
  const auto clf = train_session_scorer(train, 1);
  const double acc = accuracy(clf, test_set);
  MESSAGE("held-out accuracy ", acc);
  CHECK(acc >= 0.9);

  std::stringstream buf;
  clf.write(buf);
  const auto back = CoherenceClassifier::read(buf);
  CHECK(back == clf);
  CHECK(back.confidence("hello.", "how can i help you?") ==
        clf.confidence("hello.", "how can i help you?"));
}

TEST_CASE("corrupted sessions score below their originals") {
  const auto& sessions = toy_sessions();
  const auto clf = train_session_scorer(make_pair_samples(std::span(sessions).first(100), 1.0, 1), 1);
  Rng rng(19);
  int lower = 0;
  for (std::size_t i = 100; i < 200; ++i) {
    Session corrupted = sessions[i];
    for (auto& t : corrupted.turns) {
      std::size_t j;
      do {
        j = rng.below(sessions.size());
      } while (j == i);
      const auto& other = sessions[j].turns;
      t.system_utterance = other[rng.below(other.size())].system_utterance;
    }
    lower += session_score(clf, corrupted) < session_score(clf, sessions[i]);
  }
  MESSAGE("corrupted lower: ", lower, "/100");
  CHECK(lower >= 95);
}

TEST_CASE("session score examples and properties") {
  const auto& s = toy_sessions().front();
  CHECK(session_score(ConstantPairScorer(1.0), s) == 1.0);
  Session one;
  one.turns.resize(1);
  CHECK(session_score(ConstantPairScorer(0.8), one) == doctest::Approx(0.8));
  CHECK_THROWS_AS(session_score(ConstantPairScorer(0.8), Session{}), PreconditionError);

  // Raising one pair's confidence never lowers the mean.
  TablePairScorer table;
  const auto pairs = adjacent_pairs(s);
  const double before = session_score(table, s);
  table.table[pairs.front()] = 0.9;
  CHECK(session_score(table, s) >= before);
  CHECK(session_score(table, s) <= 1.0);
}

TEST_CASE("pair features are finite and named") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto x = pair_features(test::random_text(rng), test::random_text(rng));
    for (const auto& [j, v] : x) {
      CHECK(j < pair_feature_names().size());
      CHECK(std::isfinite(v));
    }
  }
}
