#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "todsim/domain.hpp"

namespace todsim {

// Lowercase; any character that is not ASCII alphanumeric (bytes >= 0x80 are
// kept as letters) separates tokens and is dropped.
std::vector<std::string> tokenize(std::string_view text);

struct MetricResult {
  bool inform = false;
  bool success = false;
  std::optional<std::string> offered_entity;
  std::set<std::pair<std::string, std::string>> answered_requestables;
};

// inform: every goal domain with informable constraints saw a system
// offer/inform of a name whose record satisfies all of them (domains with no
// named entities accept any non-contradicting system inform instead).
// success: inform, every requested slot given a value, every booking
// confirmed with a reference.
MetricResult inform_success(const Session& session, const VenueDatabase& db);

// Corpus BLEU-4, uniform weights, brevity penalty, scaled to [0, 100].
// Zero matches at order n >= 2 count as 1/(2 * denominator); zero unigram
// matches give 0; orders with no n-grams in any hypothesis are left out of the
// geometric mean. Throws PreconditionError on empty or mismatched input.
double corpus_bleu(std::span<const std::vector<std::string>> hypotheses,
                   std::span<const std::vector<std::string>> references);

// (inform + success) / 2 + bleu
double combined_score(double inform_pct, double success_pct, double bleu);

}  // namespace todsim
