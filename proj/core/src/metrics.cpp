#include "todsim/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "todsim/errors.hpp"

namespace todsim {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    const bool word = (uc >= 0x80) || (uc >= '0' && uc <= '9') || (uc >= 'a' && uc <= 'z') ||
                      (uc >= 'A' && uc <= 'Z');
    if (word) {
      cur += (uc >= 'A' && uc <= 'Z') ? static_cast<char>(uc - 'A' + 'a') : c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

MetricResult inform_success(const Session& session, const VenueDatabase& db) {
  MetricResult r;
  bool inform = true;
  for (const auto& [domain, dg] : session.goal.domains) {
    if (dg.informable.empty()) continue;
    bool informed = false;
    const auto eit = db.entities().find(domain);
    const bool named = eit != db.entities().end() && !eit->second.empty();
    bool any_inform = false;
    bool contradiction = false;
    for (const auto& turn : session.turns) {
      for (const auto& a : turn.system_acts) {
        if (a.domain != domain || a.value.empty()) continue;
        if (a.type != ActType::kOffer && a.type != ActType::kInform) continue;
        if (named) {
          if (informed || a.slot != Ontology::kNameSlot) continue;
          const Entity* e = db.find_by_name(domain, a.value);
          if (e != nullptr && entity_satisfies(*e, dg.informable)) {
            informed = true;
            if (!r.offered_entity) r.offered_entity = a.value;
          }
        } else if (a.type == ActType::kInform) {
          any_inform = true;
          auto c = dg.informable.find(a.slot);
          if (c != dg.informable.end() && c->second != a.value) contradiction = true;
        }
      }
    }
    if (!named) informed = any_inform && !contradiction;
    inform = inform && informed;
  }
  r.inform = inform;

  bool requests = true;
  bool bookings = true;
  for (const auto& [domain, dg] : session.goal.domains) {
    for (const auto& slot : dg.requestable) {
      bool answered = false;
      for (const auto& turn : session.turns) {
        for (const auto& a : turn.system_acts) {
          if ((a.type == ActType::kInform || a.type == ActType::kOffer) && a.domain == domain &&
              a.slot == slot && !a.value.empty()) {
            answered = true;
          }
        }
      }
      if (answered) r.answered_requestables.emplace(domain, slot);
      requests = requests && answered;
    }
    if (dg.needs_booking) {
      bool booked = false;
      for (const auto& turn : session.turns) {
        for (const auto& a : turn.system_acts) {
          if (a.type == ActType::kBook && a.domain == domain &&
              a.slot == Ontology::kReferenceSlot && !a.value.empty()) {
            booked = true;
          }
        }
      }
      bookings = bookings && booked;
    }
  }
  r.success = r.inform && requests && bookings;
  return r;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                   tokens.begin() + static_cast<long>(i + n))];
  }
  return out;
}

}  // namespace

double corpus_bleu(std::span<const std::vector<std::string>> hypotheses,
                   std::span<const std::vector<std::string>> references) {
  if (hypotheses.empty()) throw PreconditionError("corpus_bleu: empty hypothesis list");
  if (hypotheses.size() != references.size()) {
    throw PreconditionError("corpus_bleu: hypothesis/reference count mismatch");
  }
  constexpr std::size_t kMaxOrder = 4;
  std::array<double, kMaxOrder> matches{};
  std::array<double, kMaxOrder> totals{};
  double hyp_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const auto& hyp = hypotheses[k];
    const auto& ref = references[k];
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const auto h = count_ngrams(hyp, n);
      const auto r = count_ngrams(ref, n);
      for (const auto& [gram, c] : h) {
        auto it = r.find(gram);
        if (it != r.end()) matches[n - 1] += std::min(c, it->second);
        totals[n - 1] += c;
      }
    }
  }
  if (hyp_len == 0.0 || matches[0] == 0.0) return 0.0;

  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (totals[n] == 0.0) continue;
    const double p = matches[n] > 0.0 ? matches[n] / totals[n] : 1.0 / (2.0 * totals[n]);
    log_sum += std::log(p);
    ++orders;
  }
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  const double bleu = 100.0 * bp * std::exp(log_sum / orders);
  return std::clamp(bleu, 0.0, 100.0);
}

double combined_score(double inform_pct, double success_pct, double bleu) {
  return (inform_pct + success_pct) / 2.0 + bleu;
}

}  // namespace todsim
