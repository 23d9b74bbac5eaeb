#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "support.hpp"
#include "todsim/errors.hpp"
#include "todsim/goal_tracker.hpp"

using namespace todsim;

namespace {

std::vector<DialogueAct> acts(std::initializer_list<DialogueAct> a) { return a; }

}  // namespace

TEST_CASE("request obligations are finished by a system answer only") {
  GoalState s;
  s.unfinished = {GoalItem::request("restaurant", "phone")};
  const auto answered = acts({DialogueAct::make(ActType::kInform, "restaurant", "phone", "01223-111")});
  CHECK(extract_finished(s, {}, answered) == s.unfinished);
  const auto asked = acts({DialogueAct::make(ActType::kRequest, "restaurant", "area")});
  CHECK(extract_finished(s, {}, asked).empty());
  // The user saying it does not count.
  CHECK(extract_finished(s, answered, {}).empty());
}

TEST_CASE("finish rules agree with the oracle for every act type and item kind") {
  const std::vector<GoalItem> items = {GoalItem::inform("restaurant", "food", "italian"),
                                       GoalItem::request("restaurant", "phone"),
                                       GoalItem::booking("restaurant")};
  // Every act type against every (slot, value) shape relevant to the items.
  std::vector<DialogueAct> candidates;
  for (ActType t : kAllActTypes) {
    if (is_bare(t)) {
      candidates.push_back(DialogueAct::make(t));
      continue;
    }
    for (const char* d : {"restaurant", "hotel"}) {
      for (auto [s, v] : {std::pair<const char*, const char*>{"food", "italian"},
                          {"food", "chinese"}, {"food", ""}, {"phone", "01223-111"},
                          {"phone", ""}, {"reference", "ref-1"}, {"reference", ""}, {"", ""}}) {
        DialogueAct a{t, d, s, v};
        if (!act_violation(a)) candidates.push_back(a);
      }
    }
  }
  for (const auto& item : items) {
    GoalState s;
    s.unfinished = {item};
    for (const auto& a : candidates) {
      for (int side = 0; side < 2; ++side) {
        std::vector<DialogueAct> user, sys;
        (side == 0 ? user : sys).push_back(a);
        const bool expected = test::finishes(item, user, sys);
        const bool got = extract_finished(s, user, sys).contains(item);
        CHECK_MESSAGE(got == expected, to_string(item), " by ", side == 0 ? "user " : "system ",
                      to_string(a));
      }
    }
  }
}

TEST_CASE("update moves items and rejects unknown ones") {
  GoalState s;
  s.unfinished = {GoalItem::request("restaurant", "phone"), GoalItem::booking("restaurant")};
  const GoalState n = update(s, {GoalItem::booking("restaurant")});
  CHECK(n.unfinished == std::set<GoalItem>{GoalItem::request("restaurant", "phone")});
  CHECK(n.finished == std::set<GoalItem>{GoalItem::booking("restaurant")});
  CHECK_THROWS_AS(update(n, {GoalItem::booking("restaurant")}), PreconditionError);
  CHECK(update(s, {}) == s);
}

TEST_CASE("update with all items in any order empties the unfinished set") {
  const std::vector<GoalItem> items = {GoalItem::inform("restaurant", "food", "italian"),
                                       GoalItem::request("restaurant", "phone"),
                                       GoalItem::booking("restaurant"),
                                       GoalItem::inform("hotel", "area", "north")};
  for (std::size_t n = 1; n <= items.size(); ++n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
      GoalState s;
      s.unfinished.insert(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
      for (std::size_t i : order) s = update(s, {items[i]});
      CHECK(s.unfinished.empty());
      CHECK(s.finished.size() == n);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("termination priority") {
  TerminationConfig cfg;
  GoalState done;
  GoalState open;
  open.unfinished = {GoalItem::request("restaurant", "phone")};
  const auto bye = acts({DialogueAct::make(ActType::kBye)});
  const auto thank = acts({DialogueAct::make(ActType::kThank)});

  CHECK(should_terminate(done, 0, bye, {}, cfg) == Termination::kGoalsComplete);
  CHECK(should_terminate(done, 25, {}, {}, cfg) == Termination::kGoalsComplete);
  CHECK(should_terminate(open, 0, bye, {}, cfg) == Termination::kFarewellAct);
  CHECK(should_terminate(open, 0, thank, {}, cfg) == Termination::kFarewellAct);
  CHECK(should_terminate(open, 19, bye, {}, cfg) == Termination::kFarewellAct);
  CHECK(should_terminate(open, 19, {}, {}, cfg) == Termination::kMaxTurnsExceeded);
  CHECK_FALSE(should_terminate(open, 18, {}, {}, cfg).has_value());
  CHECK(should_terminate(open, 3, {}, bye, cfg) == Termination::kFarewellAct);

  TerminationConfig only_bye;
  only_bye.farewell_acts = {ActType::kBye};
  CHECK_FALSE(should_terminate(open, 0, thank, {}, only_bye).has_value());
}

TEST_CASE("tracker invariants over random act sequences") {
  const Ontology o = toy_ontology();
  Rng rng(2024);
  for (int c = 0; c < 1000; ++c) {
    const Goal goal = test::random_goal(rng, o, true);
    const std::set<GoalItem> all = goal_to_items(goal);
    GoalState s = GoalState::from_goal(goal);
    const int steps = 1 + static_cast<int>(rng.below(10));
    for (int t = 0; t < steps; ++t) {
      // Bias the acts towards the goal so items actually get finished.
      std::vector<DialogueAct> user = test::random_acts(rng, o, 3);
      std::vector<DialogueAct> sys = test::random_acts(rng, o, 3);
      for (const auto& item : s.unfinished) {
        if (rng.below(4) != 0) continue;
        if (item.kind == GoalItemKind::kInform) {
          user.push_back(DialogueAct::make(ActType::kInform, item.domain, item.slot, item.value));
        } else if (item.kind == GoalItemKind::kRequest) {
          sys.push_back(DialogueAct::make(ActType::kInform, item.domain, item.slot, "x"));
        } else {
          sys.push_back(DialogueAct::make(ActType::kBook, item.domain, "reference", "r"));
        }
      }
      const auto finished = extract_finished(s, user, sys);
      for (const auto& f : finished) REQUIRE(s.unfinished.contains(f));
      for (const auto& item : s.unfinished) {
        REQUIRE(finished.contains(item) == test::finishes(item, user, sys));
      }
      GoalState n = update(s, finished);
      // Monotonicity.
      REQUIRE(n.unfinished.size() <= s.unfinished.size());
      REQUIRE(std::includes(n.finished.begin(), n.finished.end(), s.finished.begin(),
                            s.finished.end()));
      // Conservation.
      std::set<GoalItem> u = n.unfinished;
      u.insert(n.finished.begin(), n.finished.end());
      REQUIRE(u == all);
      REQUIRE(std::none_of(n.unfinished.begin(), n.unfinished.end(),
                           [&](const GoalItem& i) { return n.finished.contains(i); }));
      // Fixed point: the same acts finish nothing more.
      REQUIRE(update(n, extract_finished(n, user, sys)) == n);
      s = std::move(n);
    }
  }
}
