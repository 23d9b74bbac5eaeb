#include <algorithm>

#include "doctest.h"
#include "support.hpp"
#include "todsim/domain.hpp"
#include "todsim/errors.hpp"

using namespace todsim;

namespace {

Ontology restaurant_ontology() {
  DomainSchema r;
  r.informable = {{"food", {"italian", "chinese"}}, {"area", {"centre", "north"}}};
  r.requestable = {"phone", "postcode"};
  return Ontology({{"restaurant", r}});
}

bool has_rule(const std::vector<GoalViolation>& v, const std::string& rule) {
  return std::any_of(v.begin(), v.end(), [&](const GoalViolation& g) { return g.rule == rule; });
}

}  // namespace

TEST_CASE("canonical trims and lowercases ASCII only") {
  CHECK(canonical("  Italian \t") == "italian");
  CHECK(canonical("ÉCOLE") == "École");
  CHECK(canonical("") == "");
}

TEST_CASE("act invariants") {
  CHECK_NOTHROW(DialogueAct::make(ActType::kInform, "Restaurant", "Food", "Italian"));
  CHECK(DialogueAct::make(ActType::kInform, "Restaurant", "Food", "Italian").value == "italian");
  CHECK_THROWS_AS(DialogueAct::make(ActType::kRequest, "restaurant", "phone", "123"),
                  InvalidArgument);
  CHECK_THROWS_AS(DialogueAct::make(ActType::kRequest, "restaurant"), InvalidArgument);
  CHECK_THROWS_AS(DialogueAct::make(ActType::kBye, "restaurant"), InvalidArgument);
  CHECK_THROWS_AS(DialogueAct::make(ActType::kInform), InvalidArgument);
  CHECK_THROWS_AS(DialogueAct::make(ActType::kNoOffer, "restaurant", "", "x"), InvalidArgument);
  CHECK_NOTHROW(DialogueAct::make(ActType::kNoOffer, "restaurant"));
  CHECK(to_string(DialogueAct::make(ActType::kInform, "restaurant", "food", "italian")) ==
        "inform(restaurant,food,italian)");
}

TEST_CASE("act type names round-trip") {
  for (ActType t : kAllActTypes) CHECK(parse_act_type(to_string(t)) == t);
  CHECK_FALSE(parse_act_type("recommend").has_value());
}

TEST_CASE("validate_goal") {
  const Ontology o = restaurant_ontology();
  Goal ok;
  ok.domains["restaurant"].informable["food"] = "italian";
  ok.domains["restaurant"].requestable = {"phone"};
  CHECK(validate_goal(ok, o).empty());

  Goal overlap = ok;
  overlap.domains["restaurant"].requestable.insert("food");
  CHECK(has_rule(validate_goal(overlap, o), "overlapping slot sets"));

  Goal unknown_domain;
  unknown_domain.domains["spa"].requestable = {"phone"};
  CHECK(has_rule(validate_goal(unknown_domain, o), "unknown domain"));

  Goal bad_value = ok;
  bad_value.domains["restaurant"].informable["food"] = "martian";
  CHECK(has_rule(validate_goal(bad_value, o), "unknown value"));

  Goal bad_slot = ok;
  bad_slot.domains["restaurant"].requestable.insert("fax");
  CHECK(has_rule(validate_goal(bad_slot, o), "unknown slot"));

  Goal empty_entry;
  empty_entry.domains["restaurant"];
  CHECK(has_rule(validate_goal(empty_entry, o), "empty domain goal"));

  CHECK(validate_goal(Goal{}, o).empty());
}

TEST_CASE("goal_to_items follows the construction rule") {
  Goal g;
  g.domains["restaurant"].informable = {{"food", "italian"}, {"area", "centre"}};
  g.domains["restaurant"].requestable = {"phone"};
  const std::set<GoalItem> expected = {GoalItem::inform("restaurant", "food", "italian"),
                                       GoalItem::inform("restaurant", "area", "centre"),
                                       GoalItem::request("restaurant", "phone")};
  CHECK(goal_to_items(g) == expected);

  g.domains["hotel"].needs_booking = true;
  CHECK(goal_to_items(g).size() == 4);
  CHECK(goal_to_items(g).contains(GoalItem::booking("hotel")));
}

TEST_CASE("goal_to_items size equals the obligation count") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Goal g = test::random_goal(rng, toy_ontology(), true);
    std::size_t n = 0;
    for (const auto& [d, dg] : g.domains) {
      n += dg.informable.size() + dg.requestable.size() + (dg.needs_booking ? 1 : 0);
    }
    CHECK(goal_to_items(g).size() == n);
    CHECK(goal_to_items(g) == goal_to_items(g));
  }
}

TEST_CASE("goal state starts with every item unfinished") {
  Goal g;
  g.domains["restaurant"].informable["food"] = "italian";
  const GoalState s = GoalState::from_goal(g);
  CHECK(s.unfinished == goal_to_items(g));
  CHECK(s.finished.empty());
  CHECK_FALSE(s.complete());
  CHECK(GoalState::from_goal(Goal{}).complete());
}

TEST_CASE("ontology slot and value validity") {
  const Ontology o = restaurant_ontology();
  CHECK(o.is_informable("restaurant", "food"));
  CHECK(o.is_requestable("restaurant", "phone"));
  CHECK(o.is_valid_slot("restaurant", "name"));
  CHECK(o.is_valid_slot("restaurant", "reference"));
  CHECK_FALSE(o.is_valid_slot("restaurant", "fax"));
  CHECK(o.is_valid_value("restaurant", "food", "chinese"));
  CHECK_FALSE(o.is_valid_value("restaurant", "food", "martian"));
  CHECK(o.is_valid_value("restaurant", "phone", "anything at all"));
}

TEST_CASE("venue database validation and query") {
  const Ontology o = restaurant_ontology();
  std::map<std::string, std::vector<Entity>> rows = {
      {"restaurant",
       {{{"name", "a"}, {"food", "italian"}, {"area", "centre"}},
        {{"name", "b"}, {"food", "chinese"}, {"area", "centre"}},
        {{"name", "c"}, {"food", "italian"}, {"area", "north"}}}}};
  const VenueDatabase db(o, rows);
  CHECK(db.query("restaurant", {{"food", "italian"}}).size() == 2);
  CHECK(db.query("restaurant", {{"food", "italian"}, {"area", "north"}}).size() == 1);
  CHECK(db.query("restaurant", {}).size() == 3);
  CHECK(db.query("hotel", {}).empty());
  CHECK(db.find_by_name("restaurant", "b")->at("food") == "chinese");
  CHECK(db.find_by_name("restaurant", "zzz") == nullptr);

  auto dup = rows;
  dup["restaurant"].push_back({{"name", "a"}});
  CHECK_THROWS_AS(VenueDatabase(o, dup), InvalidArgument);
  auto nameless = rows;
  nameless["restaurant"].push_back({{"food", "italian"}});
  CHECK_THROWS_AS(VenueDatabase(o, nameless), InvalidArgument);
  auto bad = rows;
  bad["restaurant"].push_back({{"name", "d"}, {"food", "martian"}});
  CHECK_THROWS_AS(VenueDatabase(o, bad), InvalidArgument);
}

TEST_CASE("toy database queries agree with a linear scan") {
  const VenueDatabase& db = test::toy_db();
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const BeliefState b = test::random_belief(rng, db.ontology());
    for (const auto& [d, _] : db.ontology().domains()) {
      CHECK(db.query(d, b.domain(d)) == test::scan(db, d, b.domain(d)));
    }
  }
}

TEST_CASE("booking references are deterministic and distinct") {
  CHECK(booking_reference("restaurant", "a") == booking_reference("restaurant", "a"));
  CHECK(booking_reference("restaurant", "a") != booking_reference("restaurant", "b"));
  CHECK_FALSE(booking_reference("hotel", "a").empty());
}

TEST_CASE("termination names round-trip") {
  for (auto t : {Termination::kGoalsComplete, Termination::kFarewellAct,
                 Termination::kMaxTurnsExceeded, Termination::kReplayExhausted}) {
    CHECK(parse_termination(to_string(t)) == t);
  }
}
