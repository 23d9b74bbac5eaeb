#include "todsim/toy.hpp"

#include <algorithm>
#include <cstdio>

#include "todsim/agents.hpp"
#include "todsim/rng.hpp"

namespace todsim {

namespace {

const std::set<std::string> kAreas = {"centre", "north", "south", "east", "west"};
const std::set<std::string> kPrices = {"cheap", "moderate", "expensive"};
const std::set<std::string> kRequestables = {"phone", "postcode", "address"};

struct RestaurantRow {
  const char* name;
  const char* food;
  const char* area;
  const char* price;
  const char* phone;
  const char* postcode;
  const char* address;
};

struct HotelRow {
  const char* name;
  const char* area;
  const char* price;
  const char* stars;
  const char* phone;
  const char* postcode;
  const char* address;
};

constexpr RestaurantRow kRestaurants[] = {
    {"pizza express", "italian", "centre", "moderate", "01223324033", "cb21sj", "7 jesus lane"},
    {"la margherita", "italian", "west", "cheap", "01223315232", "cb30ad", "15 magdalene street"},
    {"prezzo", "italian", "west", "moderate", "01223350106", "cb30ad", "21 huntingdon road"},
    {"golden wok", "chinese", "north", "moderate", "01223350688", "cb43hl", "191 histon road"},
    {"jinling noodle bar", "chinese", "centre", "moderate", "01223566188", "cb23pp",
     "11 peas hill"},
    {"hakka", "chinese", "north", "expensive", "01223568988", "cb41jy", "24 milton road"},
    {"curry garden", "indian", "centre", "expensive", "01223302330", "cb21dp",
     "106 regent street"},
    {"the gandhi", "indian", "south", "cheap", "01223353942", "cb28pb", "72 regent street"},
    {"the golden curry", "indian", "east", "cheap", "01223329432", "cb58jj",
     "mill road city centre"},
    {"midsummer house", "british", "east", "expensive", "01223369299", "cb41ha",
     "midsummer common"},
    {"the copper kettle", "british", "centre", "moderate", "01223365068", "cb21rq",
     "4 kings parade"},
    {"cote", "french", "centre", "expensive", "01223311053", "cb21uf", "bridge street"},
    {"restaurant two two", "french", "north", "expensive", "01223351880", "cb43ax",
     "22 chesterton road"},
};

constexpr HotelRow kHotels[] = {
    {"acorn guest house", "north", "moderate", "4", "01223353888", "cb41da", "154 chesterton road"},
    {"alexander bed and breakfast", "centre", "cheap", "4", "01223525725", "cb12de",
     "56 saint barnabas road"},
    {"gonville hotel", "centre", "expensive", "3", "01223366611", "cb11ly", "gonville place"},
    {"huntingdon marriott hotel", "west", "expensive", "4", "01480446000", "pe296fl",
     "kingfisher way"},
    {"the lensfield hotel", "south", "expensive", "3", "01223355017", "cb21en",
     "53 lensfield road"},
    {"avalon", "north", "moderate", "4", "01223353071", "cb41da", "62 gilbert road"},
    {"express by holiday inn", "east", "expensive", "2", "01223866800", "cb13lh",
     "15 cambridge road"},
    {"a and b guest house", "east", "moderate", "4", "01223315702", "cb12dp",
     "124 tenison road"},
    {"cityroomz", "centre", "moderate", "2", "01223304050", "cb12tz", "sleeperz hotel station road"},
    {"rosas bed and breakfast", "south", "cheap", "4", "01223512596", "cb22ha",
     "53 roseford road"},
    {"the cambridge belfry", "west", "cheap", "5", "01954714600", "cb236bw", "back lane"},
};

}  // namespace

Ontology toy_ontology() {
  std::map<std::string, DomainSchema> domains;
  DomainSchema restaurant;
  restaurant.informable["food"] = {"italian", "chinese", "indian", "british", "french"};
  restaurant.informable["area"] = kAreas;
  restaurant.informable["pricerange"] = kPrices;
  restaurant.requestable = kRequestables;
  domains["restaurant"] = restaurant;

  DomainSchema hotel;
  hotel.informable["area"] = kAreas;
  hotel.informable["pricerange"] = kPrices;
  hotel.informable["stars"] = {"2", "3", "4", "5"};
  hotel.requestable = kRequestables;
  domains["hotel"] = hotel;
  return Ontology(std::move(domains));
}

VenueDatabase toy_database() {
  std::map<std::string, std::vector<Entity>> entities;
  for (const auto& r : kRestaurants) {
    entities["restaurant"].push_back({{"name", r.name},
                                      {"food", r.food},
                                      {"area", r.area},
                                      {"pricerange", r.price},
                                      {"phone", r.phone},
                                      {"postcode", r.postcode},
                                      {"address", r.address}});
  }
  for (const auto& h : kHotels) {
    entities["hotel"].push_back({{"name", h.name},
                                 {"area", h.area},
                                 {"pricerange", h.price},
                                 {"stars", h.stars},
                                 {"phone", h.phone},
                                 {"postcode", h.postcode},
                                 {"address", h.address}});
  }
  return VenueDatabase(toy_ontology(), std::move(entities));
}

std::vector<Goal> sample_goals(const VenueDatabase& db, std::size_t n, std::uint64_t seed,
                               const GoalSampling& opts) {
  if (opts.max_domains < 1 || opts.min_informable < 0 ||
      opts.max_informable < opts.min_informable || opts.max_requestable < 0) {
    throw PreconditionError("sample_goals: inconsistent sampling options");
  }
  std::vector<std::string> domains;
  for (const auto& [d, ents] : db.entities()) {
    if (!ents.empty()) domains.push_back(d);
  }
  if (domains.empty()) throw PreconditionError("sample_goals: database has no entities");

  Rng rng(seed);
  auto between = [&](int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1))); };
  std::vector<Goal> goals;
  goals.reserve(n);
  for (std::size_t g = 0; g < n; ++g) {
    Goal goal;
    std::vector<std::string> order = domains;
    rng.shuffle(order.begin(), order.end());
    const int ndom = between(1, std::min<int>(opts.max_domains, static_cast<int>(order.size())));
    for (int k = 0; k < ndom; ++k) {
      const std::string& d = order[static_cast<std::size_t>(k)];
      const DomainSchema& schema = *db.ontology().schema(d);
      const auto& ents = db.entities().at(d);
      const Entity& e = ents[rng.below(ents.size())];

      std::vector<std::string> inf;
      for (const auto& [s, _] : schema.informable) {
        if (e.contains(s)) inf.push_back(s);
      }
      rng.shuffle(inf.begin(), inf.end());
      const int hi_inf = std::min<int>(opts.max_informable, static_cast<int>(inf.size()));
      const int n_inf = between(std::min(opts.min_informable, hi_inf), hi_inf);

      std::vector<std::string> req(schema.requestable.begin(), schema.requestable.end());
      rng.shuffle(req.begin(), req.end());
      const int n_req = between(0, std::min<int>(opts.max_requestable, static_cast<int>(req.size())));
      const bool book = rng.uniform() < opts.booking_probability;

      DomainGoal dg;
      for (int i = 0; i < n_inf; ++i) {
        const auto& s = inf[static_cast<std::size_t>(i)];
        dg.informable[s] = e.at(s);
      }
      for (int i = 0; i < n_req; ++i) dg.requestable.insert(req[static_cast<std::size_t>(i)]);
      dg.needs_booking = book;
      if (dg.informable.empty() && dg.requestable.empty() && !dg.needs_booking) {
        dg.requestable.insert(req.front());
      }
      goal.domains[d] = std::move(dg);
    }
    goals.push_back(std::move(goal));
  }
  return goals;
}

AnnotatedDialogue to_annotated(const Session& session) {
  AnnotatedDialogue a;
  a.id = session.id;
  a.goal = session.goal;
  for (const auto& t : session.turns) {
    a.turns.push_back({t.user_utterance, t.user_acts, t.system_utterance, t.system_acts});
  }
  return a;
}

std::vector<AnnotatedDialogue> annotate_goals(std::span<const Goal> goals, const VenueDatabase& db,
                                              std::uint64_t seed, const std::string& id_prefix) {
  AgendaSimulator sim(1);
  RuleSystem sys(db);
  std::vector<AnnotatedDialogue> out;
  out.reserve(goals.size());
  for (std::size_t i = 0; i < goals.size(); ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", id_prefix.c_str(), i);
    out.push_back(to_annotated(
        run_interactive(sim, sys, goals[i], db, TerminationConfig{}, derive_seed(seed, i), id)));
  }
  return out;
}

CorpusBundle toy_corpus() {
  CorpusBundle b;
  b.ontology = toy_ontology();
  b.db = toy_database();
  b.goals = sample_goals(b.db, kToyGoalCount, kToySeed);
  b.dialogues = annotate_goals(std::span(b.goals).first(kToyDialogueCount), b.db, kToySeed, "toy");
  return b;
}

}  // namespace todsim
