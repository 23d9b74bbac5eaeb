#include "todsim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "json_codec.hpp"

namespace todsim {

using detail::json;

namespace {

constexpr const char* kConfigFormat = "todsim-config";

int get_int32(const json& j, const std::string& path) {
  const auto v = detail::get_int(j, path);
  if (v < INT32_MIN || v > INT32_MAX) detail::violation(path, "integer out of range");
  return static_cast<int>(v);
}

double get_finite(const json& j, const std::string& path) {
  const double v = detail::get_number(j, path);
  if (!std::isfinite(v)) detail::violation(path, "must be finite");
  return v;
}

// Reads an optional member into `out` using `get`.
template <typename T, typename Get>
void read(const json& obj, const char* key, const std::string& path, T& out, Get get) {
  if (const json* m = detail::optional_member(obj, key)) out = get(*m, path + "/" + key);
}

void read_rl(const json& j, RLConfig& rl) {
  const std::string p = "/rl";
  detail::require_object(j, p);
  detail::only_keys(j,
                    {"gamma", "alpha", "beta", "learning_rate", "goals_per_epoch",
                     "episodes_per_phase", "epochs", "sent_floor", "baseline", "baseline_decay",
                     "max_tokens", "dev_selection"},
                    p);
  read(j, "gamma", p, rl.gamma, get_finite);
  read(j, "alpha", p, rl.alpha, get_finite);
  read(j, "beta", p, rl.beta, get_finite);
  read(j, "learning_rate", p, rl.learning_rate, get_finite);
  read(j, "goals_per_epoch", p, rl.goals_per_epoch, get_int32);
  read(j, "episodes_per_phase", p, rl.episodes_per_phase, get_int32);
  read(j, "epochs", p, rl.epochs, get_int32);
  read(j, "sent_floor", p, rl.sent_floor, get_finite);
  read(j, "baseline", p, rl.baseline, detail::get_bool);
  read(j, "baseline_decay", p, rl.baseline_decay, get_finite);
  read(j, "max_tokens", p, rl.max_tokens, get_int32);
  if (const json* m = detail::optional_member(j, "dev_selection")) {
    const auto s = parse_dev_selection(detail::get_string(*m, p + "/dev_selection"));
    if (!s) detail::violation(p + "/dev_selection", "must be none, first_half or second_half");
    rl.dev_selection = *s;
  }
}

void read_termination(const json& j, TerminationConfig& t) {
  const std::string p = "/termination";
  detail::require_object(j, p);
  detail::only_keys(j, {"max_turns", "farewell_acts"}, p);
  read(j, "max_turns", p, t.max_turns, get_int32);
  if (const json* acts = detail::optional_member(j, "farewell_acts")) {
    detail::require_array(*acts, p + "/farewell_acts");
    t.farewell_acts.clear();
    for (std::size_t i = 0; i < acts->size(); ++i) {
      const std::string ap = p + "/farewell_acts/" + std::to_string(i);
      const std::string name = detail::get_string((*acts)[i], ap);
      auto type = parse_act_type(name);
      if (!type) detail::violation(ap, "unknown act '" + name + "'");
      t.farewell_acts.insert(*type);
    }
  }
}

void check_ranges(const RunConfig& cfg, const std::function<void(const std::string&,
                                                                 const std::string&)>& fail) {
  if (cfg.termination.max_turns < 1) fail("/termination/max_turns", "must be >= 1");
  if (cfg.lm_order < 1) fail("/lm/order", "must be >= 1");
  if (!(cfg.lm_smoothing > 0.0)) fail("/lm/smoothing", "must be > 0");
  if (!(cfg.negative_ratio > 0.0)) fail("/session_scorer/negative_ratio", "must be > 0");
  if (!(cfg.classifier.learning_rate > 0.0)) fail("/session_scorer/learning_rate", "must be > 0");
  if (!(cfg.classifier.tolerance >= 0.0)) fail("/session_scorer/tolerance", "must be >= 0");
  if (cfg.classifier.max_steps < 1) fail("/session_scorer/max_steps", "must be >= 1");
  if (cfg.timeout.count() < 1) fail("/timeout_seconds", "must be at least 1 ms");
  if (cfg.limit && *cfg.limit == 0) fail("/limit", "must be >= 1");
  if (cfg.corpus.empty()) fail("/corpus", "must not be empty");
  if (cfg.simulator.empty()) fail("/simulator", "must not be empty");
  if (cfg.system.empty()) fail("/system", "must not be empty");
  try {
    validate(cfg.rl);
  } catch (const ConfigError& e) {
    fail("/rl", e.what());
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& file) {
  RunConfig cfg;
  try {
    const json doc = detail::parse_json(text);
    detail::require_object(doc, "");
    detail::only_keys(doc,
                      {"format", "version", "mode", "corpus", "simulator", "system",
                       "sentence_scorer", "pair_scorer", "termination", "rl", "lm",
                       "session_scorer", "seed", "workers", "limit", "timeout_seconds"},
                      "");
    if (doc.contains("format") || doc.contains("version")) detail::check_header(doc, kConfigFormat);
    if (const json* m = detail::optional_member(doc, "mode")) {
      const std::string mode = detail::get_string(*m, "/mode");
      if (mode == "interactive") {
        cfg.mode = EvalMode::kInteractive;
      } else if (mode == "traditional") {
        cfg.mode = EvalMode::kTraditional;
      } else {
        detail::violation("/mode", "expected 'interactive' or 'traditional', found '" + mode + "'");
      }
    }
    read(doc, "corpus", "", cfg.corpus, detail::get_string);
    read(doc, "simulator", "", cfg.simulator, detail::get_string);
    read(doc, "system", "", cfg.system, detail::get_string);
    if (const json* m = detail::optional_member(doc, "sentence_scorer")) {
      cfg.sentence_scorer = detail::get_string(*m, "/sentence_scorer");
    }
    if (const json* m = detail::optional_member(doc, "pair_scorer")) {
      cfg.pair_scorer = detail::get_string(*m, "/pair_scorer");
    }
    if (const json* m = detail::optional_member(doc, "termination")) {
      read_termination(*m, cfg.termination);
    }
    if (const json* m = detail::optional_member(doc, "rl")) read_rl(*m, cfg.rl);
    if (const json* m = detail::optional_member(doc, "lm")) {
      detail::require_object(*m, "/lm");
      detail::only_keys(*m, {"order", "smoothing"}, "/lm");
      read(*m, "order", "/lm", cfg.lm_order, get_int32);
      read(*m, "smoothing", "/lm", cfg.lm_smoothing, get_finite);
    }
    if (const json* m = detail::optional_member(doc, "session_scorer")) {
      const std::string p = "/session_scorer";
      detail::require_object(*m, p);
      detail::only_keys(*m, {"negative_ratio", "learning_rate", "tolerance", "max_steps"}, p);
      read(*m, "negative_ratio", p, cfg.negative_ratio, get_finite);
      read(*m, "learning_rate", p, cfg.classifier.learning_rate, get_finite);
      read(*m, "tolerance", p, cfg.classifier.tolerance, get_finite);
      read(*m, "max_steps", p, cfg.classifier.max_steps, get_int32);
    }
    read(doc, "seed", "", cfg.seed, detail::get_uint);
    if (const json* m = detail::optional_member(doc, "workers")) {
      const auto w = detail::get_uint(*m, "/workers");
      if (w > 4096) detail::violation("/workers", "must be <= 4096");
      cfg.workers = static_cast<unsigned>(w);
    }
    if (const json* m = detail::optional_member(doc, "limit")) {
      cfg.limit = static_cast<std::size_t>(detail::get_uint(*m, "/limit"));
    }
    if (const json* m = detail::optional_member(doc, "timeout_seconds")) {
      const double s = get_finite(*m, "/timeout_seconds");
      if (!(s > 0.0) || s > 86400.0) detail::violation("/timeout_seconds", "must be in (0, 86400]");
      cfg.timeout = std::chrono::milliseconds(std::max<long long>(1, std::llround(s * 1000.0)));
    }
    check_ranges(cfg, [](const std::string& path, const std::string& rule) {
      detail::violation(path, rule);
    });
  } catch (const detail::SchemaViolation& v) {
    throw ConfigError(file + ": " + (v.path.empty() ? "/" : v.path) + ": " + v.rule);
  }
  cfg.rl.seed = cfg.seed;
  cfg.rl.termination = cfg.termination;
  return cfg;
}

std::string encode_run_config(const RunConfig& cfg) {
  json doc = detail::header(kConfigFormat);
  doc["mode"] = std::string(to_string(cfg.mode));
  doc["corpus"] = cfg.corpus;
  doc["simulator"] = cfg.simulator;
  doc["system"] = cfg.system;
  if (cfg.sentence_scorer) doc["sentence_scorer"] = *cfg.sentence_scorer;
  if (cfg.pair_scorer) doc["pair_scorer"] = *cfg.pair_scorer;
  json farewell = json::array();
  for (ActType a : cfg.termination.farewell_acts) farewell.push_back(std::string(to_string(a)));
  doc["termination"] = {{"max_turns", cfg.termination.max_turns}, {"farewell_acts", farewell}};
  const RLConfig& rl = cfg.rl;
  doc["rl"] = {{"gamma", rl.gamma},
               {"alpha", rl.alpha},
               {"beta", rl.beta},
               {"learning_rate", rl.learning_rate},
               {"goals_per_epoch", rl.goals_per_epoch},
               {"episodes_per_phase", rl.episodes_per_phase},
               {"epochs", rl.epochs},
               {"sent_floor", rl.sent_floor},
               {"baseline", rl.baseline},
               {"baseline_decay", rl.baseline_decay},
               {"max_tokens", rl.max_tokens},
               {"dev_selection", std::string(to_string(rl.dev_selection))}};
  doc["lm"] = {{"order", cfg.lm_order}, {"smoothing", cfg.lm_smoothing}};
  doc["session_scorer"] = {{"negative_ratio", cfg.negative_ratio},
                           {"learning_rate", cfg.classifier.learning_rate},
                           {"tolerance", cfg.classifier.tolerance},
                           {"max_steps", cfg.classifier.max_steps}};
  doc["seed"] = cfg.seed;
  doc["workers"] = cfg.workers;
  if (cfg.limit) doc["limit"] = *cfg.limit;
  doc["timeout_seconds"] = static_cast<double>(cfg.timeout.count()) / 1000.0;
  return detail::dump_canonical(doc);
}

void validate(const RunConfig& cfg) {
  check_ranges(cfg, [](const std::string& path, const std::string& rule) {
    throw ConfigError("config: " + path + ": " + rule);
  });
}

void apply_environment(RunConfig& cfg, const EnvLookup& lookup) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    const char* v = lookup(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("TODSIM_SYSTEM_ENDPOINT")) cfg.system = *v;
  if (auto v = get("TODSIM_SIMULATOR_ENDPOINT")) cfg.simulator = *v;
  if (auto v = get("TODSIM_LM_SCORER_ENDPOINT")) cfg.sentence_scorer = *v;
  if (auto v = get("TODSIM_PAIR_SCORER_ENDPOINT")) cfg.pair_scorer = *v;
  if (auto v = get("TODSIM_TIMEOUT")) {
    char* end = nullptr;
    const double s = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0' || !(s > 0.0) || s > 86400.0) {
      throw ConfigError("TODSIM_TIMEOUT: expected seconds in (0, 86400], found '" + *v + "'");
    }
    cfg.timeout = std::chrono::milliseconds(std::max<long long>(1, std::llround(s * 1000.0)));
  }
}

void apply_environment(RunConfig& cfg) {
  apply_environment(cfg, [](const char* name) { return std::getenv(name); });
}

unsigned effective_workers(const RunConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace todsim
