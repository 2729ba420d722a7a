#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spectrum/harness.hpp"

namespace spectrum {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

std::vector<double> as_doubles(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_double(j[i], at_index(path, i)));
  return out;
}

ChannelSet as_channels(const json& j, const std::string& path) {
  ChannelSet out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_u64(j[i], at_index(path, i)));
  return out;
}

// Object view that remembers which keys were read, so leftovers can be
// reported as unknown fields.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* j = find(key);
    if (!j) fail(path(key), "required field is missing");
    return *j;
  }

  template <typename T, typename Conv>
  void read(const std::string& key, T& target, Conv conv) {
    if (const json* j = find(key)) target = conv(*j, path(key));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!used_.count(it.key())) fail(path(it.key()), "unknown field");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum>
Enum parse_enum(const json& j, const std::string& path, std::initializer_list<std::pair<const char*, Enum>> names) {
  const std::string value = as_string(j, path);
  std::string allowed;
  for (const auto& [name, e] : names) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  fail(path, "unknown value \"" + value + "\" (expected one of " + allowed + ")");
}

const std::initializer_list<std::pair<const char*, ExperimentConfig::Algorithm>> kAlgorithms{
    {"br-drm", ExperimentConfig::Algorithm::kBrDrm},
    {"nbrf", ExperimentConfig::Algorithm::kNbrf},
    {"naive", ExperimentConfig::Algorithm::kNaive},
    {"better-response-replay", ExperimentConfig::Algorithm::kReplay}};

const std::initializer_list<std::pair<const char*, InstanceConfig::Source>> kSources{
    {"explicit", InstanceConfig::Source::kExplicit},
    {"geometric", InstanceConfig::Source::kGeometric},
    {"regular", InstanceConfig::Source::kRegular}};

const std::initializer_list<std::pair<const char*, UpdateMechanism::Kind>> kMechanisms{
    {"backoff", UpdateMechanism::Kind::kBackoff},
    {"probabilistic", UpdateMechanism::Kind::kProbabilistic},
    {"sweep", UpdateMechanism::Kind::kSweep}};

const std::initializer_list<std::pair<const char*, EstimatorConfig::Kind>> kEstimators{
    {"exact", EstimatorConfig::Kind::kExact}, {"windowed", EstimatorConfig::Kind::kWindowed}};

const std::initializer_list<std::pair<const char*, CoolingSchedule::Kind>> kSchedules{
    {"fixed", CoolingSchedule::Kind::kFixed},
    {"logarithmic", CoolingSchedule::Kind::kLogarithmic},
    {"piecewise-constant", CoolingSchedule::Kind::kPiecewiseConstant}};

const std::initializer_list<std::pair<const char*, ExperimentConfig::Initial>> kInitials{
    {"default", ExperimentConfig::Initial::kDefault}, {"random", ExperimentConfig::Initial::kRandom}};

template <typename Enum>
const char* enum_name(Enum e, std::initializer_list<std::pair<const char*, Enum>> names) {
  for (const auto& [name, value] : names) {
    if (value == e) return name;
  }
  return "?";
}

std::pair<double, double> as_range(const json& j, const std::string& path) {
  const auto v = as_doubles(j, path);
  if (v.size() != 2) fail(path, "expected [low, high]");
  return {v[0], v[1]};
}

InstanceConfig parse_instance(const json& j, const std::string& path) {
  Reader r(j, path);
  InstanceConfig c;
  c.source = parse_enum(r.require("source"), r.path("source"), kSources);
  c.num_users = as_u64(r.require("num_users"), r.path("num_users"));
  c.num_channels = as_u64(r.require("num_channels"), r.path("num_channels"));
  r.read("channels_per_user", c.channels_per_user, as_u64);
  r.read("seed", c.seed, [](const json& v, const std::string& p) { return std::optional(as_u64(v, p)); });
  r.read("resample_per_trial", c.resample_per_trial, as_bool);
  if (c.source == InstanceConfig::Source::kExplicit) {
    if (const json* e = r.find("edges")) {
      const std::string ep = r.path("edges");
      for (std::size_t i = 0; i < as_array(*e, ep).size(); ++i) {
        const auto pair = as_channels((*e)[i], at_index(ep, i));
        if (pair.size() != 2) fail(at_index(ep, i), "expected [a, b]");
        c.edges.emplace_back(pair[0], pair[1]);
      }
    }
    const std::string up = r.path("utilities");
    const json& u = as_array(r.require("utilities"), up);
    for (std::size_t i = 0; i < u.size(); ++i) c.utilities.push_back(as_doubles(u[i], at_index(up, i)));
    c.caps = as_doubles(r.require("caps"), r.path("caps"));
    if (const json* m = r.find("mask")) {
      const std::string mp = r.path("mask");
      std::vector<std::vector<bool>> mask;
      for (std::size_t i = 0; i < as_array(*m, mp).size(); ++i) {
        const std::string row_path = at_index(mp, i);
        std::vector<bool> row;
        for (std::size_t k = 0; k < as_array((*m)[i], row_path).size(); ++k) {
          row.push_back(as_bool((*m)[i][k], at_index(row_path, k)));
        }
        mask.push_back(std::move(row));
      }
      c.mask = std::move(mask);
    }
  } else {
    if (c.source == InstanceConfig::Source::kGeometric) {
      r.read("region_radius", c.region_radius, as_double);
      r.read("interference_radius", c.interference_radius, as_double);
      r.read("connected", c.connected, as_bool);
    } else {
      c.degree = as_u64(r.require("degree"), r.path("degree"));
    }
    const json* constant = r.find("utility");
    const json* range = r.find("utility_range");
    if (constant && range) fail(r.path("utility"), "give either utility or utility_range, not both");
    if (constant) c.utility = as_double(*constant, r.path("utility"));
    if (range) std::tie(c.utility_low, c.utility_high) = as_range(*range, r.path("utility_range"));
    const json* caps = r.find("caps");
    const json* cap_range = r.find("cap_range");
    if (caps && cap_range) fail(r.path("caps"), "give either caps or cap_range, not both");
    if (caps) c.cap_pattern = as_doubles(*caps, r.path("caps"));
    if (cap_range) std::tie(c.cap_low, c.cap_high) = as_range(*cap_range, r.path("cap_range"));
  }
  r.finish();
  return c;
}

UpdateMechanism parse_mechanism(const json& j, const std::string& path) {
  Reader r(j, path);
  UpdateMechanism m;
  m.kind = parse_enum(r.require("kind"), r.path("kind"), kMechanisms);
  if (m.kind == UpdateMechanism::Kind::kBackoff) r.read("bound", m.backoff_bound, as_double);
  if (m.kind == UpdateMechanism::Kind::kProbabilistic) {
    const json& q = r.require("q");
    m.update_probs = q.is_array() ? as_doubles(q, r.path("q")) : std::vector<double>{as_double(q, r.path("q"))};
  }
  r.finish();
  return m;
}

EstimatorConfig parse_estimator(const json& j, const std::string& path) {
  Reader r(j, path);
  EstimatorConfig e;
  e.kind = parse_enum(r.require("kind"), r.path("kind"), kEstimators);
  if (e.kind == EstimatorConfig::Kind::kWindowed) {
    r.read("window", e.window, as_u64);
    e.slots_per_update = e.window;
    r.read("slots_per_update", e.slots_per_update, as_u64);
    r.read("flush_on_neighbor_update", e.flush_on_neighbor_update, as_bool);
    r.read("switch_margin", e.switch_margin, as_double);
  }
  r.finish();
  return e;
}

ScheduleConfig parse_schedule(const json& j, const std::string& path) {
  Reader r(j, path);
  ScheduleConfig s;
  s.kind = parse_enum(r.require("kind"), r.path("kind"), kSchedules);
  if (s.kind == CoolingSchedule::Kind::kFixed) {
    s.beta = as_double(r.require("beta"), r.path("beta"));
  } else {
    s.delta = as_double(r.require("delta"), r.path("delta"));
  }
  r.read("freeze_beta", s.freeze_beta, [](const json& v, const std::string& p) { return std::optional(as_double(v, p)); });
  r.finish();
  return s;
}

void parse_replay(const json& j, const std::string& path, ExperimentConfig& c) {
  Reader r(j, path);
  const std::string ip = r.path("initial");
  const json& initial = as_array(r.require("initial"), ip);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    Reader s(initial[i], at_index(ip, i));
    Strategy strategy;
    strategy.channels = as_channels(s.require("channels"), s.path("channels"));
    strategy.attempt_prob = as_double(s.require("attempt_prob"), s.path("attempt_prob"));
    s.finish();
    c.replay_initial.strategies.push_back(std::move(strategy));
  }
  const std::string mp = r.path("moves");
  const json& moves = as_array(r.require("moves"), mp);
  for (std::size_t i = 0; i < moves.size(); ++i) {
    Reader m(moves[i], at_index(mp, i));
    ReplayMove move;
    move.user = as_u64(m.require("user"), m.path("user"));
    move.channels = as_channels(m.require("channels"), m.path("channels"));
    m.finish();
    c.replay_moves.push_back(std::move(move));
  }
  r.read("expect_cycle_length", c.expect_cycle_length,
         [](const json& v, const std::string& p) { return std::optional<std::size_t>(as_u64(v, p)); });
  r.finish();
}

ExperimentConfig parse_root(const json& j) {
  Reader r(j, "");
  ExperimentConfig c;
  r.read("name", c.name, as_string);
  c.algorithm = parse_enum(r.require("algorithm"), "algorithm", kAlgorithms);
  r.read("seed", c.seed, as_u64);
  r.read("trials", c.trials, as_u64);
  r.read("max_iters", c.max_iters, as_u64);
  r.read("threads", c.threads, as_u64);
  c.instance = parse_instance(r.require("instance"), "instance");
  if (const json* m = r.find("mechanism")) c.mechanism = parse_mechanism(*m, "mechanism");
  if (const json* e = r.find("estimator")) c.estimator = parse_estimator(*e, "estimator");
  if (const json* s = r.find("schedule")) {
    c.schedule = parse_schedule(*s, "schedule");
  } else if (c.algorithm == ExperimentConfig::Algorithm::kNbrf) {
    fail("schedule", "required field is missing");
  }
  if (const json* n = r.find("naive")) {
    Reader nr(*n, "naive");
    nr.read("fair_probabilities", c.naive_fair_probabilities, as_bool);
    nr.finish();
  }
  r.read("initial", c.initial, [](const json& v, const std::string& p) { return parse_enum(v, p, kInitials); });
  if (const json* events = r.find("population_events")) {
    for (std::size_t i = 0; i < as_array(*events, "population_events").size(); ++i) {
      Reader e((*events)[i], at_index("population_events", i));
      PopulationStep step;
      step.at_iter = as_u64(e.require("at_iter"), e.path("at_iter"));
      step.num_users = as_u64(e.require("num_users"), e.path("num_users"));
      e.finish();
      c.population.push_back(step);
    }
  }
  if (const json* replay = r.find("replay")) {
    parse_replay(*replay, "replay", c);
  } else if (c.algorithm == ExperimentConfig::Algorithm::kReplay) {
    fail("replay", "required field is missing");
  }
  if (const json* outputs = r.find("outputs")) {
    Reader o(*outputs, "outputs");
    o.read("dir", c.out_dir, as_string);
    o.read("trajectory", c.write_trajectory, as_bool);
    o.read("oracle", c.write_oracle, as_bool);
    o.finish();
  }
  r.finish();
  return c;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }
bool is_cap(double p) { return p > 0.0 && p <= 1.0; }

void validate_instance(const ExperimentConfig& config) {
  const InstanceConfig& c = config.instance;
  using Source = InstanceConfig::Source;
  if (c.num_users == 0) fail("instance.num_users", "must be positive");
  if (c.num_channels == 0) fail("instance.num_channels", "must be positive");
  if (c.channels_per_user == 0 || c.channels_per_user > c.num_channels) {
    fail("instance.channels_per_user", "must lie in [1, num_channels]");
  }
  if (c.source == Source::kExplicit) {
    for (std::size_t i = 0; i < c.edges.size(); ++i) {
      const auto [a, b] = c.edges[i];
      if (a >= c.num_users || b >= c.num_users || a == b) fail(at_index("instance.edges", i), "invalid edge");
    }
    if (c.utilities.size() != c.num_users) fail("instance.utilities", "expected one row per user");
    for (std::size_t n = 0; n < c.num_users; ++n) {
      const std::string row = at_index("instance.utilities", n);
      if (c.utilities[n].size() != c.num_channels) fail(row, "expected one entry per channel");
      for (std::size_t k = 0; k < c.num_channels; ++k) {
        if (!(c.utilities[n][k] >= 0.0) || !std::isfinite(c.utilities[n][k])) {
          fail(at_index(row, k), "must be finite and non-negative");
        }
      }
    }
    if (c.caps.size() != c.num_users) fail("instance.caps", "expected one entry per user");
    for (std::size_t n = 0; n < c.num_users; ++n) {
      if (!is_cap(c.caps[n])) fail(at_index("instance.caps", n), "must lie in (0, 1]");
    }
    if (c.mask) {
      if (c.mask->size() != c.num_users) fail("instance.mask", "expected one row per user");
      for (std::size_t n = 0; n < c.num_users; ++n) {
        const auto& row = (*c.mask)[n];
        if (row.size() != c.num_channels) fail(at_index("instance.mask", n), "expected one entry per channel");
        if (static_cast<std::size_t>(std::count(row.begin(), row.end(), true)) < c.channels_per_user) {
          fail(at_index("instance.mask", n), "allows fewer than channels_per_user channels");
        }
      }
    }
    return;
  }
  if (c.source == Source::kGeometric) {
    if (!(c.region_radius > 0.0)) fail("instance.region_radius", "must be positive");
    if (!(c.interference_radius >= 0.0)) fail("instance.interference_radius", "must be non-negative");
  } else {
    if (c.degree >= c.num_users) fail("instance.degree", "must be below num_users");
    if (c.degree % 2 == 1 && c.num_users % 2 == 1) fail("instance.degree", "odd degree needs an even num_users");
  }
  if (c.utility) {
    if (!(*c.utility >= 0.0) || !std::isfinite(*c.utility)) fail("instance.utility", "must be finite and non-negative");
  } else if (!(c.utility_low >= 0.0 && c.utility_low <= c.utility_high && std::isfinite(c.utility_high))) {
    fail("instance.utility_range", "needs 0 <= low <= high");
  }
  if (!c.cap_pattern.empty()) {
    for (std::size_t i = 0; i < c.cap_pattern.size(); ++i) {
      if (!is_cap(c.cap_pattern[i])) fail(at_index("instance.caps", i), "must lie in (0, 1]");
    }
  } else if (!(is_cap(c.cap_low) && is_cap(c.cap_high) && c.cap_low <= c.cap_high)) {
    fail("instance.cap_range", "needs 0 < low <= high <= 1");
  }
}

}  // namespace

const char* to_string(ExperimentConfig::Algorithm algorithm) { return enum_name(algorithm, kAlgorithms); }

CoolingSchedule ScheduleConfig::schedule() const {
  switch (kind) {
    case CoolingSchedule::Kind::kFixed:
      return CoolingSchedule::fixed(beta);
    case CoolingSchedule::Kind::kLogarithmic:
      return CoolingSchedule::logarithmic(delta);
    case CoolingSchedule::Kind::kPiecewiseConstant:
      break;
  }
  return CoolingSchedule::piecewise_constant(delta);
}

void validate_config(const ExperimentConfig& config) {
  using Algorithm = ExperimentConfig::Algorithm;
  if (config.trials == 0) fail("trials", "must be at least 1");
  if (config.max_iters == 0 && config.algorithm != Algorithm::kReplay) fail("max_iters", "must be at least 1");
  validate_instance(config);
  const InstanceConfig& inst = config.instance;

  const auto& m = config.mechanism;
  if (m.kind == UpdateMechanism::Kind::kBackoff && !(m.backoff_bound > 0.0)) {
    fail("mechanism.bound", "must be positive");
  }
  if (m.kind == UpdateMechanism::Kind::kProbabilistic) {
    if (m.update_probs.empty()) fail("mechanism.q", "must not be empty");
    if (m.update_probs.size() != 1 && (m.update_probs.size() != inst.num_users || !config.population.empty())) {
      fail("mechanism.q", "expected a single value or one per user (single value with population events)");
    }
    for (std::size_t i = 0; i < m.update_probs.size(); ++i) {
      if (!is_probability(m.update_probs[i])) fail(at_index("mechanism.q", i), "must lie in [0, 1]");
    }
  }

  const auto& e = config.estimator;
  if (e.kind == EstimatorConfig::Kind::kWindowed) {
    if (e.window == 0) fail("estimator.window", "must be positive");
    if (e.slots_per_update == 0) fail("estimator.slots_per_update", "must be positive");
    if (!(e.switch_margin >= 0.0)) fail("estimator.switch_margin", "must be non-negative");
  }

  const auto& s = config.schedule;
  if (s.kind == CoolingSchedule::Kind::kFixed && !(s.beta >= 0.0 && std::isfinite(s.beta))) {
    fail("schedule.beta", "must be finite and non-negative");
  }
  if (s.kind != CoolingSchedule::Kind::kFixed && !(s.delta > 0.0 && std::isfinite(s.delta))) {
    fail("schedule.delta", "must be positive");
  }
  if (s.freeze_beta && !(*s.freeze_beta > 0.0)) fail("schedule.freeze_beta", "must be positive");

  if (config.algorithm == Algorithm::kNbrf && inst.channels_per_user != 1) {
    fail("instance.channels_per_user", "nbrf requires 1");
  }

  std::size_t users = inst.num_users;
  for (std::size_t i = 0; i < config.population.size(); ++i) {
    const auto& step = config.population[i];
    const std::string path = at_index("population_events", i);
    if (inst.source != InstanceConfig::Source::kGeometric) {
      fail(path, "population events need a geometric instance");
    }
    if (config.algorithm == Algorithm::kReplay) fail(path, "not supported by better-response-replay");
    if (step.at_iter == 0 || (i > 0 && step.at_iter <= config.population[i - 1].at_iter)) {
      fail(path + ".at_iter", "must be positive and strictly increasing");
    }
    if (step.num_users <= users) fail(path + ".num_users", "must exceed the previous population");
    users = step.num_users;
  }

  if (config.algorithm == Algorithm::kReplay) {
    if (inst.source != InstanceConfig::Source::kExplicit) fail("instance.source", "replay needs an explicit instance");
    if (config.replay_initial.size() != inst.num_users) fail("replay.initial", "expected one strategy per user");
    for (std::size_t n = 0; n < inst.num_users; ++n) {
      const auto& st = config.replay_initial[n];
      const std::string path = at_index("replay.initial", n);
      if (!is_probability(st.attempt_prob)) fail(path + ".attempt_prob", "must lie in [0, 1]");
      if (st.channels.size() != inst.channels_per_user) fail(path + ".channels", "expected channels_per_user entries");
      for (ChannelId k : st.channels) {
        if (k >= inst.num_channels) fail(path + ".channels", "channel out of range");
      }
    }
    for (std::size_t i = 0; i < config.replay_moves.size(); ++i) {
      const auto& mv = config.replay_moves[i];
      const std::string path = at_index("replay.moves", i);
      if (mv.user >= inst.num_users) fail(path + ".user", "user out of range");
      if (mv.channels.size() != inst.channels_per_user) fail(path + ".channels", "expected channels_per_user entries");
      for (ChannelId k : mv.channels) {
        if (k >= inst.num_channels) fail(path + ".channels", "channel out of range");
      }
    }
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: not valid JSON (") + e.what() + ")");
  }
  ExperimentConfig c = parse_root(j);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["algorithm"] = to_string(c.algorithm);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["max_iters"] = c.max_iters;
  j["threads"] = c.threads;

  const InstanceConfig& ic = c.instance;
  json inst;
  inst["source"] = enum_name(ic.source, kSources);
  inst["num_users"] = ic.num_users;
  inst["num_channels"] = ic.num_channels;
  inst["channels_per_user"] = ic.channels_per_user;
  if (ic.seed) inst["seed"] = *ic.seed;
  inst["resample_per_trial"] = ic.resample_per_trial;
  if (ic.source == InstanceConfig::Source::kExplicit) {
    json edges = json::array();
    for (const auto& [a, b] : ic.edges) edges.push_back({a, b});
    inst["edges"] = edges;
    inst["utilities"] = ic.utilities;
    inst["caps"] = ic.caps;
    if (ic.mask) inst["mask"] = *ic.mask;
  } else {
    if (ic.source == InstanceConfig::Source::kGeometric) {
      inst["region_radius"] = ic.region_radius;
      inst["interference_radius"] = ic.interference_radius;
      inst["connected"] = ic.connected;
    } else {
      inst["degree"] = ic.degree;
    }
    if (ic.utility) {
      inst["utility"] = *ic.utility;
    } else {
      inst["utility_range"] = {ic.utility_low, ic.utility_high};
    }
    if (!ic.cap_pattern.empty()) {
      inst["caps"] = ic.cap_pattern;
    } else {
      inst["cap_range"] = {ic.cap_low, ic.cap_high};
    }
  }
  j["instance"] = inst;

  json mech;
  mech["kind"] = enum_name(c.mechanism.kind, kMechanisms);
  if (c.mechanism.kind == UpdateMechanism::Kind::kBackoff) mech["bound"] = c.mechanism.backoff_bound;
  if (c.mechanism.kind == UpdateMechanism::Kind::kProbabilistic) mech["q"] = c.mechanism.update_probs;
  j["mechanism"] = mech;

  json est;
  est["kind"] = enum_name(c.estimator.kind, kEstimators);
  if (c.estimator.kind == EstimatorConfig::Kind::kWindowed) {
    est["window"] = c.estimator.window;
    est["slots_per_update"] = c.estimator.slots_per_update;
    est["flush_on_neighbor_update"] = c.estimator.flush_on_neighbor_update;
    est["switch_margin"] = c.estimator.switch_margin;
  }
  j["estimator"] = est;

  json sched;
  sched["kind"] = enum_name(c.schedule.kind, kSchedules);
  if (c.schedule.kind == CoolingSchedule::Kind::kFixed) {
    sched["beta"] = c.schedule.beta;
  } else {
    sched["delta"] = c.schedule.delta;
  }
  if (c.schedule.freeze_beta) sched["freeze_beta"] = *c.schedule.freeze_beta;
  j["schedule"] = sched;

  j["naive"] = {{"fair_probabilities", c.naive_fair_probabilities}};
  j["initial"] = enum_name(c.initial, kInitials);
  json events = json::array();
  for (const auto& step : c.population) events.push_back({{"at_iter", step.at_iter}, {"num_users", step.num_users}});
  j["population_events"] = events;

  if (c.algorithm == ExperimentConfig::Algorithm::kReplay) {
    json replay;
    json initial = json::array();
    for (const auto& s : c.replay_initial.strategies) {
      initial.push_back({{"channels", s.channels}, {"attempt_prob", s.attempt_prob}});
    }
    replay["initial"] = initial;
    json moves = json::array();
    for (const auto& m : c.replay_moves) moves.push_back({{"user", m.user}, {"channels", m.channels}});
    replay["moves"] = moves;
    if (c.expect_cycle_length) replay["expect_cycle_length"] = *c.expect_cycle_length;
    j["replay"] = replay;
  }

  j["outputs"] = {{"dir", c.out_dir}, {"trajectory", c.write_trajectory}, {"oracle", c.write_oracle}};
  return j.dump(2);
}

ExperimentConfig cycle_demo_config() {
  ExperimentConfig c;
  c.name = "cycle-demo";
  c.algorithm = ExperimentConfig::Algorithm::kReplay;
  c.max_iters = 0;
  c.instance.source = InstanceConfig::Source::kExplicit;
  c.instance.num_users = 2;
  c.instance.num_channels = 4;
  c.instance.channels_per_user = 2;
  c.instance.edges = {{0, 1}};
  c.instance.utilities = {{1.0, 2.0, 1.0, 2.0}, {2.0, 1.0, 2.0, 1.0}};
  c.instance.caps = {0.5, 0.5};
  c.replay_initial.strategies = {Strategy{{0, 1}, 0.5}, Strategy{{1, 2}, 0.5}};
  c.replay_moves = {{0, {2, 3}}, {1, {0, 3}}, {0, {0, 1}}, {1, {1, 2}}};
  c.expect_cycle_length = 4;
  c.out_dir = "out/cycle-demo";
  c.write_oracle = false;
  return c;
}

}  // namespace spectrum
