#include "spectrum/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spectrum/drm_game.hpp"

namespace spectrum {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_channels(const ChannelSet& channels) {
  std::string out;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(channels[i]);
  }
  return out;
}

namespace {

bool is_connected(const InterferenceGraph& graph) {
  const std::size_t n = graph.num_users();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::queue<UserId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const UserId u = frontier.front();
    frontier.pop();
    for (UserId v : graph.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

constexpr int kConnectedAttempts = 10000;

std::size_t final_population(const ExperimentConfig& config) {
  return config.population.empty() ? config.instance.num_users : config.population.back().num_users;
}

std::uint64_t instance_seed(const ExperimentConfig& config, std::size_t trial) {
  const std::uint64_t base = config.instance.seed.value_or(config.seed);
  return config.instance.resample_per_trial ? derive_seed(base, trial) : base;
}

// Instances in force over the run: the initial population, then one per event.
struct Stages {
  std::vector<Instance> instances;
  std::vector<PopulationEvent> events;

  const Instance& for_size(std::size_t num_users) const {
    for (const auto& inst : instances) {
      if (inst.num_users() == num_users) return inst;
    }
    throw std::logic_error("no stage with " + std::to_string(num_users) + " users");
  }
};

Stages build_stages(const ExperimentConfig& config, std::uint64_t seed) {
  const Instance full = build_full_instance(config.instance, final_population(config), seed);
  Stages stages;
  stages.instances.push_back(full.prefix(config.instance.num_users));
  for (const auto& step : config.population) {
    stages.instances.push_back(full.prefix(step.num_users));
    stages.events.push_back(PopulationEvent{step.at_iter, stages.instances.back()});
  }
  return stages;
}

StrategyProfile random_profile(const Instance& inst, bool fair, Rng& rng) {
  const std::size_t m = inst.channels_per_user();
  StrategyProfile profile;
  std::vector<ChannelId> allocation;
  for (UserId n = 0; n < inst.num_users(); ++n) {
    ChannelSet pool;
    for (ChannelId k = 0; k < inst.num_channels(); ++k) {
      if (inst.allowed(n, k)) pool.push_back(k);
    }
    for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    allocation.push_back(pool.front());
    profile.strategies.push_back(Strategy{pool, inst.cap(n)});
  }
  if (fair) return with_optimal_attempt_probabilities(allocation, inst);
  return profile;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sum_log(const std::vector<double>& rates) {
  double total = 0.0;
  for (double r : rates) {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(r);
  }
  return total;
}

bool judges_fairness(const ExperimentConfig& config) {
  using Algorithm = ExperimentConfig::Algorithm;
  if (config.instance.channels_per_user != 1) return false;
  return config.algorithm == Algorithm::kNbrf ||
         (config.algorithm == Algorithm::kNaive && config.naive_fair_probabilities);
}

bool at_nep(const ExperimentConfig& config, const StrategyProfile& profile, const Instance& inst) {
  return judges_fairness(config) ? is_nep_fairness(profile, inst).is_nep : is_nep_drm(profile, inst).is_nep;
}

std::string strategy_text(const Strategy& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.channels.size(); ++i) out += (i ? "," : "") + std::to_string(s.channels[i]);
  return out + "}";
}

std::string replay_transcript(const ExperimentConfig& config, const Trajectory& traj, const Instance& inst) {
  std::ostringstream out;
  out << "instance: " << inst.num_users() << " users, " << inst.num_channels() << " channels, M = "
      << inst.channels_per_user() << "\n";
  const auto& first = traj.steps.front();
  out << "step 0:";
  for (UserId n = 0; n < inst.num_users(); ++n) {
    out << " user " << n << " " << strategy_text(first.profile[n]) << " p " << format_double(first.profile[n].attempt_prob)
        << " rate " << format_double(first.rates[n]) << (n + 1 < inst.num_users() ? ";" : "");
  }
  out << " phi " << format_double(first.potential) << "\n";
  for (std::size_t i = 1; i < traj.steps.size(); ++i) {
    const auto& prev = traj.steps[i - 1];
    const auto& step = traj.steps[i];
    const UserId mover = step.active.front();
    out << "step " << i << ": user " << mover << " moves " << strategy_text(prev.profile[mover]) << " -> "
        << strategy_text(step.profile[mover]) << ", rate " << format_double(prev.rates[mover]) << " -> "
        << format_double(step.rates[mover]) << ", phi " << format_double(step.potential) << "\n";
  }
  if (traj.cycle_length) {
    std::size_t revisit = 0;
    for (std::size_t i = 1; i < traj.steps.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (traj.steps[i].profile == traj.steps[j].profile) {
          revisit = i;
          break;
        }
      }
      if (revisit) break;
    }
    out << "cycle: step " << revisit << " revisits step " << revisit - *traj.cycle_length << " (length "
        << *traj.cycle_length << ")\n";
  } else {
    out << "no cycle\n";
  }
  if (config.expect_cycle_length) {
    out << "check: expected cycle length " << *config.expect_cycle_length << ", "
        << (traj.cycle_length == config.expect_cycle_length ? "ok" : "MISMATCH") << "\n";
  }
  return out.str();
}

struct TrialOutput {
  TrialSummary summary;
  std::vector<double> mean_rate;
  std::vector<double> sum_log_rate;
  std::vector<std::uint8_t> nep;
  std::string csv;
  std::string transcript;
};

TrialOutput run_trial(const ExperimentConfig& config, std::size_t trial, const Stages* shared) {
  using Algorithm = ExperimentConfig::Algorithm;
  std::optional<Stages> own;
  if (!shared) own = build_stages(config, instance_seed(config, trial));
  const Stages& stages = shared ? *shared : *own;
  const Instance& inst = stages.instances.front();

  TrialOutput out;
  out.summary.trial = trial;
  out.summary.seed = derive_seed(config.seed, trial);
  Rng rng(out.summary.seed);

  RunOptions run;
  run.max_iters = config.max_iters;
  run.stop_on_convergence = false;
  run.population_events = stages.events;
  if (config.initial == ExperimentConfig::Initial::kRandom && config.algorithm != Algorithm::kNaive) {
    run.initial_profile = random_profile(inst, config.algorithm == Algorithm::kNbrf, rng);
  }

  Trajectory traj;
  switch (config.algorithm) {
    case Algorithm::kBrDrm:
      traj = run_br_drm(inst, config.mechanism, config.estimator, run, rng);
      break;
    case Algorithm::kNbrf: {
      NbrfOptions nbrf;
      nbrf.run = run;
      nbrf.freeze_beta = config.schedule.freeze_beta;
      nbrf.stop_when_frozen_at_nep = false;
      traj = run_nbrf(inst, config.mechanism, config.schedule.schedule(), nbrf, rng);
      break;
    }
    case Algorithm::kNaive:
      traj = run_naive(inst, config.naive_fair_probabilities, run, rng);
      break;
    case Algorithm::kReplay:
      traj = run_better_response_replay(inst, config.replay_initial, config.replay_moves);
      if (config.expect_cycle_length && traj.cycle_length != config.expect_cycle_length) {
        throw ValidationError("replay: expected a cycle of length " + std::to_string(*config.expect_cycle_length) +
                              (traj.cycle_length ? ", found " + std::to_string(*traj.cycle_length) : ", found none"));
      }
      if (!traj.steps.empty() && traj.cycle_length && traj.final_profile != traj.steps.front().profile) {
        throw ValidationError("replay: the cycle does not close on the initial profile");
      }
      out.transcript = replay_transcript(config, traj, inst);
      break;
  }

  std::ostringstream csv;
  for (const auto& step : traj.steps) {
    const Instance& stage = stages.for_size(step.profile.size());
    out.mean_rate.push_back(mean_of(step.rates));
    out.sum_log_rate.push_back(sum_log(step.rates));
    out.nep.push_back(at_nep(config, step.profile, stage) ? 1 : 0);
    if (config.write_trajectory) {
      for (UserId n = 0; n < step.profile.size(); ++n) {
        csv << trial << ',' << step.iter << ',' << n << ',' << format_channels(step.profile[n].channels) << ','
            << format_double(step.profile[n].attempt_prob) << ',' << format_double(step.rates[n]) << '\n';
      }
    }
  }
  out.csv = csv.str();

  TrialSummary& s = out.summary;
  s.iterations = traj.iterations;
  s.termination = traj.termination;
  s.cycle_length = traj.cycle_length;
  s.final_mean_rate = out.mean_rate.back();
  s.final_sum_log_rate = out.sum_log_rate.back();
  s.final_at_nep = out.nep.back() != 0;
  if (config.algorithm == Algorithm::kBrDrm) {
    s.converged_at = traj.converged_at;
  } else if (config.algorithm != Algorithm::kReplay && s.final_at_nep) {
    std::uint64_t last_change = 0;
    for (std::size_t i = 1; i < traj.steps.size(); ++i) {
      if (traj.steps[i].profile != traj.steps[i - 1].profile) last_change = traj.steps[i].iter;
    }
    s.converged_at = last_change;
    s.termination = Termination::kConverged;
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

class OutputFile {
 public:
  OutputFile(const fs::path& dir, const std::string& name, std::vector<std::string>* files)
      : path_(dir / name), out_(path_, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path_.string());
    if (files) files->push_back(name);
  }
  ~OutputFile() noexcept(false) {
    out_.close();
    if (!out_ && std::uncaught_exceptions() == 0) throw std::runtime_error("error writing " + path_.string());
  }
  std::ofstream& stream() { return out_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

json profile_json(const StrategyProfile& profile) {
  json out = json::array();
  for (const auto& s : profile.strategies) {
    out.push_back({{"channels", s.channels}, {"attempt_prob", s.attempt_prob}});
  }
  return out;
}

json oracle_json(const OracleResult& result, const Instance& inst) {
  json j;
  j["optimum_value"] = result.optimum_value;
  j["search_size"] = result.search_size;
  j["optimizer_count"] = result.optimizers.size();
  const StrategyProfile& best = result.optimizers.front();
  double rate = 0.0;
  for (UserId n = 0; n < inst.num_users(); ++n) rate += total_expected_rate(n, best, inst);
  j["mean_rate"] = rate / static_cast<double>(inst.num_users());
  j["optimizer"] = profile_json(best);
  return j;
}

json instance_summary(const Instance& inst) {
  json edges = json::array();
  for (UserId a = 0; a < inst.num_users(); ++a) {
    for (UserId b : inst.graph().neighbors(a)) {
      if (a < b) edges.push_back({a, b});
    }
  }
  return {{"num_users", inst.num_users()},
          {"num_channels", inst.num_channels()},
          {"channels_per_user", inst.channels_per_user()},
          {"num_edges", inst.graph().num_edges()},
          {"edges", edges}};
}

// json::dump prints doubles with the shortest round-trip form, which is
// deterministic for a given build.
void write_json(const fs::path& dir, const std::string& name, const json& j, std::vector<std::string>* files) {
  OutputFile f(dir, name, files);
  f.stream() << j.dump(2) << '\n';
}

}  // namespace

Instance build_full_instance(const InstanceConfig& c, std::size_t num_users, std::uint64_t seed) {
  using Source = InstanceConfig::Source;
  if (c.source == Source::kExplicit) {
    std::vector<double> u;
    for (const auto& row : c.utilities) u.insert(u.end(), row.begin(), row.end());
    std::optional<std::vector<bool>> mask;
    if (c.mask) {
      mask.emplace();
      for (const auto& row : *c.mask) mask->insert(mask->end(), row.begin(), row.end());
    }
    return Instance(InterferenceGraph::from_edges(c.num_users, c.edges), c.num_channels, c.channels_per_user, u,
                    c.caps, mask);
  }
  Rng rng(seed);
  InterferenceGraph graph;
  if (c.source == Source::kGeometric) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kConnectedAttempts) {
        throw ConfigError("instance.connected: no connected graph in " + std::to_string(kConnectedAttempts) +
                          " draws");
      }
      graph = build_geometric_graph(rng, num_users, c.region_radius, c.interference_radius).graph;
      if (!c.connected || is_connected(graph)) break;
    }
  } else {
    graph = build_regular_graph(num_users, c.degree);
  }
  std::vector<double> u(num_users * c.num_channels);
  for (double& x : u) x = c.utility ? *c.utility : rng.uniform(c.utility_low, c.utility_high);
  std::vector<double> caps(num_users);
  for (UserId n = 0; n < num_users; ++n) {
    caps[n] = c.cap_pattern.empty() ? rng.uniform(c.cap_low, c.cap_high) : c.cap_pattern[n % c.cap_pattern.size()];
  }
  return Instance(std::move(graph), c.num_channels, c.channels_per_user, std::move(u), std::move(caps));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  validate_config(config);
  std::optional<Stages> shared;
  if (!config.instance.resample_per_trial) {
    try {
      shared = build_stages(config, instance_seed(config, 0));
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("instance: ") + e.what());
    }
  }

  std::vector<TrialOutput> outputs(config.trials);
  parallel_for(config.trials, config.threads, [&](std::size_t t) {
    outputs[t] = run_trial(config, t, shared ? &*shared : nullptr);
  });

  ExperimentResult result;
  ensure_dir(out_dir);

  if (config.write_trajectory) {
    OutputFile f(out_dir, "trajectory.csv", &result.files);
    f.stream() << "trial,iter,user,channel_set,attempt_prob,expected_rate\n";
    for (const auto& o : outputs) f.stream() << o.csv;
  }

  std::size_t horizon = 0;
  for (const auto& o : outputs) horizon = std::max(horizon, o.mean_rate.size());
  for (std::size_t i = 0; i < horizon; ++i) {
    AggregateRow row;
    row.iter = i;
    std::size_t count = 0;
    for (const auto& o : outputs) {
      if (i >= o.mean_rate.size()) continue;
      row.mean_rate += o.mean_rate[i];
      row.mean_sum_log_rate += o.sum_log_rate[i];
      row.frac_at_nep += o.nep[i];
      ++count;
    }
    row.mean_rate /= static_cast<double>(count);
    row.mean_sum_log_rate /= static_cast<double>(count);
    row.frac_at_nep /= static_cast<double>(count);
    result.aggregate.push_back(row);
  }
  {
    OutputFile f(out_dir, "aggregate.csv", &result.files);
    f.stream() << "iter,mean_rate,mean_sum_log_rate,frac_at_nep\n";
    for (const auto& row : result.aggregate) {
      f.stream() << row.iter << ',' << format_double(row.mean_rate) << ',' << format_double(row.mean_sum_log_rate)
                 << ',' << format_double(row.frac_at_nep) << '\n';
    }
  }
  {
    OutputFile f(out_dir, "summary.csv", &result.files);
    f.stream() << "trial,seed,iterations,converged_at,termination,cycle_length,final_mean_rate,"
                  "final_sum_log_rate,final_at_nep\n";
    for (const auto& o : outputs) {
      const TrialSummary& s = o.summary;
      f.stream() << s.trial << ',' << s.seed << ',' << s.iterations << ','
                 << (s.converged_at ? std::to_string(*s.converged_at) : "") << ',' << to_string(s.termination) << ','
                 << (s.cycle_length ? std::to_string(*s.cycle_length) : "") << ','
                 << format_double(s.final_mean_rate) << ',' << format_double(s.final_sum_log_rate) << ','
                 << (s.final_at_nep ? 1 : 0) << '\n';
      result.trials.push_back(s);
    }
  }
  if (config.algorithm == ExperimentConfig::Algorithm::kReplay) {
    OutputFile f(out_dir, "cycle_transcript.txt", &result.files);
    f.stream() << outputs.front().transcript;
  }

  std::string oracle_status = "disabled";
  if (config.write_oracle) {
    if (!shared) {
      oracle_status = "skipped: the instance is resampled per trial";
    } else if (config.instance.channels_per_user != 1) {
      oracle_status = "skipped: needs one channel per user";
    } else {
      const Instance& inst = shared->instances.front();
      try {
        json j;
        j["instance"] = instance_summary(inst);
        result.oracle = exhaustive_sum_log_rate(inst);
        j["sum_log_optimum"] = oracle_json(*result.oracle, inst);
        j["at_caps_optimum"] = oracle_json(exhaustive_sum_log_rate_at_caps(inst), inst);
        write_json(out_dir, "oracle.json", j, &result.files);
        oracle_status = "written";
      } catch (const CapacityError& e) {
        oracle_status = std::string("skipped: ") + e.what();
      }
    }
  }

  json manifest;
  manifest["name"] = config.name;
  manifest["code_version"] = kCodeVersion;
  manifest["root_seed"] = config.seed;
  manifest["instance_seed"] = config.instance.seed.value_or(config.seed);
  manifest["trial_seed_rule"] = "derive_seed(root_seed, trial) = mix64(mix64(root_seed) ^ trial)";
  json seeds = json::array();
  for (const auto& s : result.trials) seeds.push_back(s.seed);
  manifest["trial_seeds"] = seeds;
  json cfg = json::parse(config_to_json(config));
  cfg["outputs"].erase("dir");
  cfg.erase("threads");
  manifest["config"] = cfg;
  manifest["oracle"] = oracle_status;
  std::vector<std::string> files = result.files;
  files.push_back("manifest.json");
  manifest["files"] = files;
  write_json(out_dir, "manifest.json", manifest, &result.files);
  return result;
}

OracleResult run_oracle(const ExperimentConfig& config, const fs::path& out_dir) {
  validate_config(config);
  if (config.instance.channels_per_user != 1) throw ConfigError("instance.channels_per_user: the oracle needs 1");
  Instance inst = build_stages(config, instance_seed(config, 0)).instances.front();
  OracleResult result = exhaustive_sum_log_rate(inst);
  json j;
  j["name"] = config.name;
  j["instance"] = instance_summary(inst);
  j["sum_log_optimum"] = oracle_json(result, inst);
  j["at_caps_optimum"] = oracle_json(exhaustive_sum_log_rate_at_caps(inst), inst);
  ensure_dir(out_dir);
  write_json(out_dir, "oracle.json", j, nullptr);
  return result;
}

std::vector<EfficiencyRow> run_efficiency_sweep(const EfficiencySweepOptions& options) {
  if (options.trials == 0) throw ConfigError("trials: must be at least 1");
  std::vector<EfficiencyRow> rows;
  for (std::size_t k : options.channel_counts) {
    for (std::size_t d : options.degrees) {
      EfficiencyRow row;
      row.num_channels = k;
      row.degree = d;
      const std::size_t n_users = options.num_users;
      if (k == 0 || d == 0 || d + 1 < k || (d + 1) % k != 0) {
        row.note = "inadmissible: needs degree >= 1 and degree+1 a multiple of K";
        rows.push_back(row);
        continue;
      }
      if (d >= n_users || (d % 2 == 1 && n_users % 2 == 1)) {
        row.note = "skipped: no circulant graph of this degree on " + std::to_string(n_users) + " users";
        rows.push_back(row);
        continue;
      }
      const double cap = static_cast<double>(k) / static_cast<double>(d + 1);
      const Instance inst(build_regular_graph(n_users, d), k, 1, std::vector<double>(n_users * k, 1.0),
                          std::vector<double>(n_users, cap));
      row.eta = efficiency_bound(k, d);
      const double naive = naive_expected_rate(0, inst, d);
      double min_ratio = std::numeric_limits<double>::infinity();
      double total = 0.0;
      std::size_t count = 0;
      std::size_t unconverged = 0;
      const std::uint64_t pair_seed = derive_seed(options.seed, k * 1000 + d);
      for (std::size_t t = 0; t < options.trials; ++t) {
        Rng rng(derive_seed(pair_seed, t));
        RunOptions run;
        run.max_iters = options.max_iters;
        run.record_steps = false;
        run.initial_profile = random_profile(inst, false, rng);
        const Trajectory traj = run_br_drm(inst, UpdateMechanism::backoff(), EstimatorConfig::exact(), run, rng);
        if (traj.termination != Termination::kConverged) {
          ++unconverged;
          continue;
        }
        for (UserId n = 0; n < n_users; ++n) {
          const double ratio = total_expected_rate(n, traj.final_profile, inst) / naive;
          min_ratio = std::min(min_ratio, ratio);
          total += ratio;
          ++count;
        }
      }
      if (count) {
        row.min_ratio = min_ratio;
        row.mean_ratio = total / static_cast<double>(count);
      }
      if (unconverged) row.note = std::to_string(unconverged) + " trials did not converge";
      rows.push_back(row);
    }
  }
  return rows;
}

void write_efficiency_csv(const std::vector<EfficiencyRow>& rows, const fs::path& out_dir) {
  ensure_dir(out_dir);
  OutputFile f(out_dir, "efficiency.csv", nullptr);
  f.stream() << "K,degree,eta,min_ratio,mean_ratio,note\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    f.stream() << r.num_channels << ',' << r.degree << ',' << opt(r.eta) << ',' << opt(r.min_ratio) << ','
               << opt(r.mean_ratio) << ',' << r.note << '\n';
  }
}

Instance gibbs_check_instance() {
  return Instance(build_regular_graph(2, 1), 2, 1, {1.0, 2.0, 1.5, 1.0}, {1.0, 1.0});
}

GibbsCheckResult run_gibbs_check(const GibbsCheckOptions& options) {
  if (options.steps == 0) throw ConfigError("steps: must be at least 1");
  if (!(options.update_prob > 0.0 && options.update_prob <= 1.0)) throw ConfigError("q: must lie in (0, 1]");
  if (!(options.beta >= 0.0)) throw ConfigError("beta: must be non-negative");
  const Instance inst = gibbs_check_instance();
  VisitCounter counter(options.burn_in);
  NbrfOptions nbrf;
  nbrf.run.max_iters = options.burn_in + options.steps - 1;
  nbrf.run.record_steps = false;
  nbrf.run.stop_on_convergence = false;
  nbrf.stop_when_frozen_at_nep = false;
  nbrf.run.on_step = [&](std::uint64_t iter, const StrategyProfile& p) { counter.observe(iter, p); };
  Rng rng(options.seed);
  run_nbrf(inst, UpdateMechanism::probabilistic(options.update_prob), CoolingSchedule::fixed(options.beta), nbrf,
           rng);
  GibbsCheckResult result;
  result.empirical = counter.pmf();
  const GibbsDistribution gibbs = gibbs_stationary(inst, options.beta);
  for (std::size_t i = 0; i < gibbs.profiles.size(); ++i) {
    if (gibbs.probs[i] > 0.0) result.stationary[gibbs.profiles[i]] = gibbs.probs[i];
  }
  result.total_variation = total_variation(result.empirical, result.stationary);
  return result;
}

void write_gibbs_json(const GibbsCheckOptions& options, const GibbsCheckResult& result, const fs::path& out_dir) {
  json j;
  j["beta"] = options.beta;
  j["q"] = options.update_prob;
  j["steps"] = options.steps;
  j["burn_in"] = options.burn_in;
  j["seed"] = options.seed;
  j["total_variation"] = result.total_variation;
  json rows = json::array();
  std::map<StrategyProfile, std::pair<double, double>> merged;
  for (const auto& [p, w] : result.stationary) merged[p].first = w;
  for (const auto& [p, w] : result.empirical) merged[p].second = w;
  for (const auto& [p, w] : merged) {
    rows.push_back({{"profile", profile_json(p)}, {"stationary", w.first}, {"empirical", w.second}});
  }
  j["profiles"] = rows;
  ensure_dir(out_dir);
  write_json(out_dir, "gibbs.json", j, nullptr);
}

}  // namespace spectrum
