#include "spectrum/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "spectrum/drm_game.hpp"
#include "spectrum/errors.hpp"

namespace spectrum {

// --- UpdateMechanism ---------------------------------------------------------

UpdateMechanism UpdateMechanism::backoff(double bound) {
  UpdateMechanism m;
  m.kind = Kind::kBackoff;
  m.backoff_bound = bound;
  m.validate(0);
  return m;
}

UpdateMechanism UpdateMechanism::probabilistic(double q) { return probabilistic(std::vector<double>{q}); }

UpdateMechanism UpdateMechanism::probabilistic(std::vector<double> q) {
  UpdateMechanism m;
  m.kind = Kind::kProbabilistic;
  m.update_probs = std::move(q);
  m.validate(0);
  return m;
}

UpdateMechanism UpdateMechanism::sweep() {
  UpdateMechanism m;
  m.kind = Kind::kSweep;
  return m;
}

double UpdateMechanism::update_prob(UserId n) const {
  if (update_probs.size() == 1) return update_probs.front();
  return update_probs.at(n);
}

void UpdateMechanism::validate(std::size_t num_users) const {
  switch (kind) {
    case Kind::kBackoff:
      if (!(backoff_bound > 0.0) || !std::isfinite(backoff_bound)) {
        throw ArgumentError("backoff bound must be positive and finite");
      }
      break;
    case Kind::kProbabilistic:
      if (update_probs.empty()) throw ArgumentError("probabilistic mechanism needs update probabilities");
      if (update_probs.size() != 1 && num_users != 0 && update_probs.size() < num_users) {
        throw ArgumentError("probabilistic mechanism needs one update probability per user");
      }
      for (double q : update_probs) {
        if (!(q > 0.0 && q < 1.0)) throw ArgumentError("update probabilities must lie in (0, 1)");
      }
      break;
    case Kind::kSweep:
      break;
  }
}

// --- ActiveSelector ----------------------------------------------------------

ActiveSelector::ActiveSelector(UpdateMechanism mechanism) : mechanism_(std::move(mechanism)) {
  mechanism_.validate(0);
}

std::vector<UserId> ActiveSelector::select(const InterferenceGraph& graph, Rng& rng) {
  const std::size_t n_users = graph.num_users();
  std::vector<UserId> active;
  if (n_users == 0) return active;
  switch (mechanism_.kind) {
    case UpdateMechanism::Kind::kBackoff: {
      draws_.resize(n_users);
      for (auto& b : draws_) b = rng.uniform(0.0, mechanism_.backoff_bound);
      for (UserId n = 0; n < n_users; ++n) {
        bool local_min = true;
        for (UserId r : graph.neighbors(n)) {
          if (draws_[r] < draws_[n] || (draws_[r] == draws_[n] && r < n)) {
            local_min = false;
            break;
          }
        }
        if (local_min) active.push_back(n);
      }
      break;
    }
    case UpdateMechanism::Kind::kProbabilistic:
      mechanism_.validate(n_users);
      for (UserId n = 0; n < n_users; ++n) {
        if (rng.bernoulli(mechanism_.update_prob(n))) active.push_back(n);
      }
      break;
    case UpdateMechanism::Kind::kSweep:
      active.push_back(cursor_ % n_users);
      cursor_ = cursor_ % n_users + 1;
      break;
  }
  return active;
}

std::vector<UserId> select_active(const UpdateMechanism& mechanism, const InterferenceGraph& graph,
                                  Rng& rng) {
  ActiveSelector selector(mechanism);
  return selector.select(graph, rng);
}

EstimatorConfig EstimatorConfig::windowed(std::size_t window) {
  EstimatorConfig config;
  config.kind = Kind::kWindowed;
  config.window = window;
  config.slots_per_update = window;
  return config;
}

// --- slot simulation ---------------------------------------------------------

SlotOutcome simulate_slot(const StrategyProfile& profile, const Instance& instance, Rng& rng) {
  SlotOutcome out;
  simulate_slot(profile, instance, rng, out);
  return out;
}

void simulate_slot(const StrategyProfile& profile, const Instance& instance, Rng& rng, SlotOutcome& out) {
  const std::size_t n_users = instance.num_users();
  const std::size_t n_channels = instance.num_channels();
  if (profile.size() != n_users) throw ArgumentError("profile size does not match the instance");
  out.num_users = n_users;
  out.num_channels = n_channels;
  out.transmitted.assign(n_users, 0);
  out.success.assign(n_users * n_channels, 0);
  out.collision.assign(n_users * n_channels, 0);
  out.busy.assign(n_users * n_channels, 0);
  for (UserId n = 0; n < n_users; ++n) {
    out.transmitted[n] = rng.bernoulli(profile[n].attempt_prob) ? 1 : 0;
  }
  const auto& graph = instance.graph();
  for (UserId n = 0; n < n_users; ++n) {
    for (UserId r : graph.neighbors(n)) {
      if (!out.transmitted[r]) continue;
      for (ChannelId k : profile[r].channels) out.busy[n * n_channels + k] = 1;
    }
    if (!out.transmitted[n]) continue;
    for (ChannelId k : profile[n].channels) {
      const std::size_t cell = n * n_channels + k;
      if (out.busy[cell]) {
        out.collision[cell] = 1;
      } else {
        out.success[cell] = 1;
      }
    }
  }
}

double slot_throughput(UserId n, const SlotOutcome& outcome, const Instance& instance) {
  double total = 0.0;
  for (ChannelId k = 0; k < outcome.num_channels; ++k) {
    if (outcome.succeeded(n, k)) total += instance.utility(n, k);
  }
  return total;
}

double estimate_success_probability(UserId n, ChannelId k, std::span<const SlotOutcome> window) {
  if (window.empty()) throw EstimationError("empty estimation window");
  std::size_t idle = 0;
  for (const auto& slot : window) {
    if (n >= slot.num_users || k >= slot.num_channels) throw ArgumentError("user or channel out of range");
    if (!slot.observed_busy(n, k)) ++idle;
  }
  return static_cast<double>(idle) / static_cast<double>(window.size());
}

// --- WindowedEstimator -------------------------------------------------------

WindowedEstimator::WindowedEstimator(std::size_t num_users, std::size_t num_channels, std::size_t window)
    : num_channels_(num_channels), window_(window), history_(num_users),
      busy_counts_(num_users, std::vector<std::size_t>(num_channels, 0)) {
  if (window == 0) throw ArgumentError("estimation window must be positive");
}

void WindowedEstimator::observe(const SlotOutcome& outcome) {
  if (outcome.num_users != history_.size() || outcome.num_channels != num_channels_) {
    throw ArgumentError("slot outcome dimensions do not match the estimator");
  }
  for (UserId n = 0; n < history_.size(); ++n) {
    std::vector<std::uint8_t> row(outcome.busy.begin() + static_cast<std::ptrdiff_t>(n * num_channels_),
                                  outcome.busy.begin() + static_cast<std::ptrdiff_t>((n + 1) * num_channels_));
    for (ChannelId k = 0; k < num_channels_; ++k) busy_counts_[n][k] += row[k];
    history_[n].push_back(std::move(row));
    if (history_[n].size() > window_) {
      const auto& oldest = history_[n].front();
      for (ChannelId k = 0; k < num_channels_; ++k) busy_counts_[n][k] -= oldest[k];
      history_[n].pop_front();
    }
  }
}

void WindowedEstimator::flush(UserId n) {
  history_.at(n).clear();
  std::fill(busy_counts_[n].begin(), busy_counts_[n].end(), 0);
}

void WindowedEstimator::resize(std::size_t num_users) {
  if (num_users < history_.size()) throw ArgumentError("the estimator population cannot shrink");
  history_.resize(num_users);
  busy_counts_.resize(num_users, std::vector<std::size_t>(num_channels_, 0));
}

double WindowedEstimator::estimate(UserId n, ChannelId k) const {
  const std::size_t count = history_.at(n).size();
  if (count == 0) throw EstimationError("empty estimation window for user " + std::to_string(n));
  return 1.0 - static_cast<double>(busy_counts_[n].at(k)) / static_cast<double>(count);
}

const char* to_string(Termination termination) {
  switch (termination) {
    case Termination::kConverged:
      return "converged";
    case Termination::kMaxIters:
      return "max-iters";
    case Termination::kCycleDetected:
      return "cycle-detected";
  }
  return "unknown";
}

// --- learning loops ----------------------------------------------------------

namespace {

std::vector<double> all_rates(const StrategyProfile& profile, const Instance& instance) {
  std::vector<double> rates(instance.num_users());
  for (UserId n = 0; n < instance.num_users(); ++n) rates[n] = total_expected_rate(n, profile, instance);
  return rates;
}

double sum_log_rate(const std::vector<double>& rates) {
  double total = 0.0;
  for (double r : rates) {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(r);
  }
  return total;
}

void check_population_event(const Instance& current, const Instance& next, std::uint64_t at_iter) {
  const std::string where = "population event at iteration " + std::to_string(at_iter);
  if (next.num_channels() != current.num_channels() ||
      next.channels_per_user() != current.channels_per_user()) {
    throw ArgumentError(where + " changes K or M");
  }
  if (next.num_users() < current.num_users()) throw ArgumentError(where + " removes users");
  if (!(next.graph().prefix(current.num_users()) == current.graph())) {
    throw ArgumentError(where + " rewires existing users");
  }
}

class EventQueue {
 public:
  explicit EventQueue(const std::vector<PopulationEvent>& events) : events_(events) {
    for (std::size_t i = 1; i < events_.size(); ++i) {
      if (events_[i].at_iter < events_[i - 1].at_iter) {
        throw ArgumentError("population events must be sorted by iteration");
      }
    }
  }

  bool pending() const { return next_ < events_.size(); }

  const Instance* due(std::uint64_t iter) {
    const Instance* latest = nullptr;
    while (next_ < events_.size() && events_[next_].at_iter <= iter) latest = &events_[next_++].instance;
    return latest;
  }

 private:
  const std::vector<PopulationEvent>& events_;
  std::size_t next_ = 0;
};

struct Recorder {
  const RunOptions& options;
  Trajectory& trajectory;

  template <typename PotentialFn>
  void record(std::uint64_t iter, std::vector<UserId> active, const StrategyProfile& profile,
              const Instance& instance, PotentialFn potential) {
    if (options.record_steps) {
      TrajectoryStep step;
      step.iter = iter;
      step.active = std::move(active);
      step.profile = profile;
      step.rates = all_rates(profile, instance);
      step.potential = potential(profile, step.rates);
      trajectory.steps.push_back(std::move(step));
    }
    if (options.on_step) options.on_step(iter, profile);
  }
};

// Tracks which users have re-evaluated without moving since the last change.
class ConvergenceTracker {
 public:
  explicit ConvergenceTracker(std::size_t num_users) : stable_(num_users, false) {}

  void reset(std::size_t num_users) {
    stable_.assign(num_users, false);
    remaining_ = num_users;
  }
  void mark(UserId n) {
    if (!stable_[n]) {
      stable_[n] = true;
      --remaining_;
    }
  }
  bool all_stable() const { return remaining_ == 0; }

 private:
  std::vector<bool> stable_;
  std::size_t remaining_ = stable_.size();
};

}  // namespace

Trajectory run_br_drm(const Instance& instance, const UpdateMechanism& mechanism,
                      const EstimatorConfig& estimator, const RunOptions& options, Rng& rng) {
  const bool windowed = estimator.kind == EstimatorConfig::Kind::kWindowed;
  if (windowed && estimator.slots_per_update == 0) throw ArgumentError("slots_per_update must be positive");
  if (!(estimator.switch_margin >= 0.0)) throw ArgumentError("switch_margin must be >= 0");
  mechanism.validate(instance.num_users());

  Instance inst = instance;
  StrategyProfile profile = options.initial_profile ? *options.initial_profile : top_utility_profile(inst);
  inst.check_profile(profile);
  Trajectory trajectory;
  Recorder recorder{options, trajectory};
  auto potential = [&](const StrategyProfile& p, const std::vector<double>&) { return br_potential(p, inst); };
  recorder.record(0, {}, profile, inst, potential);

  EventQueue events(options.population_events);
  ActiveSelector selector(mechanism);
  std::optional<WindowedEstimator> window;
  if (windowed) window.emplace(inst.num_users(), inst.num_channels(), estimator.window);
  SlotOutcome slot;
  ConvergenceTracker tracker(inst.num_users());
  std::uint64_t last_change = 0;
  std::uint64_t iter = 0;
  bool stopped = false;

  for (iter = 1; iter <= options.max_iters; ++iter) {
    if (const Instance* grown = events.due(iter)) {
      check_population_event(inst, *grown, iter);
      const std::size_t old_n = inst.num_users();
      inst = *grown;
      const StrategyProfile fresh = top_utility_profile(inst);
      for (UserId n = old_n; n < inst.num_users(); ++n) profile.strategies.push_back(fresh[n]);
      if (window) window->resize(inst.num_users());
      tracker.reset(inst.num_users());
      trajectory.converged_at.reset();
      last_change = iter;
    }
    if (window) {
      for (std::size_t s = 0; s < estimator.slots_per_update; ++s) {
        simulate_slot(profile, inst, rng, slot);
        window->observe(slot);
      }
    }
    std::vector<UserId> active = selector.select(inst.graph(), rng);
    StrategyProfile next = profile;
    std::vector<UserId> changed;
    for (UserId n : active) {
      std::vector<double> scores;
      if (window) {
        scores.resize(inst.num_channels());
        for (ChannelId k = 0; k < inst.num_channels(); ++k) scores[k] = inst.utility(n, k) * window->estimate(n, k);
      } else {
        scores = channel_scores(n, profile, inst);
      }
      ChannelSet best = best_response_from_scores(n, scores, inst);
      if (best == profile[n].channels) continue;
      double current = 0.0;
      double candidate = 0.0;
      for (ChannelId k : profile[n].channels) current += scores[k];
      for (ChannelId k : best) candidate += scores[k];
      if (!is_strict_rate_improvement(current, candidate)) continue;
      if (candidate - current <= estimator.switch_margin * current) continue;
      next[n].channels = std::move(best);
      changed.push_back(n);
    }
    profile = std::move(next);
    if (!changed.empty()) {
      last_change = iter;
      tracker.reset(inst.num_users());
      trajectory.converged_at.reset();
      if (window && estimator.flush_on_neighbor_update) {
        for (UserId c : changed) {
          for (UserId r : inst.graph().neighbors(c)) window->flush(r);
        }
      }
    } else {
      for (UserId n : active) tracker.mark(n);
    }
    recorder.record(iter, std::move(active), profile, inst, potential);
    if (tracker.all_stable() && !trajectory.converged_at) {
      trajectory.converged_at = last_change;
      if (options.stop_on_convergence && !events.pending()) {
        stopped = true;
        break;
      }
    }
  }
  trajectory.termination = trajectory.converged_at ? Termination::kConverged : Termination::kMaxIters;
  trajectory.iterations = stopped ? iter : options.max_iters;
  trajectory.final_profile = std::move(profile);
  return trajectory;
}

Trajectory run_better_response_replay(const Instance& instance, const StrategyProfile& initial,
                                      std::span<const ReplayMove> moves) {
  instance.check_profile(initial);
  Trajectory trajectory;
  RunOptions options;
  Recorder recorder{options, trajectory};
  auto potential = [&](const StrategyProfile& p, const std::vector<double>&) { return br_potential(p, instance); };
  StrategyProfile profile = initial;
  recorder.record(0, {}, profile, instance, potential);
  std::map<StrategyProfile, std::uint64_t> seen{{profile, 0}};

  for (std::size_t i = 0; i < moves.size(); ++i) {
    const std::uint64_t step = i + 1;
    const ReplayMove& move = moves[i];
    if (move.user >= instance.num_users()) {
      throw ValidationError("replay step " + std::to_string(step) + ": user index out of range");
    }
    StrategyProfile next = profile;
    next[move.user].channels = move.channels;
    std::sort(next[move.user].channels.begin(), next[move.user].channels.end());
    try {
      instance.check_profile(next);
    } catch (const ArgumentError& e) {
      throw ValidationError("replay step " + std::to_string(step) + ": " + e.what());
    }
    const double before = total_expected_rate(move.user, profile, instance);
    const double after = total_expected_rate(move.user, next, instance);
    if (!(after > before)) {
      throw ValidationError("replay step " + std::to_string(step) + ": user " + std::to_string(move.user) +
                            " does not strictly improve its rate");
    }
    profile = std::move(next);
    recorder.record(step, {move.user}, profile, instance, potential);
    const auto [it, inserted] = seen.emplace(profile, step);
    if (!inserted && !trajectory.cycle_length) trajectory.cycle_length = step - it->second;
  }
  trajectory.termination = trajectory.cycle_length ? Termination::kCycleDetected : Termination::kMaxIters;
  trajectory.iterations = moves.size();
  trajectory.final_profile = std::move(profile);
  return trajectory;
}

Trajectory run_nbrf(const Instance& instance, const UpdateMechanism& mechanism,
                    const CoolingSchedule& schedule, const NbrfOptions& options, Rng& rng) {
  if (instance.channels_per_user() != 1) throw ArgumentError("NBRF requires M = 1");
  mechanism.validate(instance.num_users());
  const RunOptions& run = options.run;

  Instance inst = instance;
  StrategyProfile profile = run.initial_profile ? *run.initial_profile : fairness_initial_profile(inst);
  inst.check_profile(profile);
  Trajectory trajectory;
  Recorder recorder{run, trajectory};
  auto potential = [](const StrategyProfile&, const std::vector<double>& rates) { return sum_log_rate(rates); };
  recorder.record(0, {}, profile, inst, potential);

  EventQueue events(run.population_events);
  ActiveSelector selector(mechanism);
  std::uint64_t iter = 0;
  bool stopped = false;

  for (iter = 1; iter <= run.max_iters; ++iter) {
    if (const Instance* grown = events.due(iter)) {
      check_population_event(inst, *grown, iter);
      const std::size_t old_n = inst.num_users();
      inst = *grown;
      const StrategyProfile fresh = fairness_initial_profile(inst);
      for (UserId n = old_n; n < inst.num_users(); ++n) profile.strategies.push_back(fresh[n]);
      for (UserId n = old_n; n < inst.num_users(); ++n) {
        profile[n].attempt_prob = optimal_attempt_probability(
            count_neighbors_on_channel(n, profile[n].channels.front(), profile, inst.graph()));
      }
    }
    const double beta = schedule.beta(iter);
    const bool frozen = options.freeze_beta && beta >= *options.freeze_beta;
    std::vector<UserId> active = selector.select(inst.graph(), rng);
    StrategyProfile next = profile;
    for (UserId n : active) {
      FairnessAction action;
      if (frozen) {
        action = best_response_fairness(n, profile, inst);
      } else {
        try {
          action = sample_noisy_br(n, profile, inst, beta, rng);
        } catch (const DegenerateInstanceError&) {
          // Neighbors hold every channel at p = 1; only reachable under
          // simultaneous neighbor updates. Explore uniformly.
          const auto grid = fairness_action_grid(n, inst);
          action = grid[rng.index(grid.size())];
        }
      }
      next[n] = Strategy{{action.channel}, action.attempt_prob};
    }
    profile = std::move(next);
    recorder.record(iter, std::move(active), profile, inst, potential);
    if (frozen && options.stop_when_frozen_at_nep && !events.pending() && is_nep_fairness(profile, inst).is_nep) {
      trajectory.converged_at = iter;
      stopped = true;
      break;
    }
  }
  trajectory.termination = stopped ? Termination::kConverged : Termination::kMaxIters;
  trajectory.iterations = stopped ? iter : run.max_iters;
  trajectory.final_profile = std::move(profile);
  return trajectory;
}

namespace {

ChannelSet random_allowed_channels(UserId n, const Instance& instance, Rng& rng) {
  ChannelSet pool;
  for (ChannelId k = 0; k < instance.num_channels(); ++k) {
    if (instance.allowed(n, k)) pool.push_back(k);
  }
  const std::size_t m = instance.channels_per_user();
  if (pool.size() < m) throw ArgumentError("user " + std::to_string(n) + " has fewer than M allowed channels");
  // partial Fisher-Yates
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void assign_naive(StrategyProfile& profile, std::size_t from, const Instance& instance, bool fair, Rng& rng) {
  for (UserId n = from; n < instance.num_users(); ++n) {
    profile.strategies.push_back(Strategy{random_allowed_channels(n, instance, rng), instance.cap(n)});
  }
  if (!fair) return;
  for (UserId n = from; n < instance.num_users(); ++n) {
    std::size_t worst = 0;
    for (ChannelId k : profile[n].channels) {
      worst = std::max(worst, count_neighbors_on_channel(n, k, profile, instance.graph()));
    }
    profile[n].attempt_prob = optimal_attempt_probability(worst);
  }
}

}  // namespace

Trajectory run_naive(const Instance& instance, bool fair_probabilities, const RunOptions& options, Rng& rng) {
  Instance inst = instance;
  StrategyProfile profile;
  assign_naive(profile, 0, inst, fair_probabilities, rng);
  Trajectory trajectory;
  Recorder recorder{options, trajectory};
  auto potential = [](const StrategyProfile&, const std::vector<double>& rates) { return sum_log_rate(rates); };
  recorder.record(0, {}, profile, inst, potential);
  EventQueue events(options.population_events);
  for (std::uint64_t iter = 1; iter <= options.max_iters; ++iter) {
    if (const Instance* grown = events.due(iter)) {
      check_population_event(inst, *grown, iter);
      const std::size_t old_n = inst.num_users();
      inst = *grown;
      assign_naive(profile, old_n, inst, fair_probabilities, rng);
    }
    recorder.record(iter, {}, profile, inst, potential);
  }
  trajectory.termination = Termination::kMaxIters;
  trajectory.iterations = options.max_iters;
  trajectory.final_profile = std::move(profile);
  return trajectory;
}

std::vector<double> simulate_naive_policy(const Instance& instance, std::uint64_t slots, Rng& rng) {
  if (instance.channels_per_user() != 1) throw ArgumentError("the naive slot policy requires M = 1");
  if (slots == 0) throw ArgumentError("slot count must be positive");
  const std::size_t n_users = instance.num_users();
  const std::size_t n_channels = instance.num_channels();
  std::vector<double> totals(n_users, 0.0);
  std::vector<std::uint8_t> transmitted(n_users);
  std::vector<ChannelId> channel(n_users);
  const auto& graph = instance.graph();
  for (std::uint64_t s = 0; s < slots; ++s) {
    for (UserId n = 0; n < n_users; ++n) {
      channel[n] = static_cast<ChannelId>(rng.index(n_channels));
      transmitted[n] = rng.bernoulli(instance.cap(n)) ? 1 : 0;
    }
    for (UserId n = 0; n < n_users; ++n) {
      if (!transmitted[n]) continue;
      bool clear = true;
      for (UserId r : graph.neighbors(n)) {
        if (transmitted[r] && channel[r] == channel[n]) {
          clear = false;
          break;
        }
      }
      if (clear) totals[n] += instance.utility(n, channel[n]);
    }
  }
  for (double& t : totals) t /= static_cast<double>(slots);
  return totals;
}

std::vector<double> empirical_rates(const StrategyProfile& profile, const Instance& instance,
                                    std::uint64_t slots, Rng& rng) {
  instance.check_profile(profile);
  if (slots == 0) throw ArgumentError("slot count must be positive");
  std::vector<double> totals(instance.num_users(), 0.0);
  SlotOutcome slot;
  for (std::uint64_t s = 0; s < slots; ++s) {
    simulate_slot(profile, instance, rng, slot);
    for (UserId n = 0; n < instance.num_users(); ++n) totals[n] += slot_throughput(n, slot, instance);
  }
  for (double& t : totals) t /= static_cast<double>(slots);
  return totals;
}

}  // namespace spectrum
