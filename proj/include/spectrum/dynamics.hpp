#pragma once

// Update mechanisms, the BR-DRM and NBRF learning loops, a better-response
// replay, and the slot-level channel simulator with its windowed estimator.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spectrum/fairness_game.hpp"
#include "spectrum/network_model.hpp"
#include "spectrum/rng.hpp"

namespace spectrum {

struct UpdateMechanism {
  enum class Kind { kBackoff, kProbabilistic, kSweep };

  Kind kind = Kind::kBackoff;
  double backoff_bound = 1.0;
  // One entry per user, or a single entry shared by all users.
  std::vector<double> update_probs;

  static UpdateMechanism backoff(double bound = 1.0);
  static UpdateMechanism probabilistic(double q);
  static UpdateMechanism probabilistic(std::vector<double> q);
  static UpdateMechanism sweep();

  double update_prob(UserId n) const;
  void validate(std::size_t num_users) const;
};

/// Produces the active set of each updating time. Holds the round-robin
/// cursor of the sweep mechanism.
class ActiveSelector {
 public:
  explicit ActiveSelector(UpdateMechanism mechanism);

  /// backoff: n is active iff (b_n, n) < (b_r, r) for every neighbor r, with
  /// b ~ U[0, B]. probabilistic: independent inclusion with q_n. sweep: the
  /// next user in round-robin order. Returned sorted ascending.
  std::vector<UserId> select(const InterferenceGraph& graph, Rng& rng);

  const UpdateMechanism& mechanism() const { return mechanism_; }

 private:
  UpdateMechanism mechanism_;
  std::size_t cursor_ = 0;
  std::vector<double> draws_;
};

/// One-shot form of ActiveSelector::select; sweep always starts at user 0.
std::vector<UserId> select_active(const UpdateMechanism& mechanism, const InterferenceGraph& graph,
                                  Rng& rng);

struct EstimatorConfig {
  enum class Kind { kExact, kWindowed };

  Kind kind = Kind::kExact;
  std::size_t window = 100;
  // Slots simulated between consecutive updating times.
  std::size_t slots_per_update = 100;
  // Drop a user's window when a neighbor changes its strategy.
  bool flush_on_neighbor_update = true;
  // A switch also needs estimated gain > switch_margin * current score.
  double switch_margin = 0.0;

  static EstimatorConfig exact() { return {}; }
  static EstimatorConfig windowed(std::size_t window = 100);
};

struct SlotOutcome {
  std::size_t num_users = 0;
  std::size_t num_channels = 0;
  std::vector<std::uint8_t> transmitted;  // N
  std::vector<std::uint8_t> success;      // N x K, set only on channels n transmitted on
  std::vector<std::uint8_t> collision;    // N x K
  std::vector<std::uint8_t> busy;         // N x K: some neighbor of n transmitted on k

  bool succeeded(UserId n, ChannelId k) const { return success[n * num_channels + k] != 0; }
  bool collided(UserId n, ChannelId k) const { return collision[n * num_channels + k] != 0; }
  bool observed_busy(UserId n, ChannelId k) const { return busy[n * num_channels + k] != 0; }
};

SlotOutcome simulate_slot(const StrategyProfile& profile, const Instance& instance, Rng& rng);

/// Buffer-reusing form for long simulations.
void simulate_slot(const StrategyProfile& profile, const Instance& instance, Rng& rng, SlotOutcome& out);

/// Throughput of n in one slot: sum of u_n(k) over its successful channels.
double slot_throughput(UserId n, const SlotOutcome& outcome, const Instance& instance);

/// Fraction of slots in which no neighbor of n transmitted on k. Throws
/// EstimationError on an empty window.
double estimate_success_probability(UserId n, ChannelId k, std::span<const SlotOutcome> window);

/// Per-user sliding window of busy observations with running counts.
class WindowedEstimator {
 public:
  WindowedEstimator(std::size_t num_users, std::size_t num_channels, std::size_t window);

  void observe(const SlotOutcome& outcome);
  void flush(UserId n);
  /// Adds empty windows for users appended to the population.
  void resize(std::size_t num_users);

  std::size_t samples(UserId n) const { return history_[n].size(); }
  /// Idle fraction of the window of (n, k); throws EstimationError when empty.
  double estimate(UserId n, ChannelId k) const;

 private:
  std::size_t num_channels_;
  std::size_t window_;
  std::vector<std::deque<std::vector<std::uint8_t>>> history_;
  std::vector<std::vector<std::size_t>> busy_counts_;
};

enum class Termination { kConverged, kMaxIters, kCycleDetected };

const char* to_string(Termination termination);

struct TrajectoryStep {
  std::uint64_t iter = 0;
  std::vector<UserId> active;
  StrategyProfile profile;
  double potential = 0.0;
  std::vector<double> rates;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;  // steps[0] is the initial profile
  std::optional<std::uint64_t> converged_at;
  Termination termination = Termination::kMaxIters;
  std::optional<std::size_t> cycle_length;
  StrategyProfile final_profile;
  std::uint64_t iterations = 0;
};

/// Replaces the instance at updating time `at_iter` with `instance`, whose
/// first users must coincide with the current ones (see Instance::prefix).
struct PopulationEvent {
  std::uint64_t at_iter = 0;
  Instance instance;
};

struct RunOptions {
  std::uint64_t max_iters = 1000;
  // Replaces the algorithm's own initialization when set.
  std::optional<StrategyProfile> initial_profile;
  bool stop_on_convergence = true;
  bool record_steps = true;
  std::vector<PopulationEvent> population_events;  // sorted by at_iter
  // Called with every profile, including the initial one at iter 0.
  std::function<void(std::uint64_t, const StrategyProfile&)> on_step;
};

/// BR-DRM: every user starts on its top-M utility channels at p_n = P_n; at
/// each updating time the active users best-respond simultaneously to the
/// pre-update profile and switch only on a strict rate improvement. The run
/// counts as converged once every user has been active since the last
/// change without changing; converged_at is the iteration of that last change.
Trajectory run_br_drm(const Instance& instance, const UpdateMechanism& mechanism,
                      const EstimatorConfig& estimator, const RunOptions& options, Rng& rng);

struct ReplayMove {
  UserId user = 0;
  ChannelSet channels;
};

/// Applies `moves` from `initial`, throwing ValidationError naming the step of
/// the first move that does not strictly raise the mover's rate. Records the
/// first profile revisit as a cycle.
Trajectory run_better_response_replay(const Instance& instance, const StrategyProfile& initial,
                                      std::span<const ReplayMove> moves);

struct NbrfOptions {
  RunOptions run;
  // From the first t with beta(t) >= freeze_beta on, active users play the
  // deterministic best response instead of sampling.
  std::optional<double> freeze_beta;
  // Stop once frozen and the profile is a fairness NEP.
  bool stop_when_frozen_at_nep = true;
};

Trajectory run_nbrf(const Instance& instance, const UpdateMechanism& mechanism,
                    const CoolingSchedule& schedule, const NbrfOptions& options, Rng& rng);

/// Naive policy: every user draws M distinct allowed channels uniformly at
/// random once and transmits at p_n = P_n (or 1/(|I_n(k_n)|+1) when
/// `fair_probabilities`). The profile stays fixed for max_iters steps.
Trajectory run_naive(const Instance& instance, bool fair_probabilities, const RunOptions& options,
                     Rng& rng);

/// Monte Carlo of the naive policy with M = 1 where every slot each user
/// draws a fresh uniform channel and transmits with P_n. Returns the mean
/// per-user throughput over `slots`.
std::vector<double> simulate_naive_policy(const Instance& instance, std::uint64_t slots, Rng& rng);

/// Mean per-user throughput of a fixed profile over `slots` simulated slots.
std::vector<double> empirical_rates(const StrategyProfile& profile, const Instance& instance,
                                    std::uint64_t slots, Rng& rng);

}  // namespace spectrum
