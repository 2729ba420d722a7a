#pragma once

// Cooperative fairness game (M = 1). Each user scores an action (k, p) by the
// cooperative utility
//
//   F_n(k, p) = log(u_n(k) p) - I_n(k) - log(1/(1-p)) |I_n(k)|
//
// whose unilateral differences equal those of the exact potential
// sum_n log R_n. Noisy best responses sample from a Gibbs distribution over
// the action grid {(k, 1/r) : r = 1 .. |I_n| + 1}.

#include <cstdint>
#include <optional>
#include <vector>

#include "spectrum/network_model.hpp"
#include "spectrum/rng.hpp"

namespace spectrum {

inline constexpr double kFairnessNepTolerance = 1e-9;

struct FairnessAction {
  ChannelId channel = 0;
  double attempt_prob = 1.0;

  bool operator==(const FairnessAction&) const = default;
};

/// Action grid of user n, channel-major: (0, 1), (0, 1/2), ...,
/// (0, 1/(|I_n|+1)), (1, 1), ...
std::vector<FairnessAction> fairness_action_grid(UserId n, const Instance& instance);

/// Cooperative utility of user n playing `action` against the rest of `profile`.
/// -inf when p = 0, u_n(k) = 0, a neighbor on k has p = 1, or p = 1 while
/// some neighbor shares k. With no neighbor on k, p = 1 gives log u_n(k).
double cooperative_utility(UserId n, const FairnessAction& action, const StrategyProfile& profile,
                           const Instance& instance);

/// sum_n log R_n(profile); -inf when any rate is zero.
double exact_potential(const StrategyProfile& profile, const Instance& instance);

/// 1 / (count + 1): the attempt probability maximizing log p + count log(1 - p).
double optimal_attempt_probability(std::size_t neighbor_count_on_channel);

struct ActionPmf {
  std::vector<FairnessAction> actions;
  std::vector<double> probs;
};

/// Softmax of beta * F_n over the action grid, max-shifted; -inf actions get
/// weight 0. Throws DegenerateInstanceError if every action is -inf.
ActionPmf noisy_br_distribution(UserId n, const StrategyProfile& profile, const Instance& instance,
                                double beta);

/// One inverse-CDF draw from noisy_br_distribution.
FairnessAction sample_noisy_br(UserId n, const StrategyProfile& profile, const Instance& instance,
                               double beta, Rng& rng);

/// Deterministic best response over the action grid: keeps the current
/// strategy unless some action is strictly better, else the first maximizer
/// in grid order.
FairnessAction best_response_fairness(UserId n, const StrategyProfile& profile,
                                      const Instance& instance);

struct FairnessNepReport {
  bool is_nep = true;
  std::optional<UserId> violating_user;
  std::optional<FairnessAction> improving_action;
  std::optional<double> utility_gain;
};

/// No user can raise F_n beyond the relative tolerance by any grid action or
/// by the per-channel optimum p = 1/(|I_n(k)|+1).
FairnessNepReport is_nep_fairness(const StrategyProfile& profile, const Instance& instance);

/// Sum-log rate of the users currently on channel k (0 for an empty channel).
double per_channel_sum_log_rate(ChannelId k, const StrategyProfile& profile, const Instance& instance);

/// Initial NBRF profile, built in two synchronous phases: every user takes
/// argmax_k u_n(k) (lowest index on ties), then every user sets
/// p_n = 1/(|I_n(k_n)|+1) from the resulting neighbor counts.
StrategyProfile fairness_initial_profile(const Instance& instance);

/// Sets p_n = 1/(|I_n(k_n)|+1) for every user of a channel allocation.
StrategyProfile with_optimal_attempt_probabilities(const std::vector<ChannelId>& allocation,
                                                   const Instance& instance);

struct GibbsDistribution {
  std::vector<StrategyProfile> profiles;
  std::vector<double> probs;
};

inline constexpr std::uint64_t kGibbsEnumerationCap = 1'000'000;

/// Stationary law exp(beta phi) / Z over every joint profile of grid actions.
/// Throws CapacityError when the joint action space exceeds the cap.
GibbsDistribution gibbs_stationary(const Instance& instance, double beta);

/// N (log max u - log(min u / (max|I_n|+1)) + max|I_n| log 2); throws if some
/// utility is zero.
double delta_lower_bound(const Instance& instance);

enum class DeltaRegime { kSufficient, kHeuristic };

/// kSufficient when delta exceeds delta_lower_bound(instance).
DeltaRegime classify_delta(double delta, const Instance& instance);

/// beta(t) for t = 1, 2, ...
class CoolingSchedule {
 public:
  enum class Kind { kFixed, kLogarithmic, kPiecewiseConstant };

  static CoolingSchedule fixed(double beta);
  /// beta(t) = log(t) / delta.
  static CoolingSchedule logarithmic(double delta);
  /// beta(t) = k on [t_k, t_{k+1}), t_1 = 1, t_{k+1} - t_k = e^{k delta}.
  static CoolingSchedule piecewise_constant(double delta);

  Kind kind() const { return kind_; }
  double beta0() const { return beta0_; }
  double delta() const { return delta_; }

  double beta(std::uint64_t t) const;

  /// Breakpoints t_1 .. t_count of the piecewise-constant schedule.
  std::vector<double> breakpoints(std::size_t count) const;

 private:
  CoolingSchedule(Kind kind, double beta0, double delta) : kind_(kind), beta0_(beta0), delta_(delta) {}

  Kind kind_;
  double beta0_;
  double delta_;
};

}  // namespace spectrum
