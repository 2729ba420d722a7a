#include "spectrum/fairness_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spectrum/errors.hpp"

namespace spectrum {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_single_channel(const Instance& instance) {
  if (instance.channels_per_user() != 1) throw ArgumentError("the fairness game requires M = 1");
}

bool strictly_better(double current, double candidate) {
  if (candidate == kNegInf) return false;
  if (current == kNegInf) return true;
  return candidate - current > kFairnessNepTolerance * std::max(1.0, std::abs(current));
}

}  // namespace

std::vector<FairnessAction> fairness_action_grid(UserId n, const Instance& instance) {
  require_single_channel(instance);
  const std::size_t levels = instance.graph().degree(n) + 1;
  std::vector<FairnessAction> grid;
  grid.reserve(instance.num_channels() * levels);
  for (ChannelId k = 0; k < instance.num_channels(); ++k) {
    for (std::size_t r = 1; r <= levels; ++r) grid.push_back({k, 1.0 / static_cast<double>(r)});
  }
  return grid;
}

double cooperative_utility(UserId n, const FairnessAction& action, const StrategyProfile& profile,
                           const Instance& instance) {
  if (action.channel >= instance.num_channels()) throw ArgumentError("channel index out of range");
  const double p = action.attempt_prob;
  const double u = instance.utility(n, action.channel);
  if (!(p > 0.0) || !(u > 0.0)) return kNegInf;
  const auto& graph = instance.graph();
  const double interference = log_interference(n, action.channel, profile, graph);
  if (std::isinf(interference)) return kNegInf;
  const auto count = count_neighbors_on_channel(n, action.channel, profile, graph);
  if (p >= 1.0) {
    // 0 * log 0 := 0 when nobody shares the channel
    return count == 0 ? std::log(u) - interference : kNegInf;
  }
  return std::log(u) + std::log(p) - interference + static_cast<double>(count) * std::log1p(-p);
}

double exact_potential(const StrategyProfile& profile, const Instance& instance) {
  require_single_channel(instance);
  instance.check_profile(profile);
  double phi = 0.0;
  for (UserId n = 0; n < instance.num_users(); ++n) {
    const double rate = total_expected_rate(n, profile, instance);
    if (!(rate > 0.0)) return kNegInf;
    phi += std::log(rate);
  }
  return phi;
}

double optimal_attempt_probability(std::size_t neighbor_count_on_channel) {
  return 1.0 / static_cast<double>(neighbor_count_on_channel + 1);
}

ActionPmf noisy_br_distribution(UserId n, const StrategyProfile& profile, const Instance& instance,
                                double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  ActionPmf pmf;
  pmf.actions = fairness_action_grid(n, instance);
  std::vector<double> utility(pmf.actions.size());
  double top = kNegInf;
  for (std::size_t a = 0; a < pmf.actions.size(); ++a) {
    utility[a] = cooperative_utility(n, pmf.actions[a], profile, instance);
    top = std::max(top, utility[a]);
  }
  if (top == kNegInf) {
    throw DegenerateInstanceError("every action of user " + std::to_string(n) + " has -inf utility");
  }
  pmf.probs.resize(pmf.actions.size());
  double total = 0.0;
  for (std::size_t a = 0; a < utility.size(); ++a) {
    pmf.probs[a] = utility[a] == kNegInf ? 0.0 : std::exp(beta * (utility[a] - top));
    total += pmf.probs[a];
  }
  for (double& p : pmf.probs) p /= total;
  return pmf;
}

FairnessAction sample_noisy_br(UserId n, const StrategyProfile& profile, const Instance& instance,
                               double beta, Rng& rng) {
  const ActionPmf pmf = noisy_br_distribution(n, profile, instance, beta);
  const double draw = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < pmf.probs.size(); ++a) {
    if (pmf.probs[a] <= 0.0) continue;
    last_positive = a;
    cumulative += pmf.probs[a];
    if (draw < cumulative) return pmf.actions[a];
  }
  // rounding left the cumulative sum just under 1
  return pmf.actions[last_positive];
}

FairnessAction best_response_fairness(UserId n, const StrategyProfile& profile,
                                      const Instance& instance) {
  const Strategy& own = profile[n];
  FairnessAction best{own.channels.front(), own.attempt_prob};
  double best_value = cooperative_utility(n, best, profile, instance);
  for (const auto& action : fairness_action_grid(n, instance)) {
    const double value = cooperative_utility(n, action, profile, instance);
    if (strictly_better(best_value, value)) {
      best = action;
      best_value = value;
    }
  }
  return best;
}

FairnessNepReport is_nep_fairness(const StrategyProfile& profile, const Instance& instance) {
  require_single_channel(instance);
  instance.check_profile(profile);
  FairnessNepReport report;
  const auto& graph = instance.graph();
  for (UserId n = 0; n < instance.num_users(); ++n) {
    const FairnessAction current{profile[n].channels.front(), profile[n].attempt_prob};
    const double current_value = cooperative_utility(n, current, profile, instance);
    auto candidates = fairness_action_grid(n, instance);
    for (ChannelId k = 0; k < instance.num_channels(); ++k) {
      candidates.push_back(
          {k, optimal_attempt_probability(count_neighbors_on_channel(n, k, profile, graph))});
    }
    for (const auto& action : candidates) {
      const double value = cooperative_utility(n, action, profile, instance);
      if (strictly_better(current_value, value)) {
        report.is_nep = false;
        report.violating_user = n;
        report.improving_action = action;
        report.utility_gain = value - current_value;
        return report;
      }
    }
  }
  return report;
}

double per_channel_sum_log_rate(ChannelId k, const StrategyProfile& profile, const Instance& instance) {
  require_single_channel(instance);
  double total = 0.0;
  for (UserId n = 0; n < instance.num_users(); ++n) {
    if (profile[n].channels.front() != k) continue;
    const double rate = total_expected_rate(n, profile, instance);
    if (!(rate > 0.0)) return kNegInf;
    total += std::log(rate);
  }
  return total;
}

StrategyProfile with_optimal_attempt_probabilities(const std::vector<ChannelId>& allocation,
                                                   const Instance& instance) {
  require_single_channel(instance);
  if (allocation.size() != instance.num_users()) throw ArgumentError("allocation size must be N");
  StrategyProfile profile;
  profile.strategies.reserve(allocation.size());
  for (ChannelId k : allocation) profile.strategies.push_back(Strategy{{k}, 1.0});
  for (UserId n = 0; n < allocation.size(); ++n) {
    profile[n].attempt_prob = optimal_attempt_probability(
        count_neighbors_on_channel(n, allocation[n], profile, instance.graph()));
  }
  return profile;
}

StrategyProfile fairness_initial_profile(const Instance& instance) {
  require_single_channel(instance);
  std::vector<ChannelId> allocation(instance.num_users());
  for (UserId n = 0; n < instance.num_users(); ++n) {
    const auto u = instance.utilities(n);
    allocation[n] = static_cast<ChannelId>(std::max_element(u.begin(), u.end()) - u.begin());
  }
  return with_optimal_attempt_probabilities(allocation, instance);
}

GibbsDistribution gibbs_stationary(const Instance& instance, double beta) {
  require_single_channel(instance);
  const std::size_t n_users = instance.num_users();
  std::vector<std::vector<FairnessAction>> grids(n_users);
  std::uint64_t space = 1;
  for (UserId n = 0; n < n_users; ++n) {
    grids[n] = fairness_action_grid(n, instance);
    space *= grids[n].size();
    if (space > kGibbsEnumerationCap) {
      throw CapacityError("joint action space exceeds the Gibbs enumeration cap of " +
                          std::to_string(kGibbsEnumerationCap));
    }
  }
  GibbsDistribution dist;
  dist.profiles.reserve(space);
  std::vector<double> potential;
  potential.reserve(space);
  std::vector<std::size_t> digit(n_users, 0);
  StrategyProfile profile;
  profile.strategies.resize(n_users);
  for (std::uint64_t index = 0; index < space; ++index) {
    for (UserId n = 0; n < n_users; ++n) {
      profile[n] = Strategy{{grids[n][digit[n]].channel}, grids[n][digit[n]].attempt_prob};
    }
    dist.profiles.push_back(profile);
    potential.push_back(exact_potential(profile, instance));
    // last user varies fastest
    for (std::size_t pos = n_users; pos-- > 0;) {
      if (++digit[pos] < grids[pos].size()) break;
      digit[pos] = 0;
    }
  }
  double top = kNegInf;
  for (double phi : potential) top = std::max(top, phi);
  if (top == kNegInf) throw DegenerateInstanceError("every joint profile has -inf potential");
  dist.probs.resize(space);
  double total = 0.0;
  for (std::size_t i = 0; i < space; ++i) {
    dist.probs[i] = potential[i] == kNegInf ? 0.0 : std::exp(beta * (potential[i] - top));
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

double delta_lower_bound(const Instance& instance) {
  const double u_min = instance.min_utility();
  if (!(u_min > 0.0)) throw ArgumentError("delta bound requires strictly positive utilities");
  const double u_max = instance.max_utility();
  const double max_deg = static_cast<double>(instance.graph().max_degree());
  const double n = static_cast<double>(instance.num_users());
  return n * (std::log(u_max) - std::log(u_min / (max_deg + 1.0)) + max_deg * std::log(2.0));
}

DeltaRegime classify_delta(double delta, const Instance& instance) {
  return delta > delta_lower_bound(instance) ? DeltaRegime::kSufficient : DeltaRegime::kHeuristic;
}

// --- CoolingSchedule ---------------------------------------------------------

CoolingSchedule CoolingSchedule::fixed(double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("fixed beta must be >= 0");
  return CoolingSchedule(Kind::kFixed, beta, 1.0);
}

CoolingSchedule CoolingSchedule::logarithmic(double delta) {
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  return CoolingSchedule(Kind::kLogarithmic, 0.0, delta);
}

CoolingSchedule CoolingSchedule::piecewise_constant(double delta) {
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  return CoolingSchedule(Kind::kPiecewiseConstant, 0.0, delta);
}

double CoolingSchedule::beta(std::uint64_t t) const {
  switch (kind_) {
    case Kind::kFixed:
      return beta0_;
    case Kind::kLogarithmic:
      return t == 0 ? 0.0 : std::log(static_cast<double>(t)) / delta_;
    case Kind::kPiecewiseConstant: {
      if (t == 0) return 0.0;
      const double time = static_cast<double>(t);
      double start = 1.0;
      double level = 1.0;
      for (;;) {
        const double next = start + std::exp(level * delta_);
        if (time < next) return level;
        start = next;
        level += 1.0;
      }
    }
  }
  return 0.0;
}

std::vector<double> CoolingSchedule::breakpoints(std::size_t count) const {
  std::vector<double> out;
  double t = 1.0;
  for (std::size_t k = 1; k <= count; ++k) {
    out.push_back(t);
    t += std::exp(static_cast<double>(k) * delta_);
  }
  return out;
}

}  // namespace spectrum
