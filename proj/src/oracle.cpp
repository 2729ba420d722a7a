#include "spectrum/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "spectrum/errors.hpp"
#include "spectrum/fairness_game.hpp"

namespace spectrum {

namespace {

std::uint64_t checked_power(std::uint64_t base, std::size_t exponent, std::uint64_t cap, const char* what) {
  std::uint64_t size = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && size > cap / base) {
      throw CapacityError(std::string(what) + " exceeds the oracle cap of " + std::to_string(cap) + " profiles");
    }
    size *= base;
  }
  if (size > cap) {
    throw CapacityError(std::string(what) + " exceeds the oracle cap of " + std::to_string(cap) + " profiles");
  }
  return size;
}

bool allocation_allowed(const std::vector<ChannelId>& allocation, const Instance& instance) {
  for (UserId n = 0; n < allocation.size(); ++n) {
    if (!instance.allowed(n, allocation[n])) return false;
  }
  return true;
}

// Odometer over per-user digits, user 0 fastest.
bool advance(std::vector<std::size_t>& digits, std::size_t radix) {
  for (auto& d : digits) {
    if (++d < radix) return true;
    d = 0;
  }
  return false;
}

}  // namespace

std::vector<ChannelSet> all_channel_subsets(std::size_t num_channels, std::size_t subset_size) {
  std::vector<ChannelSet> out;
  if (subset_size > num_channels) return out;
  ChannelSet current;
  std::function<void(ChannelId)> rec = [&](ChannelId start) {
    if (current.size() == subset_size) {
      out.push_back(current);
      return;
    }
    for (ChannelId k = start; k + (subset_size - current.size()) <= num_channels; ++k) {
      current.push_back(k);
      rec(k + 1);
      current.pop_back();
    }
  };
  rec(0);
  return out;
}

namespace {

OracleResult sum_log_search(const Instance& instance, bool at_caps) {
  if (instance.channels_per_user() != 1) throw ArgumentError("exhaustive sum-log search requires M = 1");
  const std::size_t n_users = instance.num_users();
  const std::size_t n_channels = instance.num_channels();
  OracleResult result;
  result.search_size = checked_power(n_channels, n_users, kOracleCapacity, "sum-log search space");
  const auto& graph = instance.graph();

  std::vector<std::size_t> digits(n_users, 0);
  std::vector<double> p(n_users);
  std::vector<std::vector<ChannelId>> best_allocations;
  std::optional<std::vector<ChannelId>> first_allowed;
  double best = -std::numeric_limits<double>::infinity();
  do {
    const std::vector<ChannelId> allocation(digits.begin(), digits.end());
    if (!allocation_allowed(allocation, instance)) continue;
    if (!first_allowed) first_allowed = allocation;
    for (UserId n = 0; n < n_users; ++n) {
      if (at_caps) {
        p[n] = instance.cap(n);
        continue;
      }
      std::size_t same = 0;
      for (UserId r : graph.neighbors(n)) same += allocation[r] == allocation[n] ? 1 : 0;
      p[n] = 1.0 / static_cast<double>(same + 1);
    }
    double value = 0.0;
    for (UserId n = 0; n < n_users; ++n) {
      double rate = instance.utility(n, allocation[n]) * p[n];
      for (UserId r : graph.neighbors(n)) {
        if (allocation[r] == allocation[n]) rate *= 1.0 - p[r];
      }
      value += rate > 0.0 ? std::log(rate) : -std::numeric_limits<double>::infinity();
    }
    if (value > best + kOracleTieTolerance) {
      best = value;
      best_allocations.clear();
      best_allocations.push_back(allocation);
    } else if (std::abs(value - best) <= kOracleTieTolerance) {
      best_allocations.push_back(allocation);
    }
  } while (advance(digits, n_channels));

  if (!first_allowed) throw ArgumentError("no admissible channel allocation");
  // Every allocation leaves some user at rate zero.
  if (best_allocations.empty()) best_allocations.push_back(*first_allowed);
  result.optimum_value = best;
  for (const auto& allocation : best_allocations) {
    if (at_caps) {
      StrategyProfile profile;
      for (UserId n = 0; n < n_users; ++n) profile.strategies.push_back(Strategy{{allocation[n]}, instance.cap(n)});
      result.optimizers.push_back(std::move(profile));
    } else {
      result.optimizers.push_back(with_optimal_attempt_probabilities(allocation, instance));
    }
  }
  // Ties admitted early may sit just below the final optimum.
  std::erase_if(result.optimizers, [&](const StrategyProfile& profile) {
    return std::abs(exact_potential(profile, instance) - best) > kOracleTieTolerance;
  });
  return result;
}

}  // namespace

OracleResult exhaustive_sum_log_rate(const Instance& instance) { return sum_log_search(instance, false); }

OracleResult exhaustive_sum_log_rate_at_caps(const Instance& instance) { return sum_log_search(instance, true); }

std::vector<StrategyProfile> exhaustive_drm_nep_enumeration(const Instance& instance) {
  const std::size_t n_users = instance.num_users();
  const std::size_t n_channels = instance.num_channels();
  const std::size_t m = instance.channels_per_user();
  const auto subsets = all_channel_subsets(n_channels, m);
  checked_power(subsets.size(), n_users, kOracleCapacity, "NEP search space");
  const auto& graph = instance.graph();

  std::vector<StrategyProfile> neps;
  std::vector<std::size_t> digits(n_users, 0);
  std::vector<std::vector<std::uint8_t>> uses(n_users, std::vector<std::uint8_t>(n_channels, 0));
  std::vector<double> scores(n_channels);
  std::vector<double> allowed_scores;
  do {
    bool admissible = true;
    for (UserId n = 0; n < n_users && admissible; ++n) {
      std::fill(uses[n].begin(), uses[n].end(), 0);
      for (ChannelId k : subsets[digits[n]]) {
        uses[n][k] = 1;
        admissible = admissible && instance.allowed(n, k);
      }
    }
    if (!admissible) continue;
    bool is_nep = true;
    for (UserId n = 0; n < n_users && is_nep; ++n) {
      for (ChannelId k = 0; k < n_channels; ++k) {
        double v = 1.0;
        for (UserId r : graph.neighbors(n)) {
          if (uses[r][k]) v *= 1.0 - instance.cap(r);
        }
        scores[k] = instance.utility(n, k) * v;
      }
      double current = 0.0;
      for (ChannelId k : subsets[digits[n]]) current += scores[k];
      allowed_scores.clear();
      for (ChannelId k = 0; k < n_channels; ++k) {
        if (instance.allowed(n, k)) allowed_scores.push_back(scores[k]);
      }
      std::sort(allowed_scores.begin(), allowed_scores.end(), std::greater<>());
      double top = 0.0;
      for (std::size_t i = 0; i < m; ++i) top += allowed_scores[i];
      // p_n scales both sides of the rate comparison equally
      const double scale = std::max(std::abs(current), std::abs(top));
      if (top - current > 1e-9 * scale) is_nep = false;
    }
    if (!is_nep) continue;
    StrategyProfile profile;
    for (UserId n = 0; n < n_users; ++n) profile.strategies.push_back(Strategy{subsets[digits[n]], instance.cap(n)});
    neps.push_back(std::move(profile));
  } while (advance(digits, subsets.size()));
  return neps;
}

ChannelSet brute_force_best_response(UserId n, const StrategyProfile& profile, const Instance& instance) {
  if (n >= instance.num_users()) throw ArgumentError("user index out of range");
  const auto& graph = instance.graph();
  std::vector<double> scores(instance.num_channels());
  for (ChannelId k = 0; k < instance.num_channels(); ++k) {
    double v = 1.0;
    for (UserId r : graph.neighbors(n)) {
      const auto& channels = profile[r].channels;
      if (std::find(channels.begin(), channels.end(), k) != channels.end()) v *= 1.0 - profile[r].attempt_prob;
    }
    scores[k] = instance.utility(n, k) * v;
  }
  ChannelSet best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& subset : all_channel_subsets(instance.num_channels(), instance.channels_per_user())) {
    bool admissible = true;
    double value = 0.0;
    for (ChannelId k : subset) {
      admissible = admissible && instance.allowed(n, k);
      value += scores[k];
    }
    if (!admissible) continue;
    if (best.empty() || value > best_value + 1e-12) {
      best = subset;
      best_value = value;
    }
  }
  if (best.empty()) throw ArgumentError("user " + std::to_string(n) + " has no admissible channel subset");
  return best;
}

std::vector<StrategyProfile> exhaustive_fairness_nep_enumeration(const Instance& instance) {
  if (instance.channels_per_user() != 1) throw ArgumentError("fairness NEP enumeration requires M = 1");
  const std::size_t n_users = instance.num_users();
  checked_power(instance.num_channels(), n_users, kOracleCapacity, "fairness NEP search space");
  std::vector<StrategyProfile> neps;
  std::vector<std::size_t> digits(n_users, 0);
  do {
    const std::vector<ChannelId> allocation(digits.begin(), digits.end());
    if (!allocation_allowed(allocation, instance)) continue;
    StrategyProfile profile = with_optimal_attempt_probabilities(allocation, instance);
    if (is_nep_fairness(profile, instance).is_nep) neps.push_back(std::move(profile));
  } while (advance(digits, instance.num_channels()));
  return neps;
}

// --- visit statistics --------------------------------------------------------

void VisitCounter::observe(std::uint64_t iter, const StrategyProfile& profile) {
  if (iter < burn_in_) return;
  ++counts_[profile];
  ++total_;
}

ProfilePmf VisitCounter::pmf() const {
  if (total_ == 0) throw ArgumentError("no visits recorded after burn-in");
  ProfilePmf out;
  for (const auto& [profile, count] : counts_) {
    out.emplace(profile, static_cast<double>(count) / static_cast<double>(total_));
  }
  return out;
}

ProfilePmf empirical_visit_distribution(const Trajectory& trajectory, std::size_t burn_in) {
  if (burn_in >= trajectory.steps.size()) throw ArgumentError("burn-in leaves no trajectory steps");
  VisitCounter counter;
  for (std::size_t i = burn_in; i < trajectory.steps.size(); ++i) counter.observe(i, trajectory.steps[i].profile);
  return counter.pmf();
}

double total_variation(const ProfilePmf& a, const ProfilePmf& b) {
  double sum = 0.0;
  for (const auto& [profile, pa] : a) {
    const auto it = b.find(profile);
    sum += std::abs(pa - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [profile, pb] : b) {
    if (!a.contains(profile)) sum += pb;
  }
  return 0.5 * sum;
}

}  // namespace spectrum
