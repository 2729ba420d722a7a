#pragma once

// Shared fixtures and first-principles reference formulas for the tests.
// The references deliberately avoid the library's rate functions.

#include <cmath>
#include <vector>

#include "spectrum/network_model.hpp"
#include "spectrum/rng.hpp"

namespace spectrum::testing {

// Two adjacent users, K = 4, M = 2, P = 0.5, U = [[1,2,1,2],[2,1,2,1]].
inline Instance cycle_instance() {
  InterferenceGraph g(2);
  g.add_edge(0, 1);
  return Instance(std::move(g), 4, 2, {1, 2, 1, 2, 2, 1, 2, 1}, {0.5, 0.5});
}

inline StrategyProfile cycle_start() {
  return StrategyProfile{{Strategy{{0, 1}, 0.5}, Strategy{{1, 2}, 0.5}}};
}

inline bool holds(const Strategy& s, ChannelId k) {
  for (ChannelId c : s.channels) {
    if (c == k) return true;
  }
  return false;
}

// v_n(k) by scanning every user and asking the graph for adjacency.
inline double reference_success(UserId n, ChannelId k, const StrategyProfile& profile, const InterferenceGraph& g) {
  double v = 1.0;
  for (UserId r = 0; r < profile.size(); ++r) {
    if (r != n && g.adjacent(n, r) && holds(profile[r], k)) v *= 1.0 - profile[r].attempt_prob;
  }
  return v;
}

inline double reference_rate(UserId n, const StrategyProfile& profile, const Instance& inst) {
  double total = 0.0;
  for (ChannelId k : profile[n].channels) {
    total += profile[n].attempt_prob * inst.utility(n, k) * reference_success(n, k, profile, inst.graph());
  }
  return total;
}

inline double reference_sum_log(const StrategyProfile& profile, const Instance& inst) {
  double total = 0.0;
  for (UserId n = 0; n < profile.size(); ++n) total += std::log(reference_rate(n, profile, inst));
  return total;
}

// Each user gets M distinct uniform channels and p = P_n.
inline StrategyProfile random_profile(const Instance& inst, Rng& rng) {
  StrategyProfile profile;
  for (UserId n = 0; n < inst.num_users(); ++n) {
    std::vector<ChannelId> pool(inst.num_channels());
    for (ChannelId k = 0; k < pool.size(); ++k) pool[k] = k;
    for (std::size_t i = 0; i < inst.channels_per_user(); ++i) {
      std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    }
    pool.resize(inst.channels_per_user());
    profile.strategies.push_back(make_strategy(pool, inst.cap(n)));
  }
  return profile;
}

// M = 1 profile with a uniform channel and p ~ U(lo, hi) per user.
inline StrategyProfile random_single_channel_profile(const Instance& inst, Rng& rng, double lo, double hi) {
  StrategyProfile profile;
  for (UserId n = 0; n < inst.num_users(); ++n) {
    profile.strategies.push_back(Strategy{{static_cast<ChannelId>(rng.index(inst.num_channels()))}, rng.uniform(lo, hi)});
  }
  return profile;
}

inline Instance equal_utility_instance(InterferenceGraph g, std::size_t k, std::size_t m, double u, double cap) {
  const std::size_t n = g.num_users();
  return Instance(std::move(g), k, m, std::vector<double>(n * k, u), std::vector<double>(n, cap));
}

}  // namespace spectrum::testing
