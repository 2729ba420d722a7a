#pragma once

// Brute-force references: exhaustive sum-log optimum, NEP enumeration for
// both games, subset-enumeration best response, and visit statistics.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "spectrum/dynamics.hpp"
#include "spectrum/network_model.hpp"

namespace spectrum {

inline constexpr std::uint64_t kOracleCapacity = 10'000'000;
inline constexpr double kOracleTieTolerance = 1e-9;

struct OracleResult {
  double optimum_value = 0.0;
  std::vector<StrategyProfile> optimizers;  // every profile within the tie tolerance
  std::uint64_t search_size = 0;
};

/// Enumerates all K^N channel allocations (M = 1), sets p_n = 1/(|I_n(k_n)|+1)
/// and maximizes sum_n log R_n. Rates are computed here from first principles,
/// independently of network_model. Throws CapacityError past kOracleCapacity.
OracleResult exhaustive_sum_log_rate(const Instance& instance);

/// Same search with p_n fixed at P_n: the sum-log reference of the rate game.
OracleResult exhaustive_sum_log_rate_at_caps(const Instance& instance);

/// Every profile with p_n = P_n where no user gains more than the relative
/// tolerance 1e-9 by switching to any other M-subset of allowed channels.
std::vector<StrategyProfile> exhaustive_drm_nep_enumeration(const Instance& instance);

/// Maximizer of sum_{k in S} u_n(k) v_n(k) over all allowed M-subsets S,
/// visited in lexicographic order; a later subset replaces the incumbent only
/// when better by more than 1e-12.
ChannelSet brute_force_best_response(UserId n, const StrategyProfile& profile, const Instance& instance);

/// Channel allocations with optimal attempt probabilities that are fairness NEPs.
std::vector<StrategyProfile> exhaustive_fairness_nep_enumeration(const Instance& instance);

/// All M-subsets of {0..K-1} in lexicographic order.
std::vector<ChannelSet> all_channel_subsets(std::size_t num_channels, std::size_t subset_size);

using ProfilePmf = std::map<StrategyProfile, double>;

/// Streaming visit counter for runs too long to keep as a Trajectory.
class VisitCounter {
 public:
  explicit VisitCounter(std::uint64_t burn_in = 0) : burn_in_(burn_in) {}

  /// Counts the profile unless iter < burn_in.
  void observe(std::uint64_t iter, const StrategyProfile& profile);
  std::uint64_t total() const { return total_; }
  /// Throws ArgumentError when nothing was counted.
  ProfilePmf pmf() const;

 private:
  std::uint64_t burn_in_;
  std::uint64_t total_ = 0;
  std::map<StrategyProfile, std::uint64_t> counts_;
};

/// Normalized visit counts of trajectory.steps[burn_in..]. Throws
/// ArgumentError when that window is empty.
ProfilePmf empirical_visit_distribution(const Trajectory& trajectory, std::size_t burn_in);

/// Total-variation distance: half the L1 distance over the union of supports.
double total_variation(const ProfilePmf& a, const ProfilePmf& b);

}  // namespace spectrum
