#pragma once

// Non-cooperative distributed rate maximization (DRM): every user plays
// p_n = P_n and picks the M channels that maximize its own expected rate.

#include <optional>
#include <span>
#include <vector>

#include "spectrum/network_model.hpp"

namespace spectrum {

/// Relative tolerance below which a rate gain does not count as an improvement.
inline constexpr double kDrmNepTolerance = 1e-9;

/// u_n(k) * v_n(k, sigma_-n) for every channel; the quantity ranked by the
/// best response. Computed for every channel, allowed or not.
std::vector<double> channel_scores(UserId n, const StrategyProfile& profile, const Instance& instance);

/// The M allowed channels with the largest u_n(k) v_n(k), ties broken toward
/// the lower channel index. Returned sorted ascending.
ChannelSet best_response_drm(UserId n, const StrategyProfile& profile, const Instance& instance);

/// Same selection rule applied to caller-supplied scores (e.g. estimated v).
ChannelSet best_response_from_scores(UserId n, std::span<const double> scores, const Instance& instance);

/// True when candidate - current exceeds the relative NEP tolerance.
bool is_strict_rate_improvement(double current, double candidate);

/// Best-response potential
///   sum_n log(1/(1-p_n)) * sum_{k in k_n} [ log u_n(k) - I_n(k)/2 ].
/// Returns -inf if some selected channel has zero utility, NaN if some user
/// transmits with p_n = 1 (the weight log(1/(1-p)) diverges).
double br_potential(const StrategyProfile& profile, const Instance& instance);

struct DrmNepReport {
  bool is_nep = true;
  std::optional<UserId> violating_user;
  std::optional<ChannelSet> improving_channels;
  std::optional<double> rate_gain;
};

/// Checks every user's rate at its current channel set against its best response.
DrmNepReport is_nep_drm(const StrategyProfile& profile, const Instance& instance);

/// Per-user rate ratio guaranteed at any BR-DRM equilibrium on a degree-regular
/// graph with equal utilities and P = K/(degree+1):
///   (1 - K/(d+1))^{(d+1)/K - 1} / (1 - 1/(d+1))^d.
/// Requires (d+1) divisible by K and d+1 >= K, d >= 1.
double efficiency_bound(std::size_t num_channels, std::size_t degree);

/// Expected rate of the naive policy (uniformly random channel, transmit with
/// P = K/(d+1)): u_n * P * (1 - 1/(d+1))^d. Validates the regular-graph,
/// equal-utility, equal-cap assumptions on `instance`.
double naive_expected_rate(UserId n, const Instance& instance, std::size_t degree);

}  // namespace spectrum
