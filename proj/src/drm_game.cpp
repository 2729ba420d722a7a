#include "spectrum/drm_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spectrum/errors.hpp"

namespace spectrum {

std::vector<double> channel_scores(UserId n, const StrategyProfile& profile, const Instance& instance) {
  std::vector<double> scores(instance.num_channels());
  for (ChannelId k = 0; k < instance.num_channels(); ++k) {
    scores[k] = instance.utility(n, k) * success_probability(n, k, profile, instance.graph());
  }
  return scores;
}

ChannelSet best_response_drm(UserId n, const StrategyProfile& profile, const Instance& instance) {
  return best_response_from_scores(n, channel_scores(n, profile, instance), instance);
}

ChannelSet best_response_from_scores(UserId n, std::span<const double> scores, const Instance& instance) {
  if (scores.size() != instance.num_channels()) throw ArgumentError("one score per channel required");
  ChannelSet order;
  for (ChannelId k = 0; k < instance.num_channels(); ++k) {
    if (instance.allowed(n, k)) order.push_back(k);
  }
  const std::size_t m = instance.channels_per_user();
  if (order.size() < m) {
    throw ArgumentError("user " + std::to_string(n) + " has fewer than M allowed channels");
  }
  // stable_sort on descending score keeps ascending index among ties
  std::stable_sort(order.begin(), order.end(),
                   [&](ChannelId a, ChannelId b) { return scores[a] > scores[b]; });
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

bool is_strict_rate_improvement(double current, double candidate) {
  const double scale = std::max(std::abs(current), std::abs(candidate));
  return candidate - current > kDrmNepTolerance * scale;
}

double br_potential(const StrategyProfile& profile, const Instance& instance) {
  instance.check_profile(profile);
  const auto& graph = instance.graph();
  double phi = 0.0;
  bool zero_utility = false;
  for (UserId n = 0; n < instance.num_users(); ++n) {
    const double p = profile[n].attempt_prob;
    if (p >= 1.0) return std::numeric_limits<double>::quiet_NaN();
    const double weight = -std::log1p(-p);
    double inner = 0.0;
    for (ChannelId k : profile[n].channels) {
      const double u = instance.utility(n, k);
      if (u <= 0.0) {
        zero_utility = true;
        continue;
      }
      inner += std::log(u) - 0.5 * log_interference(n, k, profile, graph);
    }
    phi += weight * inner;
  }
  if (zero_utility) return -std::numeric_limits<double>::infinity();
  return phi;
}

DrmNepReport is_nep_drm(const StrategyProfile& profile, const Instance& instance) {
  instance.check_profile(profile);
  DrmNepReport report;
  StrategyProfile trial = profile;
  for (UserId n = 0; n < instance.num_users(); ++n) {
    const double current = total_expected_rate(n, profile, instance);
    ChannelSet best = best_response_drm(n, profile, instance);
    trial[n].channels = best;
    const double candidate = total_expected_rate(n, trial, instance);
    trial[n] = profile[n];
    if (is_strict_rate_improvement(current, candidate)) {
      report.is_nep = false;
      report.violating_user = n;
      report.improving_channels = std::move(best);
      report.rate_gain = candidate - current;
      return report;
    }
  }
  return report;
}

namespace {

void check_efficiency_regime(std::size_t num_channels, std::size_t degree) {
  if (num_channels == 0) throw ArgumentError("K must be positive");
  if (degree == 0) throw ArgumentError("degree 0 lies outside the regular-graph efficiency regime");
  if (degree + 1 < num_channels) throw ArgumentError("efficiency analysis requires degree + 1 >= K");
  if ((degree + 1) % num_channels != 0) {
    throw ArgumentError("efficiency analysis requires (degree + 1) divisible by K");
  }
}

}  // namespace

double efficiency_bound(std::size_t num_channels, std::size_t degree) {
  check_efficiency_regime(num_channels, degree);
  const double d1 = static_cast<double>(degree + 1);
  const double k = static_cast<double>(num_channels);
  // pow(0, 0) == 1 covers the d + 1 == K boundary
  const double numerator = std::pow(1.0 - k / d1, d1 / k - 1.0);
  const double denominator = std::pow(1.0 - 1.0 / d1, static_cast<double>(degree));
  return numerator / denominator;
}

double naive_expected_rate(UserId n, const Instance& instance, std::size_t degree) {
  const std::size_t num_channels = instance.num_channels();
  check_efficiency_regime(num_channels, degree);
  if (n >= instance.num_users()) throw ArgumentError("user index out of range");
  const auto& graph = instance.graph();
  for (UserId i = 0; i < instance.num_users(); ++i) {
    if (graph.degree(i) != degree) throw ArgumentError("graph is not " + std::to_string(degree) + "-regular");
  }
  const double d1 = static_cast<double>(degree + 1);
  const double cap = static_cast<double>(num_channels) / d1;
  for (UserId i = 0; i < instance.num_users(); ++i) {
    if (std::abs(instance.cap(i) - cap) > 1e-12) throw ArgumentError("caps must all equal K/(degree+1)");
  }
  const double u = instance.utility(n, 0);
  for (ChannelId k = 1; k < num_channels; ++k) {
    if (instance.utility(n, k) != u) throw ArgumentError("utilities must be equal across channels");
  }
  return u * cap * std::pow(1.0 - 1.0 / d1, static_cast<double>(degree));
}

}  // namespace spectrum
