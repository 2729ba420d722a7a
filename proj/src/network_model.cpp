#include "spectrum/network_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spectrum/errors.hpp"

namespace spectrum {

namespace {

void check_user(UserId n, std::size_t num_users) {
  if (n >= num_users) {
    throw ArgumentError("user index " + std::to_string(n) + " out of range (N = " +
                        std::to_string(num_users) + ")");
  }
}

void check_channel(ChannelId k, std::size_t num_channels) {
  if (k >= num_channels) {
    throw ArgumentError("channel index " + std::to_string(k) + " out of range (K = " +
                        std::to_string(num_channels) + ")");
  }
}

}  // namespace

// --- InterferenceGraph -------------------------------------------------------

InterferenceGraph::InterferenceGraph(std::size_t num_users) : adjacency_(num_users) {}

InterferenceGraph InterferenceGraph::from_edges(std::size_t num_users,
                                                std::span<const std::pair<UserId, UserId>> edges) {
  InterferenceGraph g(num_users);
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

void InterferenceGraph::add_edge(UserId a, UserId b) {
  check_user(a, num_users());
  check_user(b, num_users());
  if (a == b) throw ArgumentError("self-loop on user " + std::to_string(a));
  auto insert = [](std::vector<UserId>& list, UserId v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) list.insert(it, v);
  };
  insert(adjacency_[a], b);
  insert(adjacency_[b], a);
}

std::size_t InterferenceGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& list : adjacency_) total += list.size();
  return total / 2;
}

std::span<const UserId> InterferenceGraph::neighbors(UserId n) const {
  check_user(n, num_users());
  return adjacency_[n];
}

std::size_t InterferenceGraph::max_degree() const {
  std::size_t best = 0;
  for (const auto& list : adjacency_) best = std::max(best, list.size());
  return best;
}

bool InterferenceGraph::adjacent(UserId a, UserId b) const {
  const auto list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

InterferenceGraph InterferenceGraph::prefix(std::size_t n) const {
  if (n > num_users()) throw ArgumentError("prefix larger than graph");
  InterferenceGraph g(n);
  for (UserId a = 0; a < n; ++a) {
    for (UserId b : adjacency_[a]) {
      if (b < n) g.adjacency_[a].push_back(b);
    }
  }
  return g;
}

// --- Strategy ----------------------------------------------------------------

bool Strategy::uses(ChannelId k) const {
  return std::binary_search(channels.begin(), channels.end(), k);
}

Strategy make_strategy(ChannelSet channels, double attempt_prob) {
  std::sort(channels.begin(), channels.end());
  if (std::adjacent_find(channels.begin(), channels.end()) != channels.end()) {
    throw ArgumentError("duplicate channel in strategy");
  }
  if (!(attempt_prob >= 0.0 && attempt_prob <= 1.0)) {
    throw ArgumentError("attempt probability outside [0, 1]");
  }
  return Strategy{std::move(channels), attempt_prob};
}

// --- Instance ----------------------------------------------------------------

Instance::Instance(InterferenceGraph graph, std::size_t num_channels,
                   std::size_t channels_per_user, std::vector<double> utilities,
                   std::vector<double> caps, std::optional<std::vector<bool>> allowed)
    : graph_(std::move(graph)),
      num_channels_(num_channels),
      channels_per_user_(channels_per_user),
      utilities_(std::move(utilities)),
      caps_(std::move(caps)),
      allowed_(std::move(allowed)) {
  const std::size_t n = graph_.num_users();
  if (num_channels_ == 0) throw ArgumentError("K must be positive");
  if (channels_per_user_ < 1 || channels_per_user_ > num_channels_) {
    throw ArgumentError("M must satisfy 1 <= M <= K");
  }
  if (utilities_.size() != n * num_channels_) throw ArgumentError("utility matrix must be N x K");
  for (double u : utilities_) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw ArgumentError("utilities must be finite and >= 0");
  }
  if (caps_.size() != n) throw ArgumentError("one attempt-probability cap per user required");
  for (double p : caps_) {
    // P_n = 1 is admitted for the regular-graph efficiency regime (K = |I| + 1).
    if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("caps must lie in (0, 1]");
  }
  if (allowed_) {
    if (allowed_->size() != n * num_channels_) throw ArgumentError("allowed mask must be N x K");
    for (UserId u = 0; u < n; ++u) {
      std::size_t count = 0;
      for (ChannelId k = 0; k < num_channels_; ++k) count += this->allowed(u, k) ? 1 : 0;
      if (count < channels_per_user_) {
        throw ArgumentError("user " + std::to_string(u) + " has fewer than M allowed channels");
      }
    }
  }
}

std::span<const double> Instance::utilities(UserId n) const {
  check_user(n, num_users());
  return std::span<const double>(utilities_).subspan(n * num_channels_, num_channels_);
}

bool Instance::allowed(UserId n, ChannelId k) const {
  if (!allowed_) return true;
  return (*allowed_)[n * num_channels_ + k];
}

double Instance::max_utility() const { return *std::max_element(utilities_.begin(), utilities_.end()); }

double Instance::min_utility() const { return *std::min_element(utilities_.begin(), utilities_.end()); }

Instance Instance::prefix(std::size_t n) const {
  if (n > num_users()) throw ArgumentError("prefix larger than instance");
  std::vector<double> u(utilities_.begin(), utilities_.begin() + n * num_channels_);
  std::vector<double> caps(caps_.begin(), caps_.begin() + n);
  std::optional<std::vector<bool>> mask;
  if (allowed_) mask.emplace(allowed_->begin(), allowed_->begin() + n * num_channels_);
  return Instance(graph_.prefix(n), num_channels_, channels_per_user_, std::move(u),
                  std::move(caps), std::move(mask));
}

void Instance::check_profile(const StrategyProfile& profile) const {
  if (profile.size() != num_users()) {
    throw ArgumentError("profile has " + std::to_string(profile.size()) + " strategies, expected " +
                        std::to_string(num_users()));
  }
  for (UserId n = 0; n < profile.size(); ++n) {
    const Strategy& s = profile[n];
    if (s.channels.size() != channels_per_user_) {
      throw ArgumentError("user " + std::to_string(n) + " does not hold exactly M channels");
    }
    for (std::size_t i = 0; i < s.channels.size(); ++i) {
      check_channel(s.channels[i], num_channels_);
      if (i > 0 && s.channels[i] <= s.channels[i - 1]) {
        throw ArgumentError("channel set of user " + std::to_string(n) + " is not sorted/distinct");
      }
    }
    if (!(s.attempt_prob >= 0.0 && s.attempt_prob <= 1.0)) {
      throw ArgumentError("attempt probability of user " + std::to_string(n) + " outside [0, 1]");
    }
  }
}

// --- rate formulas -----------------------------------------------------------

double success_probability(UserId n, ChannelId k, const StrategyProfile& profile,
                           const InterferenceGraph& graph) {
  check_user(n, graph.num_users());
  double v = 1.0;
  for (UserId i : graph.neighbors(n)) {
    if (profile[i].uses(k)) v *= 1.0 - profile[i].attempt_prob;
  }
  return v;
}

double log_interference(UserId n, ChannelId k, const StrategyProfile& profile,
                        const InterferenceGraph& graph) {
  check_user(n, graph.num_users());
  double total = 0.0;
  for (UserId i : graph.neighbors(n)) {
    if (!profile[i].uses(k)) continue;
    const double p = profile[i].attempt_prob;
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    total -= std::log1p(-p);
  }
  return total;
}

double expected_rate_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                const Instance& instance) {
  check_channel(k, instance.num_channels());
  const double p = profile[n].attempt_prob;
  if (p == 0.0) return 0.0;
  return p * instance.utility(n, k) * success_probability(n, k, profile, instance.graph());
}

double total_expected_rate(UserId n, const StrategyProfile& profile, const Instance& instance) {
  double rate = 0.0;
  for (ChannelId k : profile[n].channels) rate += expected_rate_on_channel(n, k, profile, instance);
  return rate;
}

std::vector<UserId> neighbors_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                         const InterferenceGraph& graph) {
  std::vector<UserId> out;
  for (UserId i : graph.neighbors(n)) {
    if (profile[i].uses(k)) out.push_back(i);
  }
  return out;
}

std::size_t count_neighbors_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                       const InterferenceGraph& graph) {
  std::size_t count = 0;
  for (UserId i : graph.neighbors(n)) count += profile[i].uses(k) ? 1 : 0;
  return count;
}

// --- graph builders ----------------------------------------------------------

InterferenceGraph graph_from_positions(std::span<const Point> positions, double interference_radius) {
  InterferenceGraph g(positions.size());
  const double r2 = interference_radius * interference_radius;
  for (UserId a = 0; a < positions.size(); ++a) {
    for (UserId b = a + 1; b < positions.size(); ++b) {
      const double dx = positions[a].x - positions[b].x;
      const double dy = positions[a].y - positions[b].y;
      if (dx * dx + dy * dy <= r2) g.add_edge(a, b);
    }
  }
  return g;
}

GeometricNetwork build_geometric_graph(Rng& rng, std::size_t num_users, double region_radius,
                                       double interference_radius) {
  if (num_users == 0) throw ArgumentError("geometric graph needs at least one user");
  if (!(region_radius > 0.0)) throw ArgumentError("region radius must be positive");
  if (!(interference_radius >= 0.0)) throw ArgumentError("interference radius must be >= 0");
  GeometricNetwork net;
  net.positions.reserve(num_users);
  for (std::size_t i = 0; i < num_users; ++i) {
    // sqrt of a uniform radius fraction gives area-uniform placement
    const double r = region_radius * std::sqrt(rng.uniform());
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    net.positions.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  net.graph = graph_from_positions(net.positions, interference_radius);
  return net;
}

InterferenceGraph build_regular_graph(std::size_t num_users, std::size_t degree) {
  if (num_users == 0) throw ArgumentError("regular graph needs at least one user");
  if (degree >= num_users) throw ArgumentError("degree must be smaller than the number of users");
  if ((degree * num_users) % 2 != 0) throw ArgumentError("degree * N must be even");
  InterferenceGraph g(num_users);
  for (UserId n = 0; n < num_users; ++n) {
    for (std::size_t d = 1; d <= degree / 2; ++d) g.add_edge(n, (n + d) % num_users);
    if (degree % 2 == 1) g.add_edge(n, (n + num_users / 2) % num_users);
  }
  return g;
}

StrategyProfile top_utility_profile(const Instance& instance) {
  StrategyProfile profile;
  profile.strategies.reserve(instance.num_users());
  for (UserId n = 0; n < instance.num_users(); ++n) {
    std::vector<ChannelId> order;
    for (ChannelId k = 0; k < instance.num_channels(); ++k) {
      if (instance.allowed(n, k)) order.push_back(k);
    }
    std::stable_sort(order.begin(), order.end(), [&](ChannelId a, ChannelId b) {
      return instance.utility(n, a) > instance.utility(n, b);
    });
    order.resize(instance.channels_per_user());
    profile.strategies.push_back(make_strategy(std::move(order), instance.cap(n)));
  }
  return profile;
}

Instance make_random_instance(Rng& rng, const RandomInstanceSpec& spec) {
  auto net = build_geometric_graph(rng, spec.num_users, spec.region_radius, spec.interference_radius);
  std::vector<double> u(spec.num_users * spec.num_channels);
  for (double& x : u) x = rng.uniform(spec.utility_low, spec.utility_high);
  std::vector<double> caps(spec.num_users);
  for (double& p : caps) p = rng.uniform(spec.cap_low, spec.cap_high);
  return Instance(std::move(net.graph), spec.num_channels, spec.channels_per_user, std::move(u),
                  std::move(caps));
}

}  // namespace spectrum
