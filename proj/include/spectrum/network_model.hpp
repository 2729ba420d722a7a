#pragma once

// Game primitives shared by every other module: the interference graph,
// per-user strategies, and the slotted-ALOHA success and rate formulas.
//
// Indexing is 0-based for users and channels everywhere, including all
// serialized output.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spectrum/rng.hpp"

namespace spectrum {

using UserId = std::size_t;
using ChannelId = std::size_t;
using ChannelSet = std::vector<ChannelId>;  // sorted ascending, duplicate-free

/// Undirected, irreflexive conflict graph. Neighbor lists stay sorted.
class InterferenceGraph {
 public:
  InterferenceGraph() = default;
  explicit InterferenceGraph(std::size_t num_users);

  static InterferenceGraph from_edges(std::size_t num_users,
                                      std::span<const std::pair<UserId, UserId>> edges);

  /// Adds the symmetric edge {a, b}; a no-op if it already exists.
  void add_edge(UserId a, UserId b);

  std::size_t num_users() const { return adjacency_.size(); }
  std::size_t num_edges() const;
  std::span<const UserId> neighbors(UserId n) const;
  std::size_t degree(UserId n) const { return neighbors(n).size(); }
  std::size_t max_degree() const;
  bool adjacent(UserId a, UserId b) const;

  /// Subgraph induced by users [0, n).
  InterferenceGraph prefix(std::size_t n) const;

  bool operator==(const InterferenceGraph&) const = default;

 private:
  std::vector<std::vector<UserId>> adjacency_;
};

struct Strategy {
  ChannelSet channels;
  double attempt_prob = 0.0;

  bool uses(ChannelId k) const;

  auto operator<=>(const Strategy&) const = default;
  bool operator==(const Strategy&) const = default;
};

/// Builds a Strategy with its channel list sorted; throws on duplicates or a
/// probability outside [0, 1].
Strategy make_strategy(ChannelSet channels, double attempt_prob);

struct StrategyProfile {
  std::vector<Strategy> strategies;

  std::size_t size() const { return strategies.size(); }
  const Strategy& operator[](UserId n) const { return strategies[n]; }
  Strategy& operator[](UserId n) { return strategies[n]; }

  auto operator<=>(const StrategyProfile&) const = default;
  bool operator==(const StrategyProfile&) const = default;
};

/// The full game description: graph, K, M, collision-free utilities u_n(k),
/// attempt-probability caps P_n and an optional per-user allowed-channel mask.
class Instance {
 public:
  Instance(InterferenceGraph graph, std::size_t num_channels, std::size_t channels_per_user,
           std::vector<double> utilities, std::vector<double> caps,
           std::optional<std::vector<bool>> allowed = std::nullopt);

  const InterferenceGraph& graph() const { return graph_; }
  std::size_t num_users() const { return graph_.num_users(); }
  std::size_t num_channels() const { return num_channels_; }
  std::size_t channels_per_user() const { return channels_per_user_; }

  double utility(UserId n, ChannelId k) const { return utilities_[n * num_channels_ + k]; }
  std::span<const double> utilities(UserId n) const;
  double cap(UserId n) const { return caps_[n]; }
  std::span<const double> caps() const { return caps_; }

  bool has_mask() const { return allowed_.has_value(); }
  bool allowed(UserId n, ChannelId k) const;

  double max_utility() const;
  double min_utility() const;

  /// Instance restricted to users [0, n) (graph, utilities, caps and mask).
  Instance prefix(std::size_t n) const;

  /// Throws ArgumentError unless `profile` matches the instance dimensions
  /// and every channel set has exactly M valid entries.
  void check_profile(const StrategyProfile& profile) const;

 private:
  InterferenceGraph graph_;
  std::size_t num_channels_;
  std::size_t channels_per_user_;
  std::vector<double> utilities_;  // row-major N x K
  std::vector<double> caps_;
  std::optional<std::vector<bool>> allowed_;  // row-major N x K
};

/// Probability that no neighbor of n transmits on k: prod (1 - p_i)^{1_i(k)}.
double success_probability(UserId n, ChannelId k, const StrategyProfile& profile,
                           const InterferenceGraph& graph);

/// sum over neighbors on k of log(1 / (1 - p_i)); +inf when some p_i = 1.
double log_interference(UserId n, ChannelId k, const StrategyProfile& profile,
                        const InterferenceGraph& graph);

/// p_n * u_n(k) * v_n(k). Defined for any k, whether or not n uses it.
double expected_rate_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                const Instance& instance);

/// R_n: the per-channel expected rates summed over n's channel set.
double total_expected_rate(UserId n, const StrategyProfile& profile, const Instance& instance);

/// Neighbors of n whose channel set contains k, regardless of their p.
std::vector<UserId> neighbors_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                         const InterferenceGraph& graph);

std::size_t count_neighbors_on_channel(UserId n, ChannelId k, const StrategyProfile& profile,
                                       const InterferenceGraph& graph);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct GeometricNetwork {
  InterferenceGraph graph;
  std::vector<Point> positions;
};

/// Edge (n, r) iff |x_n - x_r| <= interference_radius.
InterferenceGraph graph_from_positions(std::span<const Point> positions, double interference_radius);

/// Users dropped uniformly in a disc of `region_radius` around the origin.
GeometricNetwork build_geometric_graph(Rng& rng, std::size_t num_users, double region_radius,
                                       double interference_radius);

/// Circulant graph: n ~ n +- 1 .. n +- degree/2 (mod N), plus the antipodal
/// edge n ~ n + N/2 when the degree is odd.
InterferenceGraph build_regular_graph(std::size_t num_users, std::size_t degree);

/// Initial profile of the rate game: each user takes its M highest-utility
/// (allowed) channels at p_n = P_n; ties go to the lower channel index.
StrategyProfile top_utility_profile(const Instance& instance);

/// Parameters of the random test-instance generator.
struct RandomInstanceSpec {
  std::size_t num_users = 6;
  std::size_t num_channels = 3;
  std::size_t channels_per_user = 1;
  double region_radius = 10.0;
  double interference_radius = 5.0;
  double utility_low = 0.5;  // u_n(k) ~ U(low, high), continuous
  double utility_high = 2.0;
  double cap_low = 0.1;  // P_n ~ U(low, high)
  double cap_high = 0.9;
};

Instance make_random_instance(Rng& rng, const RandomInstanceSpec& spec);

}  // namespace spectrum
