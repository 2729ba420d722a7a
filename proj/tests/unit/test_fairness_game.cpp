#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spectrum/errors.hpp"
#include "spectrum/fairness_game.hpp"
#include "spectrum/oracle.hpp"
#include "support.hpp"

using namespace spectrum;
using namespace spectrum::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Instance random_fair_instance(Rng& rng, std::size_t max_users, std::size_t max_channels) {
  RandomInstanceSpec spec;
  spec.num_users = 1 + rng.index(max_users);
  spec.num_channels = 1 + rng.index(max_channels);
  return make_random_instance(rng, spec);
}

// Random grid action per user.
StrategyProfile random_grid_profile(const Instance& inst, Rng& rng) {
  StrategyProfile profile;
  for (UserId n = 0; n < inst.num_users(); ++n) {
    const auto grid = fairness_action_grid(n, inst);
    const auto& a = grid[rng.index(grid.size())];
    profile.strategies.push_back(Strategy{{a.channel}, a.attempt_prob});
  }
  return profile;
}

// F_n from the definition, with the neighbor product written out.
double reference_fair_utility(UserId n, ChannelId k, double p, const StrategyProfile& profile, const Instance& inst) {
  double value = std::log(inst.utility(n, k) * p);
  std::size_t count = 0;
  for (UserId r : inst.graph().neighbors(n)) {
    if (profile[r].channels.front() != k) continue;
    ++count;
    value += std::log(1.0 - profile[r].attempt_prob);
  }
  if (count > 0) value += static_cast<double>(count) * std::log(1.0 - p);
  return value;
}

}  // namespace

TEST_CASE("action grid") {
  InterferenceGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  const Instance inst = equal_utility_instance(g, 2, 1, 1.0, 0.5);
  const auto grid = fairness_action_grid(0, inst);
  REQUIRE(grid.size() == 6);
  CHECK(grid[0] == FairnessAction{0, 1.0});
  CHECK(grid[2] == FairnessAction{0, 1.0 / 3.0});
  CHECK(grid[3] == FairnessAction{1, 1.0});
  const Instance multi = equal_utility_instance(g, 2, 2, 1.0, 0.5);
  CHECK_THROWS_AS(fairness_action_grid(0, multi), ArgumentError);
}

TEST_CASE("cooperative utility edge values") {
  InterferenceGraph g(3);
  g.add_edge(0, 1);
  const Instance inst(g, 2, 1, {3.0, 2.0, 1.0, 1.0, 1.0, 1.0}, {0.5, 0.5, 0.5});
  const StrategyProfile profile{{Strategy{{0}, 1.0}, Strategy{{1}, 0.5}, Strategy{{0}, 1.0}}};
  CHECK(cooperative_utility(0, {0, 1.0}, profile, inst) == std::log(3.0));
  CHECK(cooperative_utility(0, {1, 1.0}, profile, inst) == -kInf);
  CHECK(cooperative_utility(0, {0, 0.0}, profile, inst) == -kInf);
  CHECK(cooperative_utility(0, {1, 0.5}, profile, inst) ==
        doctest::Approx(std::log(1.0) - 2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("exact potential") {
  SUBCASE("isolated users at p = 1") {
    const Instance inst(InterferenceGraph(2), 2, 1, {2.0, 3.0, 5.0, 7.0}, {0.5, 0.5});
    const StrategyProfile p{{Strategy{{1}, 1.0}, Strategy{{0}, 1.0}}};
    CHECK(exact_potential(p, inst) == doctest::Approx(std::log(3.0) + std::log(5.0)).epsilon(1e-15));
  }
  SUBCASE("neighbor at p = 1 gives -inf") {
    const Instance inst = equal_utility_instance(build_regular_graph(2, 1), 1, 1, 1.0, 0.5);
    CHECK(exact_potential(StrategyProfile{{Strategy{{0}, 1.0}, Strategy{{0}, 0.5}}}, inst) == -kInf);
  }
  SUBCASE("two evaluation paths and the utility bound") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
      const Instance inst = random_fair_instance(rng, 8, 4);
      const StrategyProfile p = random_single_channel_profile(inst, rng, 0.05, 0.95);
      const double phi = exact_potential(p, inst);
      REQUIRE(std::abs(phi - reference_sum_log(p, inst)) <= 1e-12);
      double bound = 0.0;
      for (UserId n = 0; n < inst.num_users(); ++n) {
        const auto u = inst.utilities(n);
        bound += std::log(*std::max_element(u.begin(), u.end()));
      }
      REQUIRE(phi < bound);
      double split = 0.0;
      for (ChannelId k = 0; k < inst.num_channels(); ++k) split += per_channel_sum_log_rate(k, p, inst);
      REQUIRE(std::abs(split - phi) <= 1e-12);
    }
  }
}

TEST_CASE("utility differences equal potential differences") {
  Rng rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const Instance inst = random_fair_instance(rng, 8, 4);
    const StrategyProfile before = random_single_channel_profile(inst, rng, 0.05, 0.95);
    const UserId n = rng.index(inst.num_users());
    StrategyProfile after = before;
    after[n].attempt_prob = rng.uniform(0.05, 0.95);
    if (rng.bernoulli(0.5)) after[n].channels = {static_cast<ChannelId>(rng.index(inst.num_channels()))};
    const double d_f = cooperative_utility(n, {after[n].channels.front(), after[n].attempt_prob}, before, inst) -
                       cooperative_utility(n, {before[n].channels.front(), before[n].attempt_prob}, before, inst);
    const double d_phi = exact_potential(after, inst) - exact_potential(before, inst);
    REQUIRE(std::abs(d_f - d_phi) <= 1e-9);
  }
}

TEST_CASE("optimal attempt probability") {
  CHECK(optimal_attempt_probability(0) == 1.0);
  CHECK(optimal_attempt_probability(1) == 0.5);
  for (std::size_t count = 1; count <= 10; ++count) {
    InterferenceGraph g(count + 1);
    for (UserId r = 1; r <= count; ++r) g.add_edge(0, r);
    const Instance inst = equal_utility_instance(g, 1, 1, 1.0, 0.5);
    StrategyProfile profile;
    for (UserId r = 0; r <= count; ++r) profile.strategies.push_back(Strategy{{0}, 0.3});
    double best_p = 0.0;
    double best_f = -kInf;
    for (int i = 1; i <= 9999; ++i) {
      const double p = i * 1e-4;
      const double f = cooperative_utility(0, {0, p}, profile, inst);
      if (f > best_f) {
        best_f = f;
        best_p = p;
      }
    }
    CHECK(std::abs(best_p - optimal_attempt_probability(count)) <= 1e-4);
  }
}

TEST_CASE("noisy best-response distribution") {
  Rng rng(41);
  const Instance inst = make_random_instance(rng, RandomInstanceSpec{});
  const StrategyProfile profile = random_grid_profile(inst, rng);
  SUBCASE("beta = 0 is uniform") {
    for (UserId n = 0; n < inst.num_users(); ++n) {
      const auto pmf = noisy_br_distribution(n, profile, inst, 0.0);
      std::size_t finite = 0;
      for (std::size_t a = 0; a < pmf.actions.size(); ++a) {
        // p = 1 next to a neighbor on the channel carries -inf utility
        const bool excluded = cooperative_utility(n, pmf.actions[a], profile, inst) == -kInf;
        CHECK(excluded == (pmf.probs[a] == 0.0));
        finite += excluded ? 0 : 1;
      }
      for (double p : pmf.probs) {
        if (p != 0.0) CHECK(p == doctest::Approx(1.0 / static_cast<double>(finite)));
      }
    }
  }
  SUBCASE("isolated user at beta = 0 spreads evenly over every action") {
    const Instance lone = equal_utility_instance(InterferenceGraph(1), 3, 1, 1.0, 0.5);
    const auto pmf = noisy_br_distribution(0, StrategyProfile{{Strategy{{0}, 1.0}}}, lone, 0.0);
    CHECK(pmf.probs.size() == 3);
    for (double p : pmf.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("normalized and peaked at large beta") {
    for (UserId n = 0; n < inst.num_users(); ++n) {
      const auto pmf = noisy_br_distribution(n, profile, inst, 1e4);
      CHECK(std::accumulate(pmf.probs.begin(), pmf.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      std::size_t arg = 0;
      double top = -kInf;
      for (std::size_t a = 0; a < pmf.actions.size(); ++a) {
        const double f = cooperative_utility(n, pmf.actions[a], profile, inst);
        if (f > top) {
          top = f;
          arg = a;
        }
      }
      CHECK(pmf.probs[arg] > 1.0 - 1e-6);
    }
  }
  SUBCASE("argmax carries the largest weight at moderate beta") {
    for (UserId n = 0; n < inst.num_users(); ++n) {
      const auto pmf = noisy_br_distribution(n, profile, inst, 0.7);
      const auto best = best_response_fairness(n, profile, inst);
      const auto it = std::find(pmf.actions.begin(), pmf.actions.end(), best);
      const double top = *std::max_element(pmf.probs.begin(), pmf.probs.end());
      CHECK(pmf.probs[static_cast<std::size_t>(it - pmf.actions.begin())] == top);
    }
  }
  SUBCASE("scaling all utilities leaves the pmf unchanged") {
    std::vector<double> scaled(inst.num_users() * inst.num_channels());
    for (UserId n = 0; n < inst.num_users(); ++n) {
      for (ChannelId k = 0; k < inst.num_channels(); ++k) scaled[n * inst.num_channels() + k] = 5.0 * inst.utility(n, k);
    }
    const Instance shifted(inst.graph(), inst.num_channels(), 1, scaled, std::vector<double>(inst.caps().begin(), inst.caps().end()));
    const auto a = noisy_br_distribution(0, profile, inst, 2.0);
    const auto b = noisy_br_distribution(0, profile, shifted, 2.0);
    for (std::size_t i = 0; i < a.probs.size(); ++i) CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(noisy_br_distribution(0, profile, inst, -1.0), ArgumentError);
    const Instance zero(InterferenceGraph(1), 2, 1, {0.0, 0.0}, {0.5});
    CHECK_THROWS_AS(noisy_br_distribution(0, StrategyProfile{{Strategy{{0}, 1.0}}}, zero, 1.0),
                    DegenerateInstanceError);
  }
}

TEST_CASE("noisy best-response sampling") {
  Rng rng(43);
  const Instance inst = equal_utility_instance(build_regular_graph(4, 2), 3, 1, 1.0, 0.5);
  const StrategyProfile profile{{Strategy{{0}, 0.5}, Strategy{{1}, 0.5}, Strategy{{0}, 0.5}, Strategy{{2}, 0.5}}};
  SUBCASE("beta = 0 passes a chi-square uniformity test") {
    // neighbors 1 and 3 hold channels 1 and 2, so (1, 1) and (2, 1) are excluded
    const auto grid = fairness_action_grid(0, inst);
    std::vector<double> counts(grid.size(), 0.0);
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
      const auto a = sample_noisy_br(0, profile, inst, 0.0, rng);
      counts[static_cast<std::size_t>(std::find(grid.begin(), grid.end(), a) - grid.begin())] += 1.0;
    }
    const auto pmf = noisy_br_distribution(0, profile, inst, 0.0);
    double chi2 = 0.0;
    std::size_t cells = 0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      if (pmf.probs[a] == 0.0) {
        CHECK(counts[a] == 0.0);
        continue;
      }
      const double expected = draws * pmf.probs[a];
      chi2 += (counts[a] - expected) * (counts[a] - expected) / expected;
      ++cells;
    }
    REQUIRE(cells == 7);
    CHECK(chi2 < 22.458);  // chi-square 0.999 quantile, 6 degrees of freedom
  }
  SUBCASE("seeded draws repeat") {
    Rng a(5);
    Rng b(5);
    for (int i = 0; i < 100; ++i) CHECK(sample_noisy_br(1, profile, inst, 1.5, a) == sample_noisy_br(1, profile, inst, 1.5, b));
  }
  SUBCASE("single-action grid") {
    const Instance lone = equal_utility_instance(InterferenceGraph(1), 1, 1, 2.0, 0.5);
    for (int i = 0; i < 10; ++i) {
      CHECK(sample_noisy_br(0, StrategyProfile{{Strategy{{0}, 0.2}}}, lone, 3.0, rng) == FairnessAction{0, 1.0});
    }
  }
}

TEST_CASE("fairness equilibria") {
  SUBCASE("separated neighbors at p = 1") {
    const Instance inst(build_regular_graph(2, 1), 2, 1, {2.0, 1.0, 1.0, 2.0}, {0.5, 0.5});
    const StrategyProfile p{{Strategy{{0}, 1.0}, Strategy{{1}, 1.0}}};
    CHECK(is_nep_fairness(p, inst).is_nep);
  }
  SUBCASE("off-optimal attempt probability") {
    const Instance inst = equal_utility_instance(build_regular_graph(3, 2), 1, 1, 1.0, 0.5);
    StrategyProfile p = with_optimal_attempt_probabilities({0, 0, 0}, inst);
    CHECK(p[0].attempt_prob == doctest::Approx(1.0 / 3.0));
    CHECK(is_nep_fairness(p, inst).is_nep);
    p[1].attempt_prob = 0.3;
    const auto report = is_nep_fairness(p, inst);
    CHECK_FALSE(report.is_nep);
  }
  SUBCASE("agreement with a fine deviation search on three-user instances") {
    Rng rng(61);
    int neps = 0;
    for (int trial = 0; trial < 300; ++trial) {
      RandomInstanceSpec spec;
      spec.num_users = 3;
      spec.num_channels = 2 + rng.index(2);
      spec.interference_radius = 12.0;
      const Instance inst = make_random_instance(rng, spec);
      std::vector<ChannelId> allocation(3);
      for (auto& k : allocation) k = rng.index(inst.num_channels());
      StrategyProfile p = with_optimal_attempt_probabilities(allocation, inst);
      if (rng.bernoulli(0.3)) p[rng.index(3)].attempt_prob = 1.0 / static_cast<double>(1 + rng.index(3));
      bool reference_nep = true;
      for (UserId n = 0; n < 3 && reference_nep; ++n) {
        const double current = reference_fair_utility(n, p[n].channels.front(), p[n].attempt_prob, p, inst);
        for (ChannelId k = 0; k < inst.num_channels(); ++k) {
          std::size_t count = 0;
          for (UserId r : inst.graph().neighbors(n)) count += p[r].channels.front() == k ? 1 : 0;
          std::vector<double> ps{1.0 / static_cast<double>(count + 1)};
          for (int i = 1; i < 1000; ++i) ps.push_back(i * 1e-3);
          for (double q : ps) {
            if (count > 0 && q >= 1.0) continue;
            const double value = reference_fair_utility(n, k, q, p, inst);
            if (std::isinf(current) ? std::isfinite(value)
                                    : value - current > 1e-9 * std::max(1.0, std::abs(current))) {
              reference_nep = false;
            }
          }
        }
      }
      neps += reference_nep ? 1 : 0;
      REQUIRE(is_nep_fairness(p, inst).is_nep == reference_nep);
    }
    CHECK(neps > 0);
    CHECK(neps < 300);
  }
}

TEST_CASE("per-channel sum-log rate") {
  const Instance inst = equal_utility_instance(build_regular_graph(4, 2), 2, 1, 1.0, 0.5);
  const auto p = with_optimal_attempt_probabilities({0, 0, 0, 0}, inst);
  CHECK(per_channel_sum_log_rate(1, p, inst) == 0.0);

  SUBCASE("gradient ascent reaches the closed form") {
    Rng rng(71);
    RandomInstanceSpec spec;
    spec.num_users = 8;
    spec.num_channels = 1;
    const Instance one = make_random_instance(rng, spec);
    const auto graph = one.graph();
    for (int start = 0; start < 10; ++start) {
      StrategyProfile q = random_single_channel_profile(one, rng, 0.05, 0.95);
      for (int it = 0; it < 20000; ++it) {
        for (UserId n = 0; n < 8; ++n) {
          const double upper = graph.degree(n) == 0 ? 1.0 : 1.0 - 1e-6;
          const double h = 1e-7;
          const double p0 = q[n].attempt_prob;
          q[n].attempt_prob = std::min(p0 + h, upper);
          const double hi = per_channel_sum_log_rate(0, q, one);
          q[n].attempt_prob = std::max(p0 - h, 1e-4);
          const double lo = per_channel_sum_log_rate(0, q, one);
          const double grad = (hi - lo) / (std::min(p0 + h, upper) - std::max(p0 - h, 1e-4));
          q[n].attempt_prob = std::clamp(p0 + 1e-3 * grad, 1e-4, upper);
        }
      }
      for (UserId n = 0; n < 8; ++n) {
        CHECK(std::abs(q[n].attempt_prob - optimal_attempt_probability(graph.degree(n))) <= 1e-6);
      }
    }
  }
}

TEST_CASE("initial fairness profile") {
  InterferenceGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  const Instance inst(g, 2, 1, {1.0, 2.0, 1.0, 3.0, 1.0, 5.0}, {0.5, 0.5, 0.5});
  const auto p = fairness_initial_profile(inst);
  CHECK(p[0] == Strategy{{1}, 0.5});
  CHECK(p[1] == Strategy{{1}, 1.0 / 3.0});
  CHECK(p[2] == Strategy{{1}, 0.5});
  const Instance tied(g, 2, 1, {4.0, 4.0, 3.0, 3.0, 1.0, 5.0}, {0.5, 0.5, 0.5});
  const auto q = fairness_initial_profile(tied);
  CHECK(q[0] == Strategy{{0}, 0.5});
  CHECK(q[1] == Strategy{{0}, 0.5});
  CHECK(q[2] == Strategy{{1}, 1.0});
}

TEST_CASE("Gibbs stationary distribution") {
  const Instance inst(build_regular_graph(2, 1), 2, 1, {1.0, 1.6, 1.3, 0.9}, {0.5, 0.5});
  SUBCASE("beta = 0 is uniform over finite-potential profiles") {
    const auto dist = gibbs_stationary(inst, 0.0);
    CHECK(dist.profiles.size() == 16);
    std::size_t finite = 0;
    for (const auto& p : dist.profiles) finite += std::isfinite(exact_potential(p, inst)) ? 1 : 0;
    for (std::size_t i = 0; i < dist.profiles.size(); ++i) {
      if (std::isfinite(exact_potential(dist.profiles[i], inst))) {
        CHECK(dist.probs[i] == doctest::Approx(1.0 / static_cast<double>(finite)));
      } else {
        CHECK(dist.probs[i] == 0.0);
      }
    }
  }
  SUBCASE("mode is the potential maximizer") {
    const auto dist = gibbs_stationary(inst, 1.0);
    CHECK(std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto mode = std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin();
    const auto oracle = exhaustive_sum_log_rate(inst);
    CHECK(dist.profiles[static_cast<std::size_t>(mode)] == oracle.optimizers.front());
  }
  SUBCASE("capacity") {
    const Instance big = equal_utility_instance(build_regular_graph(7, 6), 4, 1, 1.0, 0.5);
    CHECK_THROWS_AS(gibbs_stationary(big, 1.0), CapacityError);
  }
}

TEST_CASE("delta lower bound") {
  const Instance lone(InterferenceGraph(1), 1, 1, {1.0}, {0.5});
  CHECK(delta_lower_bound(lone) == 0.0);
  CHECK(classify_delta(0.1, lone) == DeltaRegime::kSufficient);
  const Instance homog = equal_utility_instance(build_regular_graph(6, 3), 2, 1, 7.0, 0.5);
  CHECK(delta_lower_bound(homog) == doctest::Approx(6.0 * (std::log(4.0) + 3.0 * std::log(2.0))));
  CHECK(classify_delta(1.0, homog) == DeltaRegime::kHeuristic);
  const Instance bigger = equal_utility_instance(build_regular_graph(8, 3), 2, 1, 7.0, 0.5);
  CHECK(delta_lower_bound(bigger) > delta_lower_bound(homog));
  const Instance zero(InterferenceGraph(1), 2, 1, {0.0, 1.0}, {0.5});
  CHECK_THROWS_AS(delta_lower_bound(zero), ArgumentError);
}

TEST_CASE("cooling schedules") {
  const auto log_sched = CoolingSchedule::logarithmic(2.0);
  CHECK(log_sched.beta(1) == 0.0);
  CHECK(log_sched.beta(100) == doctest::Approx(std::log(100.0) / 2.0));
  CHECK(CoolingSchedule::fixed(3.0).beta(17) == 3.0);
  const auto piece = CoolingSchedule::piecewise_constant(1.0);
  const auto starts = piece.breakpoints(6);
  REQUIRE(starts.size() == 6);
  CHECK(starts[0] == 1.0);
  for (std::size_t k = 1; k < starts.size(); ++k) {
    CHECK(starts[k] - starts[k - 1] == doctest::Approx(std::exp(static_cast<double>(k))));
  }
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto t = static_cast<std::uint64_t>(std::ceil(starts[k]));
    CHECK(piece.beta(t) == static_cast<double>(k + 1));
    // log(t_k)/delta tracks k up to the geometric-sum offset
    CHECK(std::abs(std::log(starts[k]) / 1.0 - static_cast<double>(k + 1)) <= 1.0);
  }
  CHECK_THROWS_AS(CoolingSchedule::logarithmic(0.0), ArgumentError);
  CHECK_THROWS_AS(CoolingSchedule::fixed(-1.0), ArgumentError);
}
