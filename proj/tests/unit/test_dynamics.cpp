#include <doctest.h>

#include <cmath>
#include <numeric>

#include "spectrum/drm_game.hpp"
#include "spectrum/dynamics.hpp"
#include "spectrum/errors.hpp"
#include "spectrum/oracle.hpp"
#include "support.hpp"

using namespace spectrum;
using namespace spectrum::testing;

namespace {

std::vector<ReplayMove> cycle_moves() {
  return {{0, {2, 3}}, {1, {0, 3}}, {0, {0, 1}}, {1, {1, 2}}};
}

InterferenceGraph complete_graph(std::size_t n) { return build_regular_graph(n, n - 1); }

}  // namespace

TEST_CASE("active-set selection") {
  Rng rng(1);
  SUBCASE("backoff without edges activates everyone") {
    CHECK(select_active(UpdateMechanism::backoff(), InterferenceGraph(6), rng) ==
          std::vector<UserId>{0, 1, 2, 3, 4, 5});
  }
  SUBCASE("backoff on a complete graph activates one user") {
    for (int i = 0; i < 1000; ++i) REQUIRE(select_active(UpdateMechanism::backoff(2.0), complete_graph(7), rng).size() == 1);
  }
  SUBCASE("backoff active sets are independent") {
    ActiveSelector selector(UpdateMechanism::backoff());
    RandomInstanceSpec spec;
    spec.num_users = 15;
    std::vector<InterferenceGraph> graphs;
    for (int g = 0; g < 10; ++g) graphs.push_back(make_random_instance(rng, spec).graph());
    for (int i = 0; i < 100000; ++i) {
      const auto& g = graphs[static_cast<std::size_t>(i % 10)];
      const auto active = selector.select(g, rng);
      REQUIRE_FALSE(active.empty());
      for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) REQUIRE_FALSE(g.adjacent(active[a], active[b]));
      }
    }
  }
  SUBCASE("probabilistic inclusion frequency") {
    ActiveSelector selector(UpdateMechanism::probabilistic({0.2, 0.5, 0.8}));
    std::vector<double> hits(3, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      for (UserId n : selector.select(complete_graph(3), rng)) hits[n] += 1.0;
    }
    const std::vector<double> q{0.2, 0.5, 0.8};
    for (UserId n = 0; n < 3; ++n) {
      CHECK(std::abs(hits[n] / draws - q[n]) <= 3.0 * std::sqrt(q[n] * (1.0 - q[n]) / draws));
    }
  }
  SUBCASE("sweep is round robin") {
    ActiveSelector selector(UpdateMechanism::sweep());
    for (UserId i = 0; i < 9; ++i) CHECK(selector.select(InterferenceGraph(4), rng) == std::vector<UserId>{i % 4});
  }
  SUBCASE("invalid mechanisms") {
    CHECK_THROWS_AS(UpdateMechanism::backoff(0.0), ArgumentError);
    CHECK_THROWS_AS(UpdateMechanism::probabilistic(1.0), ArgumentError);
    ActiveSelector short_list(UpdateMechanism::probabilistic({0.5, 0.5}));
    CHECK_THROWS_AS(short_list.select(InterferenceGraph(3), rng), ArgumentError);
  }
}

TEST_CASE("BR-DRM runs") {
  Rng rng(2);
  SUBCASE("a single user is converged from the start") {
    const Instance inst(InterferenceGraph(1), 3, 1, {1.0, 3.0, 2.0}, {0.5});
    const auto traj = run_br_drm(inst, UpdateMechanism::sweep(), EstimatorConfig::exact(), RunOptions{}, rng);
    CHECK(traj.termination == Termination::kConverged);
    CHECK(*traj.converged_at == 0);
    CHECK(traj.final_profile[0].channels == ChannelSet{1});
  }
  SUBCASE("sweep from the cycle start converges without cycling") {
    RunOptions opts;
    opts.initial_profile = cycle_start();
    const Instance inst = cycle_instance();
    const auto traj = run_br_drm(inst, UpdateMechanism::sweep(), EstimatorConfig::exact(), opts, rng);
    CHECK(traj.termination == Termination::kConverged);
    CHECK(is_nep_drm(traj.final_profile, inst).is_nep);
    CHECK(traj.steps[1].profile[0].channels == ChannelSet{0, 3});
    for (std::size_t i = 1; i < traj.steps.size(); ++i) CHECK(traj.steps[i].potential >= traj.steps[i - 1].potential);
  }
  SUBCASE("potential rises at every change under backoff and sweep") {
    for (int trial = 0; trial < 200; ++trial) {
      RandomInstanceSpec spec;
      spec.num_users = 2 + rng.index(9);
      spec.num_channels = 2 + rng.index(4);
      spec.channels_per_user = 1 + rng.index(std::min<std::size_t>(3, spec.num_channels - 1));
      const Instance inst = make_random_instance(rng, spec);
      const auto mech = trial % 2 == 0 ? UpdateMechanism::backoff() : UpdateMechanism::sweep();
      RunOptions opts;
      opts.max_iters = 100000;
      opts.initial_profile = random_profile(inst, rng);
      const auto traj = run_br_drm(inst, mech, EstimatorConfig::exact(), opts, rng);
      REQUIRE(traj.termination == Termination::kConverged);
      REQUIRE(is_nep_drm(traj.final_profile, inst).is_nep);
      if (inst.num_users() <= 6) {
        const auto neps = exhaustive_drm_nep_enumeration(inst);
        REQUIRE(std::find(neps.begin(), neps.end(), traj.final_profile) != neps.end());
      }
      for (std::size_t i = 1; i < traj.steps.size(); ++i) {
        if (traj.steps[i].profile == traj.steps[i - 1].profile) {
          REQUIRE(traj.steps[i].potential == traj.steps[i - 1].potential);
        } else {
          REQUIRE(traj.steps[i].potential - traj.steps[i - 1].potential > 1e-12);
        }
      }
    }
  }
  SUBCASE("probabilistic runs can exhaust the budget") {
    const Instance inst = cycle_instance();
    RunOptions opts;
    opts.max_iters = 1;
    opts.initial_profile = cycle_start();
    const auto traj = run_br_drm(inst, UpdateMechanism::probabilistic(0.01), EstimatorConfig::exact(), opts, rng);
    CHECK(traj.termination == Termination::kMaxIters);
    CHECK_FALSE(traj.converged_at);
    CHECK(traj.steps.size() == 2);
  }
  SUBCASE("population growth re-dimensions the profile") {
    RandomInstanceSpec spec;
    spec.num_users = 9;
    spec.num_channels = 3;
    const Instance full = make_random_instance(rng, spec);
    RunOptions opts;
    opts.max_iters = 300;
    opts.population_events.push_back({50, full.prefix(7)});
    opts.population_events.push_back({120, full});
    const auto traj = run_br_drm(full.prefix(5), UpdateMechanism::backoff(), EstimatorConfig::exact(), opts, rng);
    CHECK(traj.steps[49].profile.size() == 5);
    CHECK(traj.steps[50].profile.size() == 7);
    CHECK(traj.final_profile.size() == 9);
    CHECK(traj.termination == Termination::kConverged);
    CHECK(*traj.converged_at >= 120);
    CHECK(is_nep_drm(traj.final_profile, full).is_nep);
  }
  SUBCASE("inconsistent population events are rejected") {
    RunOptions opts;
    opts.population_events.push_back({3, Instance(InterferenceGraph(3), 2, 1, {1, 1, 1, 1, 1, 1}, {0.5, 0.5, 0.5})});
    const Instance small(build_regular_graph(2, 1), 2, 1, {1, 2, 2, 1}, {0.5, 0.5});
    opts.stop_on_convergence = false;
    CHECK_THROWS_AS(run_br_drm(small, UpdateMechanism::sweep(), EstimatorConfig::exact(), opts, rng), ArgumentError);
  }
}

TEST_CASE("windowed estimates reproduce exact decisions on well-separated scores") {
  // Every user has one clearly dominant channel, so sampling noise of a 100-slot
  // window cannot reorder the scores.
  Rng rng(3);
  const std::size_t n = 6;
  std::vector<double> u;
  for (UserId i = 0; i < n; ++i) {
    for (ChannelId k = 0; k < 3; ++k) u.push_back(k == i % 3 ? 10.0 : 1.0);
  }
  const Instance inst(build_regular_graph(n, 2), 3, 1, u, std::vector<double>(n, 0.3));
  for (int trial = 0; trial < 20; ++trial) {
    RunOptions opts;
    opts.max_iters = 200;
    opts.initial_profile = random_profile(inst, rng);
    Rng a(derive_seed(5, trial));
    Rng b(derive_seed(5, trial));
    auto exact = run_br_drm(inst, UpdateMechanism::sweep(), EstimatorConfig::exact(), opts, a);
    auto windowed = run_br_drm(inst, UpdateMechanism::sweep(), EstimatorConfig::windowed(100), opts, b);
    REQUIRE(exact.final_profile == windowed.final_profile);
    REQUIRE(windowed.termination == Termination::kConverged);
  }
}

TEST_CASE("better-response replay") {
  const Instance inst = cycle_instance();
  SUBCASE("the four-move cycle") {
    const auto moves = cycle_moves();
    const auto traj = run_better_response_replay(inst, cycle_start(), moves);
    REQUIRE(traj.steps.size() == 5);
    CHECK(traj.termination == Termination::kCycleDetected);
    CHECK(*traj.cycle_length == 4);
    CHECK(traj.final_profile == cycle_start());
    for (std::size_t i = 1; i < 5; ++i) {
      const UserId mover = moves[i - 1].user;
      CHECK(traj.steps[i - 1].rates[mover] == 1.0);
      CHECK(traj.steps[i].rates[mover] == 1.25);
    }
  }
  SUBCASE("empty sequence") {
    const auto traj = run_better_response_replay(inst, cycle_start(), {});
    CHECK(traj.steps.size() == 1);
    CHECK_FALSE(traj.cycle_length);
  }
  SUBCASE("a non-improving move names its step") {
    std::vector<ReplayMove> moves = cycle_moves();
    moves[2] = {0, {2, 3}};
    try {
      run_better_response_replay(inst, cycle_start(), moves);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("step 3") != std::string::npos);
    }
  }
  SUBCASE("strict best-response sequences never revisit a profile") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
      RandomInstanceSpec spec;
      spec.num_users = 2 + rng.index(6);
      spec.num_channels = 2 + rng.index(4);
      spec.channels_per_user = 1 + rng.index(spec.num_channels - 1);
      const Instance r = make_random_instance(rng, spec);
      StrategyProfile profile = random_profile(r, rng);
      const StrategyProfile start = profile;
      std::vector<ReplayMove> moves;
      for (int step = 0; step < 60; ++step) {
        const UserId n = rng.index(r.num_users());
        const ChannelSet best = best_response_drm(n, profile, r);
        StrategyProfile next = profile;
        next[n].channels = best;
        if (!is_strict_rate_improvement(total_expected_rate(n, profile, r), total_expected_rate(n, next, r))) continue;
        moves.push_back({n, best});
        profile = next;
      }
      const auto traj = run_better_response_replay(r, start, moves);
      REQUIRE_FALSE(traj.cycle_length);
    }
  }
}

TEST_CASE("NBRF runs") {
  Rng rng(6);
  SUBCASE("beta = 0 walks uniformly over the action grid") {
    const Instance inst(InterferenceGraph(2), 3, 1, {1.0, 2.0, 3.0, 1.5, 0.5, 2.5}, {0.5, 0.5});
    NbrfOptions opts;
    opts.run.max_iters = 300000;
    opts.run.record_steps = false;
    std::vector<double> counts(3, 0.0);
    opts.run.on_step = [&](std::uint64_t iter, const StrategyProfile& p) {
      if (iter > 0) counts[p[0].channels.front()] += 1.0;
    };
    run_nbrf(inst, UpdateMechanism::probabilistic(0.5), CoolingSchedule::fixed(0.0), opts, rng);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - total / 3.0) * (c - total / 3.0) / (total / 3.0);
    // consecutive steps are correlated (a user keeps its action with prob. 1/2),
    // which roughly doubles the variance of each count
    CHECK(chi2 / 2.0 < 13.816);  // chi-square 0.999 quantile, 2 degrees of freedom
  }
  SUBCASE("fixed beta under sweep matches the Gibbs law") {
    const Instance inst(build_regular_graph(2, 1), 2, 1, {1.0, 1.6, 1.3, 0.9}, {0.5, 0.5});
    const auto gibbs = gibbs_stationary(inst, 1.0);
    ProfilePmf target;
    for (std::size_t i = 0; i < gibbs.profiles.size(); ++i) {
      if (gibbs.probs[i] > 0.0) target[gibbs.profiles[i]] = gibbs.probs[i];
    }
    NbrfOptions opts;
    opts.run.max_iters = 400000;
    opts.run.record_steps = false;
    VisitCounter counter(1000);
    opts.run.on_step = [&](std::uint64_t iter, const StrategyProfile& p) { counter.observe(iter, p); };
    run_nbrf(inst, UpdateMechanism::sweep(), CoolingSchedule::fixed(1.0), opts, rng);
    CHECK(total_variation(counter.pmf(), target) <= 0.01);
  }
  SUBCASE("frozen phase stops at a fairness equilibrium") {
    RandomInstanceSpec spec;
    spec.num_users = 6;
    spec.num_channels = 2;
    const Instance inst = make_random_instance(rng, spec);
    NbrfOptions opts;
    opts.run.max_iters = 5000;
    opts.freeze_beta = 3.0;
    const auto traj = run_nbrf(inst, UpdateMechanism::backoff(), CoolingSchedule::logarithmic(1.0), opts, rng);
    CHECK(traj.termination == Termination::kConverged);
    CHECK(is_nep_fairness(traj.final_profile, inst).is_nep);
    CHECK(*traj.converged_at >= 21);  // log(t) >= 3 from t = 21 on
  }
  SUBCASE("exploration shrinks as beta grows") {
    const Instance inst = make_random_instance(rng, RandomInstanceSpec{});
    const StrategyProfile p = fairness_initial_profile(inst);
    const auto schedule = CoolingSchedule::logarithmic(0.5);
    for (UserId n = 0; n < inst.num_users(); ++n) {
      const auto best = best_response_fairness(n, p, inst);
      double previous = 1.0;
      for (std::uint64_t t = 1; t < 2000; t += 37) {
        const auto pmf = noisy_br_distribution(n, p, inst, schedule.beta(t));
        const auto it = std::find(pmf.actions.begin(), pmf.actions.end(), best);
        const double explore = 1.0 - pmf.probs[static_cast<std::size_t>(it - pmf.actions.begin())];
        CHECK(explore <= previous + 1e-15);
        previous = explore;
      }
    }
  }
  SUBCASE("population growth assigns newcomers their preferred channel") {
    RandomInstanceSpec spec;
    spec.num_users = 8;
    spec.num_channels = 3;
    const Instance full = make_random_instance(rng, spec);
    NbrfOptions opts;
    opts.run.max_iters = 100;
    opts.run.population_events.push_back({40, full});
    const auto traj = run_nbrf(full.prefix(6), UpdateMechanism::backoff(), CoolingSchedule::logarithmic(1.0), opts, rng);
    CHECK(traj.steps[39].profile.size() == 6);
    CHECK(traj.steps[40].profile.size() == 8);
    CHECK(traj.final_profile.size() == 8);
  }
  CHECK_THROWS_AS(run_nbrf(cycle_instance(), UpdateMechanism::sweep(), CoolingSchedule::fixed(1.0), NbrfOptions{}, rng),
                  ArgumentError);
}

TEST_CASE("slot simulation") {
  Rng rng(7);
  const Instance inst = cycle_instance();
  SUBCASE("silent users") {
    StrategyProfile p = cycle_start();
    p[0].attempt_prob = 0.0;
    p[1].attempt_prob = 0.0;
    const auto slot = simulate_slot(p, inst, rng);
    for (UserId n = 0; n < 2; ++n) {
      CHECK_FALSE(slot.transmitted[n]);
      for (ChannelId k = 0; k < 4; ++k) CHECK_FALSE(slot.observed_busy(n, k));
    }
  }
  SUBCASE("certain collisions") {
    const Instance pair(build_regular_graph(2, 1), 1, 1, {1.0, 1.0}, {1.0, 1.0});
    const StrategyProfile p{{Strategy{{0}, 1.0}, Strategy{{0}, 1.0}}};
    for (int i = 0; i < 100; ++i) {
      const auto slot = simulate_slot(p, pair, rng);
      CHECK(slot.collided(0, 0));
      CHECK(slot.collided(1, 0));
    }
  }
  SUBCASE("success semantics on random instances") {
    for (int trial = 0; trial < 200; ++trial) {
      RandomInstanceSpec spec;
      spec.channels_per_user = 2;
      const Instance r = make_random_instance(rng, spec);
      const StrategyProfile p = random_profile(r, rng);
      const auto slot = simulate_slot(p, r, rng);
      for (UserId n = 0; n < r.num_users(); ++n) {
        for (ChannelId k = 0; k < r.num_channels(); ++k) {
          bool neighbor = false;
          for (UserId x : r.graph().neighbors(n)) neighbor = neighbor || (slot.transmitted[x] && holds(p[x], k));
          const bool mine = slot.transmitted[n] && holds(p[n], k);
          REQUIRE(slot.observed_busy(n, k) == neighbor);
          REQUIRE(slot.succeeded(n, k) == (mine && !neighbor));
          REQUIRE(slot.collided(n, k) == (mine && neighbor));
        }
      }
    }
  }
  SUBCASE("empirical rates match the closed form") {
    RandomInstanceSpec spec;
    spec.channels_per_user = 2;
    const Instance r = make_random_instance(rng, spec);
    StrategyProfile p = random_profile(r, rng);
    for (auto& s : p.strategies) s.attempt_prob = rng.uniform(0.3, 0.7);
    const auto rates = empirical_rates(p, r, 400000, rng);
    for (UserId n = 0; n < r.num_users(); ++n) CHECK(std::abs(rates[n] / reference_rate(n, p, r) - 1.0) <= 0.02);
  }
}

TEST_CASE("success-probability estimation") {
  SlotOutcome idle;
  idle.num_users = 2;
  idle.num_channels = 2;
  idle.busy = {0, 0, 0, 0};
  SlotOutcome busy = idle;
  busy.busy = {1, 1, 1, 1};
  const std::vector<SlotOutcome> all_idle(10, idle);
  const std::vector<SlotOutcome> all_busy(10, busy);
  CHECK(estimate_success_probability(0, 1, all_idle) == 1.0);
  CHECK(estimate_success_probability(1, 0, all_busy) == 0.0);
  CHECK_THROWS_AS(estimate_success_probability(0, 0, std::span<const SlotOutcome>{}), EstimationError);

  SUBCASE("window statistics under stationary neighbors") {
    Rng rng(8);
    InterferenceGraph g(3);
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    const Instance inst(g, 1, 1, {1.0, 1.0, 1.0}, {0.5, 0.3, 0.4});
    const StrategyProfile p{{Strategy{{0}, 0.5}, Strategy{{0}, 0.3}, Strategy{{0}, 0.4}}};
    const double v = 0.7 * 0.6;
    const std::size_t w = 100;
    const int reps = 10000;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<SlotOutcome> window(w);
    for (int i = 0; i < reps; ++i) {
      for (auto& slot : window) simulate_slot(p, inst, rng, slot);
      const double est = estimate_success_probability(0, 0, window);
      sum += est;
      sum_sq += est * est;
    }
    const double mean = sum / reps;
    const double var = sum_sq / reps - mean * mean;
    const double se = std::sqrt(v * (1.0 - v) / w);
    CHECK(std::abs(mean - v) <= 4.0 * se / std::sqrt(reps));
    CHECK(std::sqrt(var) <= se * 1.05);
  }
  SUBCASE("rolling window and flush") {
    WindowedEstimator est(2, 2, 3);
    CHECK_THROWS_AS(est.estimate(0, 0), EstimationError);
    est.observe(busy);
    est.observe(idle);
    est.observe(idle);
    CHECK(est.estimate(0, 0) == doctest::Approx(2.0 / 3.0));
    est.observe(idle);
    CHECK(est.estimate(0, 0) == 1.0);
    CHECK(est.samples(0) == 3);
    est.flush(1);
    CHECK(est.samples(1) == 0);
    CHECK(est.samples(0) == 3);
    est.resize(3);
    CHECK(est.samples(2) == 0);
  }
}

TEST_CASE("naive policy") {
  Rng rng(9);
  const Instance ring = equal_utility_instance(build_regular_graph(8, 3), 2, 1, 1.0, 0.5);
  const auto rates = simulate_naive_policy(ring, 400000, rng);
  for (UserId n = 0; n < 8; ++n) CHECK(std::abs(rates[n] / naive_expected_rate(n, ring, 3) - 1.0) <= 0.02);
  RunOptions opts;
  opts.max_iters = 5;
  const auto traj = run_naive(ring, true, opts, rng);
  CHECK(traj.steps.size() == 6);
  for (UserId n = 0; n < 8; ++n) {
    const auto count = count_neighbors_on_channel(n, traj.final_profile[n].channels.front(), traj.final_profile, ring.graph());
    CHECK(traj.final_profile[n].attempt_prob == optimal_attempt_probability(count));
  }
}
