#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spectrum/harness.hpp"

namespace fs = std::filesystem;
using namespace spectrum;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct ConfigArgs {
  std::string config;
  std::string preset;
  std::string preset_dir = SPECTRUM_PRESET_DIR;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> max_iters;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_config_options(CLI::App* app, ConfigArgs& args) {
  auto* config = app->add_option("--config", args.config, "experiment config (JSON)");
  auto* preset = app->add_option("--preset", args.preset, "preset name, e.g. fig2-small-drm");
  config->excludes(preset);
  app->add_option("--preset-dir", args.preset_dir, "directory holding preset JSON files");
  app->add_option("--seed", args.seed, "root seed");
  app->add_option("--trials", args.trials, "number of trials");
  app->add_option("--max-iters", args.max_iters, "updating times per trial");
  app->add_option("--threads", args.threads, "worker threads (0: all cores)");
  app->add_option("--out", args.out, "output directory");
}

ExperimentConfig resolve_config(const ConfigArgs& args) {
  ExperimentConfig config;
  if (!args.config.empty()) {
    config = load_config(args.config);
  } else if (!args.preset.empty()) {
    config = load_config(fs::path(args.preset_dir) / (args.preset + ".json"));
  } else {
    throw ConfigError("--config: give a config file or --preset");
  }
  if (args.seed) config.seed = *args.seed;
  if (args.trials) config.trials = *args.trials;
  if (args.max_iters) config.max_iters = *args.max_iters;
  if (args.threads) config.threads = *args.threads;
  if (!args.out.empty()) config.out_dir = args.out;
  validate_config(config);
  return config;
}

int report(const char* what, const std::exception& e, int code) {
  std::cerr << "error (" << what << "): " << e.what() << "\n";
  return code;
}

template <typename Fn>
int guarded(Fn fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    return report("validation", e, kExitValidation);
  } catch (const CapacityError& e) {
    return report("capacity", e, kExitValidation);
  } catch (const ArgumentError& e) {
    return report("validation", e, kExitValidation);
  } catch (const std::exception& e) {
    return report("runtime", e, kExitRuntime);
  }
}

int cmd_run(const ConfigArgs& args) {
  const ExperimentConfig config = resolve_config(args);
  const ExperimentResult result = run_experiment(config, config.out_dir);
  std::size_t at_nep = 0;
  for (const auto& t : result.trials) at_nep += t.final_at_nep ? 1 : 0;
  std::printf("%s: %zu trials, %zu end at an equilibrium, final mean rate %s, final mean sum-log rate %s\n",
              config.name.c_str(), result.trials.size(), at_nep,
              format_double(result.aggregate.back().mean_rate).c_str(),
              format_double(result.aggregate.back().mean_sum_log_rate).c_str());
  if (result.oracle) std::printf("oracle sum-log optimum %s\n", format_double(result.oracle->optimum_value).c_str());
  std::printf("wrote %s\n", config.out_dir.c_str());
  return 0;
}

int cmd_oracle(const ConfigArgs& args) {
  const ExperimentConfig config = resolve_config(args);
  const OracleResult result = run_oracle(config, config.out_dir);
  std::printf("optimum %s over %llu allocations (%zu optimizers)\nwrote %s\n",
              format_double(result.optimum_value).c_str(), static_cast<unsigned long long>(result.search_size),
              result.optimizers.size(), (fs::path(config.out_dir) / "oracle.json").c_str());
  return 0;
}

int cmd_cycle_demo(const ConfigArgs& args) {
  ExperimentConfig config = cycle_demo_config();
  if (!args.config.empty() || !args.preset.empty()) config = resolve_config(args);
  if (!args.out.empty()) config.out_dir = args.out;
  run_experiment(config, config.out_dir);
  std::FILE* f = std::fopen((fs::path(config.out_dir) / "cycle_transcript.txt").c_str(), "rb");
  if (f) {
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) std::fwrite(buf, 1, n, stdout);
    std::fclose(f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel ALOHA channel allocation: learning dynamics, oracles and experiments"};
  app.require_subcommand(1);

  ConfigArgs run_args;
  auto* run = app.add_subcommand("run", "run an experiment config or preset");
  add_config_options(run, run_args);

  ConfigArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "exhaustive sum-log optimum of a config's instance");
  add_config_options(oracle, oracle_args);

  ConfigArgs cycle_args;
  auto* cycle = app.add_subcommand("cycle-demo", "replay the period-4 better-response cycle");
  add_config_options(cycle, cycle_args);
  cycle_args.out = "out/cycle-demo";

  EfficiencySweepOptions sweep;
  std::string sweep_out = "out/efficiency";
  auto* efficiency = app.add_subcommand("efficiency", "BR-DRM versus the naive policy on regular graphs");
  efficiency->add_option("--channels", sweep.channel_counts, "channel counts K")->delimiter(',');
  efficiency->add_option("--degrees", sweep.degrees, "graph degrees")->delimiter(',');
  efficiency->add_option("--users", sweep.num_users, "users per instance");
  efficiency->add_option("--trials", sweep.trials, "random initial profiles per pair");
  efficiency->add_option("--max-iters", sweep.max_iters, "updating times per trial");
  efficiency->add_option("--seed", sweep.seed, "root seed");
  efficiency->add_option("--out", sweep_out, "output directory");

  GibbsCheckOptions gibbs;
  std::string gibbs_out = "out/gibbs-check";
  std::optional<double> max_tv;
  auto* gibbs_cmd = app.add_subcommand("gibbs-check", "NBRF visit frequencies against the Gibbs law");
  gibbs_cmd->add_option("--beta", gibbs.beta, "fixed exploration parameter");
  gibbs_cmd->add_option("--q", gibbs.update_prob, "per-user update probability");
  gibbs_cmd->add_option("--steps", gibbs.steps, "counted updating times");
  gibbs_cmd->add_option("--burn-in", gibbs.burn_in, "discarded updating times");
  gibbs_cmd->add_option("--seed", gibbs.seed, "seed");
  gibbs_cmd->add_option("--max-tv", max_tv, "fail (exit 1) above this total-variation distance");
  gibbs_cmd->add_option("--out", gibbs_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (run->parsed()) return guarded([&] { return cmd_run(run_args); });
  if (oracle->parsed()) return guarded([&] { return cmd_oracle(oracle_args); });
  if (cycle->parsed()) return guarded([&] { return cmd_cycle_demo(cycle_args); });
  if (efficiency->parsed()) {
    return guarded([&] {
      const auto rows = run_efficiency_sweep(sweep);
      write_efficiency_csv(rows, sweep_out);
      for (const auto& r : rows) {
        std::printf("K=%zu degree=%zu eta=%s min_ratio=%s mean_ratio=%s %s\n", r.num_channels, r.degree,
                    r.eta ? format_double(*r.eta).c_str() : "-", r.min_ratio ? format_double(*r.min_ratio).c_str() : "-",
                    r.mean_ratio ? format_double(*r.mean_ratio).c_str() : "-", r.note.c_str());
      }
      return 0;
    });
  }
  if (gibbs_cmd->parsed()) {
    return guarded([&] {
      const GibbsCheckResult result = run_gibbs_check(gibbs);
      write_gibbs_json(gibbs, result, gibbs_out);
      std::printf("total variation %s over %llu steps\n", format_double(result.total_variation).c_str(),
                  static_cast<unsigned long long>(gibbs.steps));
      return max_tv && result.total_variation > *max_tv ? kExitRuntime : 0;
    });
  }
  return kExitRuntime;
}
