#pragma once

// Experiment configuration, the multi-trial runner and its CSV/JSON outputs,
// plus the oracle, efficiency-sweep, cycle-demo and Gibbs-check drivers used
// by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectrum/dynamics.hpp"
#include "spectrum/errors.hpp"
#include "spectrum/fairness_game.hpp"
#include "spectrum/network_model.hpp"
#include "spectrum/oracle.hpp"

namespace spectrum {

inline constexpr const char* kCodeVersion = "spectrum 0.1.0";

/// Invalid configuration. The message starts with the offending field path,
/// e.g. "instance.num_users: must be positive".
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct InstanceConfig {
  enum class Source { kExplicit, kGeometric, kRegular };

  Source source = Source::kGeometric;
  std::size_t num_users = 0;
  std::size_t num_channels = 0;
  std::size_t channels_per_user = 1;
  // geometric
  double region_radius = 10.0;
  double interference_radius = 5.0;
  bool connected = false;  // redraw positions until the graph is connected
  // regular
  std::size_t degree = 0;
  // generated utilities: a constant, or U(low, high) per (user, channel)
  std::optional<double> utility;
  double utility_low = 0.5;
  double utility_high = 2.0;
  // generated caps: cycled by user index, or U(low, high) per user
  std::vector<double> cap_pattern;
  double cap_low = 0.1;
  double cap_high = 0.9;
  std::optional<std::uint64_t> seed;  // defaults to the root seed
  bool resample_per_trial = false;
  // explicit
  std::vector<std::pair<UserId, UserId>> edges;
  std::vector<std::vector<double>> utilities;
  std::vector<double> caps;
  std::optional<std::vector<std::vector<bool>>> mask;
};

struct ScheduleConfig {
  CoolingSchedule::Kind kind = CoolingSchedule::Kind::kLogarithmic;
  double beta = 1.0;   // fixed
  double delta = 1.0;  // logarithmic, piecewise-constant
  std::optional<double> freeze_beta;

  CoolingSchedule schedule() const;
};

struct PopulationStep {
  std::uint64_t at_iter = 0;
  std::size_t num_users = 0;  // population size from at_iter on
};

struct ExperimentConfig {
  enum class Algorithm { kBrDrm, kNbrf, kNaive, kReplay };
  enum class Initial { kDefault, kRandom };

  std::string name = "experiment";
  Algorithm algorithm = Algorithm::kBrDrm;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::uint64_t max_iters = 100;
  std::size_t threads = 0;  // 0: hardware concurrency
  InstanceConfig instance;
  UpdateMechanism mechanism = UpdateMechanism::backoff();
  EstimatorConfig estimator;
  ScheduleConfig schedule;
  bool naive_fair_probabilities = false;
  Initial initial = Initial::kDefault;
  std::vector<PopulationStep> population;
  // better-response replay
  StrategyProfile replay_initial;
  std::vector<ReplayMove> replay_moves;
  std::optional<std::size_t> expect_cycle_length;
  // outputs
  std::string out_dir = "out";
  bool write_trajectory = true;
  bool write_oracle = true;
};

const char* to_string(ExperimentConfig::Algorithm algorithm);

/// Parses and validates a config document; throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Semantic checks shared by parsing and command-line overrides.
void validate_config(const ExperimentConfig& config);
/// Normalized JSON form; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config);

/// Built-in configuration of the period-4 better-response cycle.
ExperimentConfig cycle_demo_config();

/// Instance at its largest population; earlier stages are prefixes of it.
Instance build_full_instance(const InstanceConfig& config, std::size_t num_users, std::uint64_t seed);

struct TrialSummary {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  std::optional<std::uint64_t> converged_at;
  Termination termination = Termination::kMaxIters;
  std::optional<std::size_t> cycle_length;
  double final_mean_rate = 0.0;
  double final_sum_log_rate = 0.0;
  bool final_at_nep = false;
};

struct AggregateRow {
  std::uint64_t iter = 0;
  double mean_rate = 0.0;
  double mean_sum_log_rate = 0.0;
  double frac_at_nep = 0.0;
};

struct ExperimentResult {
  std::vector<TrialSummary> trials;
  std::vector<AggregateRow> aggregate;
  std::optional<OracleResult> oracle;  // sum-log optimum of the first stage
  std::vector<std::string> files;      // written, relative to the output dir
};

/// Runs every trial (in parallel, reduced in trial order) and writes
/// trajectory.csv, aggregate.csv, summary.csv, manifest.json and, when
/// feasible, oracle.json into `out_dir`. Throws std::runtime_error on I/O
/// failure.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Writes oracle.json for the config's instance. Throws CapacityError past
/// kOracleCapacity allocations.
OracleResult run_oracle(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct EfficiencySweepOptions {
  std::vector<std::size_t> channel_counts{2, 3};
  std::vector<std::size_t> degrees{1, 2, 3, 5};
  std::size_t num_users = 8;
  std::size_t trials = 20;
  std::uint64_t max_iters = 1000;
  std::uint64_t seed = 0;
};

struct EfficiencyRow {
  std::size_t num_channels = 0;
  std::size_t degree = 0;
  std::optional<double> eta;
  std::optional<double> min_ratio;
  std::optional<double> mean_ratio;
  std::string note;
};

/// For each (K, degree): BR-DRM from random profiles on a circulant graph with
/// u = 1 and P = K/(degree+1); ratio of each user's equilibrium rate to the
/// naive closed form. Inadmissible pairs yield a note row.
std::vector<EfficiencyRow> run_efficiency_sweep(const EfficiencySweepOptions& options);
void write_efficiency_csv(const std::vector<EfficiencyRow>& rows, const std::filesystem::path& out_dir);

struct GibbsCheckOptions {
  double beta = 1.0;
  double update_prob = 0.1;
  std::uint64_t steps = 1'000'000;
  std::uint64_t burn_in = 10'000;
  std::uint64_t seed = 0;
};

struct GibbsCheckResult {
  double total_variation = 0.0;
  ProfilePmf empirical;
  ProfilePmf stationary;
};

/// Two adjacent users, two channels: NBRF at fixed beta under the
/// probabilistic mechanism against the enumerated Gibbs law.
Instance gibbs_check_instance();
GibbsCheckResult run_gibbs_check(const GibbsCheckOptions& options);
void write_gibbs_json(const GibbsCheckOptions& options, const GibbsCheckResult& result,
                      const std::filesystem::path& out_dir);

/// %.17g, with "inf", "-inf" and "nan" spelled out.
std::string format_double(double value);
/// Channels joined by ';'.
std::string format_channels(const ChannelSet& channels);

}  // namespace spectrum
