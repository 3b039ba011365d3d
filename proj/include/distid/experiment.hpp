#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "distid/fir.hpp"
#include "distid/lyapunov.hpp"

namespace distid {

enum class RunMode { central, distributed, both };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& text);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t m = 20;
  std::size_t order_min = 1;  // inclusive
  std::size_t order_max = 10;  // inclusive
  double param_std = 1.0;
  double input_std = 1.0;
  double noise_std = 0.1;
  double gamma = 100.0;
  double init_c = 100.0;
  std::size_t samples = 3500;
  RunMode mode = RunMode::both;
  std::size_t monte_carlo_runs = 0;

  // Throws ParameterError on the first invalid field.
  void validate() const;
};

// {"seed", "m", "order_range": [lo, hi], "param_std", "input_std", "noise_std",
//  "gamma", "init_c", "samples", "mode", "monte_carlo_runs"}; missing fields
// keep their defaults, unknown fields are rejected.
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig read_config_file(const std::filesystem::path& path);

// Stream identifiers under the root seed.
enum class SeedStream : std::uint64_t { system = 1, inputs = 2, noise = 3 };
std::uint64_t stream_seed(std::uint64_t root, SeedStream stream);

MisoSystem random_system(const ExperimentConfig& config);

struct Signals {
  Eigen::MatrixXd inputs;  // samples x m
  Eigen::VectorXd noise;   // samples
};

Signals generate_signals(const MisoSystem& system, const ExperimentConfig& config);
Eigen::MatrixXd generate_inputs(std::size_t samples, std::size_t m, double input_std,
                                std::uint64_t seed);
Eigen::VectorXd generate_noise(std::size_t samples, double noise_std, std::uint64_t seed);

struct TrajectoryStep {
  std::size_t k = 0;
  double err_norm_sq = 0.0;    // ||theta_hat(k+1) - theta0||^2
  Eigen::VectorXd err;         // theta_hat(k+1) - theta0
  double eps = 0.0;            // prediction error of step k
  double alpha = 0.0;          // gain of step k
  std::optional<LyapRecord> lyap;
};

// Row k holds the estimate after consuming sample k; the monitor fields of
// row k describe the transition into that estimate.
struct Trajectory {
  MonitorMode kind = MonitorMode::central;
  std::size_t parameter_count = 0;
  bool monitored = false;
  std::vector<TrajectoryStep> steps;
  Eigen::VectorXd initial_err;
  Eigen::VectorXd final_estimate;
};

struct ExperimentResult {
  MisoSystem system;
  std::optional<Trajectory> central;
  std::optional<Trajectory> distributed;
  std::optional<MonitorReport> central_report;
  std::optional<MonitorReport> distributed_report;
};

struct RunOptions {
  bool monitor = false;
};

// Runs the estimators selected by config.mode on one shared signal
// realization. Initial state: theta_hat = 0, Sigma = init_c * I.
ExperimentResult run_experiment(const ExperimentConfig& config, RunOptions options = {});
ExperimentResult run_experiment(const MisoSystem& system, const ExperimentConfig& config,
                                RunOptions options = {});
ExperimentResult run_experiment(const MisoSystem& system, const Signals& signals,
                                const ExperimentConfig& config, RunOptions options = {});

Trajectory run_central(const MisoSystem& system, const Signals& signals,
                       const ExperimentConfig& config, RunOptions options = {},
                       MonitorReport* report = nullptr);
Trajectory run_distributed(const MisoSystem& system, const Signals& signals,
                           const ExperimentConfig& config, RunOptions options = {},
                           MonitorReport* report = nullptr);

struct MonteCarloSummary {
  std::size_t runs = 0;
  Eigen::VectorXd mean;    // per coordinate, of theta_hat_B(N)
  Eigen::VectorXd stddev;  // sample standard deviation
  std::vector<Eigen::VectorXd> finals;
};

// Distributed estimator over config.monte_carlo_runs noise realizations with
// the inputs held fixed. Run r draws its noise from derive_seed(noise seed, r).
MonteCarloSummary monte_carlo_bias(const MisoSystem& system, const ExperimentConfig& config);

std::vector<std::string> trajectory_columns(const Trajectory& trajectory);
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

// First index whose value is <= frac * values[0].
std::optional<std::size_t> first_crossing(const std::vector<double>& values, double frac);

}  // namespace distid
