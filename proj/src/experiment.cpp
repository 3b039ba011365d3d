#include "distid/experiment.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "distid/central_rls.hpp"
#include "distid/csv.hpp"
#include "distid/distributed.hpp"
#include "distid/errors.hpp"
#include "distid/random.hpp"

namespace distid {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::central: return "central";
    case RunMode::distributed: return "distributed";
    case RunMode::both: return "both";
  }
  return "both";
}

RunMode run_mode_from_string(const std::string& text) {
  if (text == "central") return RunMode::central;
  if (text == "distributed") return RunMode::distributed;
  if (text == "both") return RunMode::both;
  throw ParameterError("mode must be central, distributed or both, got '" + text + "'");
}

void ExperimentConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError(std::string(name) + " must be positive");
    }
  };
  if (m == 0) {
    throw ParameterError("m must be at least 1");
  }
  if (order_min < 1 || order_max > 64 || order_min > order_max) {
    throw ParameterError("order_range must satisfy 1 <= lo <= hi <= 64");
  }
  if (!(param_std >= 0.0) || !std::isfinite(param_std)) {
    throw ParameterError("param_std must be non-negative");
  }
  if (!(input_std >= 0.0) || !std::isfinite(input_std)) {
    throw ParameterError("input_std must be non-negative");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ParameterError("noise_std must be non-negative");
  }
  positive(gamma, "gamma");
  positive(init_c, "init_c");
}

std::string config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["m"] = c.m;
  j["order_range"] = {c.order_min, c.order_max};
  j["param_std"] = c.param_std;
  j["input_std"] = c.input_std;
  j["noise_std"] = c.noise_std;
  j["gamma"] = c.gamma;
  j["init_c"] = c.init_c;
  j["samples"] = c.samples;
  j["mode"] = to_string(c.mode);
  j["monte_carlo_runs"] = c.monte_carlo_runs;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ParameterError("config must be a JSON object");
  }
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "m") c.m = value.get<std::size_t>();
      else if (key == "order_range") {
        const auto range = value.get<std::vector<std::size_t>>();
        if (range.size() != 2) {
          throw ParameterError("order_range must be [lo, hi]");
        }
        c.order_min = range[0];
        c.order_max = range[1];
      } else if (key == "param_std") c.param_std = value.get<double>();
      else if (key == "input_std") c.input_std = value.get<double>();
      else if (key == "noise_std") c.noise_std = value.get<double>();
      else if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "init_c") c.init_c = value.get<double>();
      else if (key == "samples") c.samples = value.get<std::size_t>();
      else if (key == "mode") c.mode = run_mode_from_string(value.get<std::string>());
      else if (key == "monte_carlo_runs") c.monte_carlo_runs = value.get<std::size_t>();
      else throw ParameterError("unknown config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::uint64_t stream_seed(std::uint64_t root, SeedStream stream) {
  return derive_seed(root, static_cast<std::uint64_t>(stream));
}

MisoSystem random_system(const ExperimentConfig& config) {
  config.validate();
  Rng rng(stream_seed(config.seed, SeedStream::system));
  std::vector<std::size_t> orders(config.m);
  for (auto& order : orders) {
    order = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(config.order_min),
                                                     static_cast<std::int64_t>(config.order_max)));
  }
  std::vector<FirModule> modules;
  modules.reserve(config.m);
  for (auto order : orders) {
    std::vector<double> coeffs(order);
    for (auto& b : coeffs) {
      b = config.param_std * rng.normal();
    }
    modules.emplace_back(std::move(coeffs));
  }
  return MisoSystem(std::move(modules), config.noise_std);
}

Eigen::MatrixXd generate_inputs(std::size_t samples, std::size_t m, double input_std,
                                std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(m));
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
    for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
      inputs(t, i) = input_std * rng.normal();
    }
  }
  return inputs;
}

Eigen::VectorXd generate_noise(std::size_t samples, double noise_std, std::uint64_t seed) {
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(samples));
  if (noise_std == 0.0) {
    return noise;
  }
  Rng rng(seed);
  for (Eigen::Index t = 0; t < noise.size(); ++t) {
    noise[t] = noise_std * rng.normal();
  }
  return noise;
}

Signals generate_signals(const MisoSystem& system, const ExperimentConfig& config) {
  return Signals{
      generate_inputs(config.samples, system.module_count(), config.input_std,
                      stream_seed(config.seed, SeedStream::inputs)),
      generate_noise(config.samples, config.noise_std, stream_seed(config.seed, SeedStream::noise)),
  };
}

namespace {

void check_signals(const MisoSystem& system, const Signals& signals) {
  if (signals.inputs.cols() != static_cast<Eigen::Index>(system.module_count())) {
    throw DimensionError("input matrix has " + std::to_string(signals.inputs.cols()) +
                         " channels for " + std::to_string(system.module_count()) + " modules");
  }
  if (signals.noise.size() != signals.inputs.rows()) {
    throw DimensionError("noise and input sample counts differ");
  }
}

// Advances the bank by sample t and returns the measured output.
double advance(const MisoSystem& system, const Signals& signals, RegressorBank& bank,
               Eigen::Index t) {
  const Eigen::VectorXd u = signals.inputs.row(t).transpose();
  bank.push(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
  return noisy_output(system, bank, signals.noise[t]);
}

TrajectoryStep make_step(std::size_t k, const Eigen::VectorXd& estimate,
                         const Eigen::VectorXd& theta0) {
  TrajectoryStep step;
  step.k = k;
  step.err = estimate - theta0;
  step.err_norm_sq = step.err.squaredNorm();
  return step;
}

}  // namespace

Trajectory run_central(const MisoSystem& system, const Signals& signals,
                       const ExperimentConfig& config, RunOptions options, MonitorReport* report) {
  check_signals(system, signals);
  const Eigen::VectorXd theta0 = system.stacked_coeffs();
  const double sigma = config.noise_std;
  RegressorBank bank(system);
  CentralState state = from_scratch_init(system.parameter_count(), config.init_c, sigma * sigma);

  Trajectory traj;
  traj.kind = MonitorMode::central;
  traj.parameter_count = system.parameter_count();
  traj.monitored = options.monitor;
  traj.initial_err = state.theta_hat - theta0;
  traj.steps.reserve(static_cast<std::size_t>(signals.inputs.rows()));
  LyapunovMonitor monitor(MonitorMode::central);

  for (Eigen::Index t = 0; t < signals.inputs.rows(); ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      const double y = advance(system, signals, bank, t);
      const Eigen::VectorXd phi = bank.stacked();
      RlsStep rls;
      CentralState next = rls_update_gamma(state, phi, y, config.gamma, &rls);
      TrajectoryStep step = make_step(k, next.theta_hat, theta0);
      step.eps = rls.error;
      step.alpha = rls.alpha;
      if (options.monitor) {
        CentralStep cs{k,           state.theta_hat - theta0, step.err,
                       state.sigma_mat, state.info_mat,       next.info_mat,
                       phi,         sigma,                    config.gamma};
        step.lyap = monitor.observe(cs);
      }
      traj.steps.push_back(std::move(step));
      state = std::move(next);
    } catch (const NumericError& e) {
      throw NumericError(std::string("central run: ") + e.what(), k);
    }
  }
  traj.final_estimate = state.theta_hat;
  if (report != nullptr && options.monitor) {
    *report = monitor.take_report();
  }
  return traj;
}

Trajectory run_distributed(const MisoSystem& system, const Signals& signals,
                           const ExperimentConfig& config, RunOptions options,
                           MonitorReport* report) {
  check_signals(system, signals);
  const Eigen::VectorXd theta0 = system.stacked_coeffs();
  const auto orders = system.orders();
  const double sigma = config.noise_std;
  RegressorBank bank(system);
  DistributedEstimator est(orders, config.init_c, config.gamma, sigma * sigma);
  const std::vector<double> gammas(orders.size(), config.gamma);

  Trajectory traj;
  traj.kind = MonitorMode::distributed;
  traj.parameter_count = system.parameter_count();
  traj.monitored = options.monitor;
  traj.initial_err = est.theta_hat() - theta0;
  traj.steps.reserve(static_cast<std::size_t>(signals.inputs.rows()));
  LyapunovMonitor monitor(MonitorMode::distributed);

  for (Eigen::Index t = 0; t < signals.inputs.rows(); ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      const double y = advance(system, signals, bank, t);
      std::optional<BlockState> before;
      if (options.monitor) {
        before = est.block();
      }
      const RoundTrace trace = est.run_round(bank, y);
      TrajectoryStep step = make_step(k, trace.theta_hat, theta0);
      step.eps = trace.down.prediction_error;
      step.alpha = trace.down.alpha;
      if (options.monitor) {
        const BlockState after = est.block();
        DistributedStep ds{k,
                           before->theta_hat - theta0,
                           step.err,
                           before->sigma,
                           before->info,
                           after.info,
                           bank.stacked(),
                           trace.down.alpha,
                           gammas,
                           orders};
        step.lyap = monitor.observe(ds);
      }
      traj.steps.push_back(std::move(step));
    } catch (const NumericError& e) {
      throw NumericError(std::string("distributed run: ") + e.what(), k);
    }
  }
  traj.final_estimate = est.theta_hat();
  if (report != nullptr && options.monitor) {
    *report = monitor.take_report();
  }
  return traj;
}

ExperimentResult run_experiment(const MisoSystem& system, const Signals& signals,
                                const ExperimentConfig& config, RunOptions options) {
  config.validate();
  ExperimentResult result{system, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (config.mode != RunMode::distributed) {
    MonitorReport report;
    result.central = run_central(system, signals, config, options, &report);
    if (options.monitor) {
      result.central_report = std::move(report);
    }
  }
  if (config.mode != RunMode::central) {
    MonitorReport report;
    result.distributed = run_distributed(system, signals, config, options, &report);
    if (options.monitor) {
      result.distributed_report = std::move(report);
    }
  }
  return result;
}

ExperimentResult run_experiment(const MisoSystem& system, const ExperimentConfig& config,
                                RunOptions options) {
  return run_experiment(system, generate_signals(system, config), config, options);
}

ExperimentResult run_experiment(const ExperimentConfig& config, RunOptions options) {
  return run_experiment(random_system(config), config, options);
}

MonteCarloSummary monte_carlo_bias(const MisoSystem& system, const ExperimentConfig& config) {
  config.validate();
  if (config.monte_carlo_runs < 2) {
    throw ParameterError("Monte Carlo study needs at least 2 runs");
  }
  const std::size_t runs = config.monte_carlo_runs;
  const Eigen::MatrixXd inputs = generate_inputs(config.samples, system.module_count(),
                                                 config.input_std,
                                                 stream_seed(config.seed, SeedStream::inputs));
  const std::uint64_t noise_root = stream_seed(config.seed, SeedStream::noise);

  MonteCarloSummary summary;
  summary.runs = runs;
  summary.finals.resize(runs);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Signals signals{inputs,
                      generate_noise(config.samples, config.noise_std, derive_seed(noise_root, r))};
      summary.finals[r] = run_distributed(system, signals, config).final_estimate;
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), runs));
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (runs + workers - 1) / workers;
  for (std::size_t begin = 0; begin < runs; begin += chunk) {
    jobs.push_back(std::async(std::launch::async, run_range, begin, std::min(runs, begin + chunk)));
  }
  for (auto& job : jobs) {
    job.get();
  }

  // Aggregation in run order.
  const auto n = static_cast<Eigen::Index>(system.parameter_count());
  summary.mean = Eigen::VectorXd::Zero(n);
  for (const auto& f : summary.finals) {
    summary.mean += f;
  }
  summary.mean /= static_cast<double>(runs);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
  for (const auto& f : summary.finals) {
    var += (f - summary.mean).cwiseAbs2();
  }
  summary.stddev = (var / static_cast<double>(runs - 1)).cwiseSqrt();
  return summary;
}

std::vector<std::string> trajectory_columns(const Trajectory& trajectory) {
  std::vector<std::string> cols{"k", "err_norm_sq"};
  for (std::size_t j = 1; j <= trajectory.parameter_count; ++j) {
    cols.push_back("err_" + std::to_string(j));
  }
  if (trajectory.kind == MonitorMode::distributed) {
    cols.emplace_back("eps");
    cols.emplace_back("alpha");
  }
  if (trajectory.monitored) {
    auto mon = monitor_columns(trajectory.kind);
    cols.insert(cols.end(), mon.begin() + 1, mon.end());
  }
  return cols;
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  const auto cols = trajectory_columns(trajectory);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << '\n';
  for (const auto& step : trajectory.steps) {
    out << step.k << ',' << format_real(step.err_norm_sq);
    for (Eigen::Index j = 0; j < step.err.size(); ++j) {
      out << ',' << format_real(step.err[j]);
    }
    if (trajectory.kind == MonitorMode::distributed) {
      out << ',' << format_real(step.eps) << ',' << format_real(step.alpha);
    }
    if (trajectory.monitored) {
      if (!step.lyap) {
        throw ParameterError("monitored trajectory is missing a Lyapunov record");
      }
      append_monitor_fields(out, *step.lyap, trajectory.kind);
    }
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(path.string(), "cannot open for writing");
  }
  write_trajectory_csv(trajectory, out);
  out.flush();
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

std::optional<std::size_t> first_crossing(const std::vector<double>& values, double frac) {
  if (values.empty()) {
    return std::nullopt;
  }
  const double threshold = frac * values.front();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] <= threshold) {
      return k;
    }
  }
  return std::nullopt;
}

}  // namespace distid
