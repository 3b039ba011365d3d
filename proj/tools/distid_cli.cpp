#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "distid/csv.hpp"
#include "distid/errors.hpp"
#include "distid/experiment.hpp"
#include "distid/fir.hpp"
#include "distid/lyapunov.hpp"

using namespace distid;

namespace {

enum Exit { ok = 0, usage = 1, runtime = 2, io = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string system;
  std::string mode = "both";
  std::size_t samples = 3500;
  std::optional<double> sigma;
  double gamma = 100.0;
  double init_c = 100.0;
  std::uint64_t seed = 1;
  bool monitor = false;
  std::string out_prefix;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_monitor_flag) {
  cmd->add_option("--system", f.system, "system file")->required();
  cmd->add_option("--mode", f.mode, "central, distributed or both")
      ->check(CLI::IsMember({"central", "distributed", "both"}));
  cmd->add_option("--samples", f.samples, "number of samples N");
  cmd->add_option("--sigma", f.sigma, "output noise std (default: from system file)");
  cmd->add_option("--gamma", f.gamma, "node weight gamma");
  cmd->add_option("--init-c", f.init_c, "initial gain Sigma(0) = c I");
  cmd->add_option("--seed", f.seed, "signal seed");
  if (with_monitor_flag) cmd->add_flag("--monitor", f.monitor, "append Lyapunov columns");
  cmd->add_option("--out-prefix", f.out_prefix, "output prefix")->required();
}

ExperimentConfig config_for(const MisoSystem& system, const RunFlags& f) {
  ExperimentConfig c;
  c.seed = f.seed;
  c.m = system.module_count();
  c.order_min = 1;
  c.order_max = 64;
  c.noise_std = f.sigma ? *f.sigma : system.noise_std();
  c.gamma = f.gamma;
  c.init_c = f.init_c;
  c.samples = f.samples;
  c.mode = run_mode_from_string(f.mode);
  return c;
}

std::string orders_text(const MisoSystem& system) {
  std::string s;
  for (auto o : system.orders()) s += (s.empty() ? "" : ",") + std::to_string(o);
  return s;
}

std::string crossing_text(std::optional<std::size_t> k) {
  return k ? std::to_string(*k) : "none";
}

int cmd_gen_system(std::uint64_t seed, std::size_t modules, std::size_t lo, std::size_t hi,
                   double param_std, const std::string& out) {
  ExperimentConfig c;
  c.seed = seed;
  c.m = modules;
  c.order_min = lo;
  c.order_max = hi;
  c.param_std = param_std;
  c.validate();
  const auto system = random_system(c);
  write_system_file(system, out);
  std::cout << "info: wrote " << out << '\n';
  std::cout << "result: n=" << system.parameter_count() << '\n';
  std::cout << "result: orders=" << orders_text(system) << '\n';
  return ok;
}

int cmd_run(const RunFlags& f) {
  const auto system = read_system_file(f.system);
  const auto config = config_for(system, f);
  const auto result = run_experiment(system, config, RunOptions{f.monitor});
  std::cout << "info: n=" << system.parameter_count() << " m=" << system.module_count()
            << " samples=" << config.samples << '\n';
  auto emit = [&](const std::optional<Trajectory>& t, const char* name) {
    if (!t) return;
    const std::string path = f.out_prefix + "-" + name + ".csv";
    write_trajectory_csv(*t, std::filesystem::path(path));
    std::cout << "info: wrote " << path << '\n';
    const double final_err = t->steps.empty() ? t->initial_err.squaredNorm()
                                              : t->steps.back().err_norm_sq;
    std::cout << "result: " << name << " final_err_norm_sq=" << format_real(final_err) << '\n';
  };
  emit(result.central, "central");
  emit(result.distributed, "distributed");
  return ok;
}

int cmd_monitor(const RunFlags& f) {
  const auto system = read_system_file(f.system);
  const auto config = config_for(system, f);
  const auto result = run_experiment(system, config, RunOptions{true});
  bool any_violation = false;
  auto emit = [&](const std::optional<MonitorReport>& r, const char* name) {
    if (!r) return;
    const std::string path = f.out_prefix + "-" + name + "-monitor.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    write_monitor_csv(out, *r);
    out.flush();
    if (!out) throw IoError(path, "write failed");
    std::cout << "info: wrote " << path << '\n';
    std::cout << "result: " << name << " steps=" << r->records.size()
              << " violations=" << r->violation_steps.size()
              << " orthogonal=" << r->orthogonal_steps.size();
    if (r->mode == MonitorMode::distributed) {
      std::cout << " gamma_bound_failures=" << r->gamma_bound_failures.size();
    }
    std::cout << '\n';
    if (!r->violation_steps.empty()) {
      any_violation = true;
      std::cout << "result: " << name << " first_violation_k=" << r->violation_steps.front()
                << '\n';
    }
  };
  emit(result.central_report, "central");
  emit(result.distributed_report, "distributed");
  std::cout << "result: " << (any_violation ? "violations" : "no_violations") << '\n';
  return ok;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& metric,
                double frac) {
  auto load = [&](const std::string& path) {
    const auto table = read_csv(path);
    const auto col = table.column(metric);
    if (!col) throw UsageError("column '" + metric + "' not found in " + path);
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) values.push_back(row[*col]);
    return values;
  };
  const auto va = load(a);
  const auto vb = load(b);
  const auto ka = first_crossing(va, frac);
  const auto kb = first_crossing(vb, frac);
  std::cout << "info: metric=" << metric << " threshold_frac=" << format_real(frac) << '\n';
  std::cout << "result: a_crossing=" << crossing_text(ka) << '\n';
  std::cout << "result: b_crossing=" << crossing_text(kb) << '\n';
  if (ka && kb) {
    std::cout << "result: difference="
              << static_cast<long long>(*kb) - static_cast<long long>(*ka) << '\n';
  } else {
    std::cout << "result: difference=none\n";
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed recursive FIR identification"};
  app.require_subcommand(1);

  std::uint64_t gen_seed = 1;
  std::size_t modules = 20, min_order = 1, max_order = 10;
  double param_std = 1.0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-system", "draw a random MISO FIR system");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--modules", modules, "number of modules m");
  gen->add_option("--min-order", min_order, "smallest module order");
  gen->add_option("--max-order", max_order, "largest module order");
  gen->add_option("--param-std", param_std, "coefficient std");
  gen->add_option("--out", gen_out, "output system file")->required();

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run central and/or distributed estimators");
  add_run_flags(run, run_flags, true);

  RunFlags mon_flags;
  auto* mon = app.add_subcommand("monitor", "run with Lyapunov monitoring and report");
  add_run_flags(mon, mon_flags, false);

  std::string cmp_a, cmp_b, metric = "err_norm_sq";
  double frac = 0.01;
  auto* cmp = app.add_subcommand("compare", "compare first-crossing iterations");
  cmp->add_option("--a", cmp_a, "first trajectory CSV")->required();
  cmp->add_option("--b", cmp_b, "second trajectory CSV")->required();
  cmp->add_option("--metric", metric, "column name");
  cmp->add_option("--threshold-frac", frac, "fraction of the initial value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  try {
    if (*gen) return cmd_gen_system(gen_seed, modules, min_order, max_order, param_std, gen_out);
    if (*run) return cmd_run(run_flags);
    if (*mon) return cmd_monitor(mon_flags);
    if (*cmp) return cmd_compare(cmp_a, cmp_b, metric, frac);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *gen ? usage : runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return runtime;
  }
  return usage;
}
