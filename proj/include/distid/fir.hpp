#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace distid {

// One FIR polynomial b0 + b1 q^-1 + ... + b_{n-1} q^{-n+1}.
// Coefficients are stored b0 first so they line up with a regressor window
// that holds the newest sample first.
class FirModule {
 public:
  explicit FirModule(std::vector<double> coeffs);
  explicit FirModule(const Eigen::VectorXd& coeffs);

  std::size_t order() const noexcept { return static_cast<std::size_t>(coeffs_.size()); }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }

 private:
  Eigen::VectorXd coeffs_;
};

// y(t) = sum_i B_i(q) u_i(t) + v(t) with white v of standard deviation noise_std.
class MisoSystem {
 public:
  MisoSystem(std::vector<FirModule> modules, double noise_std);

  std::size_t module_count() const noexcept { return modules_.size(); }
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  double noise_std() const noexcept { return noise_std_; }

  const std::vector<FirModule>& modules() const noexcept { return modules_; }
  const FirModule& module(std::size_t i) const { return modules_.at(i); }
  std::vector<std::size_t> orders() const;

  // col(theta_1, ..., theta_m).
  Eigen::VectorXd stacked_coeffs() const;
  std::vector<Eigen::VectorXd> coeff_parts() const;

 private:
  std::vector<FirModule> modules_;
  double noise_std_;
  std::size_t parameter_count_ = 0;
};

// Per-input shift registers (u_i(t), ..., u_i(t - n_i + 1)); samples before
// the first push read as zero.
class RegressorBank {
 public:
  explicit RegressorBank(std::span<const std::size_t> orders);
  explicit RegressorBank(const MisoSystem& system);

  // Shifts every window by one and inserts u[i] at the front of window i.
  void push(std::span<const double> u);

  std::size_t module_count() const noexcept { return windows_.size(); }
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  const Eigen::VectorXd& window(std::size_t i) const { return windows_.at(i); }
  const std::vector<Eigen::VectorXd>& windows() const noexcept { return windows_; }
  std::vector<std::size_t> orders() const;

  // col(phi_1, ..., phi_m).
  Eigen::VectorXd stacked() const;

 private:
  std::vector<Eigen::VectorXd> windows_;
  std::size_t parameter_count_ = 0;
};

RegressorBank push_inputs(RegressorBank bank, std::span<const double> u);

double noise_free_output(const MisoSystem& system, const RegressorBank& bank);
double noisy_output(const MisoSystem& system, const RegressorBank& bank, double noise_sample);

// sum_i phi_i^T theta_i.
double predict(std::span<const Eigen::VectorXd> theta_parts, const RegressorBank& bank);

// Splits a stacked vector into per-module parts of the given orders.
std::vector<Eigen::VectorXd> split_blocks(const Eigen::VectorXd& stacked,
                                          std::span<const std::size_t> orders);
Eigen::VectorXd stack_blocks(std::span<const Eigen::VectorXd> parts);

// System file: {"modules": [[b0, b1, ...], ...], "noise_std": sigma}.
std::string system_to_json(const MisoSystem& system);
MisoSystem system_from_json(const std::string& text);
void write_system_file(const MisoSystem& system, const std::filesystem::path& path);
MisoSystem read_system_file(const std::filesystem::path& path);

}  // namespace distid
