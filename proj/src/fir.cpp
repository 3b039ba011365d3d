#include "distid/fir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distid/errors.hpp"

namespace distid {

namespace {

void check_coeffs(const Eigen::VectorXd& coeffs) {
  if (coeffs.size() == 0) {
    throw ParameterError("FIR module needs at least one coefficient");
  }
  if (!coeffs.allFinite()) {
    throw ParameterError("FIR coefficients must be finite");
  }
}

void check_aligned(std::span<const std::size_t> orders, const RegressorBank& bank) {
  if (orders.size() != bank.module_count()) {
    throw DimensionError("expected " + std::to_string(orders.size()) + " regressor windows, got " +
                         std::to_string(bank.module_count()));
  }
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] != static_cast<std::size_t>(bank.window(i).size())) {
      throw DimensionError("window " + std::to_string(i) + " has length " +
                           std::to_string(bank.window(i).size()) + ", expected " +
                           std::to_string(orders[i]));
    }
  }
}

}  // namespace

FirModule::FirModule(std::vector<double> coeffs)
    : coeffs_(Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                static_cast<Eigen::Index>(coeffs.size()))) {
  check_coeffs(coeffs_);
}

FirModule::FirModule(const Eigen::VectorXd& coeffs) : coeffs_(coeffs) { check_coeffs(coeffs_); }

MisoSystem::MisoSystem(std::vector<FirModule> modules, double noise_std)
    : modules_(std::move(modules)), noise_std_(noise_std) {
  if (modules_.empty()) {
    throw ParameterError("MISO system needs at least one module");
  }
  if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
    throw ParameterError("noise_std must be finite and non-negative");
  }
  for (const auto& module : modules_) {
    parameter_count_ += module.order();
  }
}

std::vector<std::size_t> MisoSystem::orders() const {
  std::vector<std::size_t> out;
  out.reserve(modules_.size());
  for (const auto& module : modules_) {
    out.push_back(module.order());
  }
  return out;
}

Eigen::VectorXd MisoSystem::stacked_coeffs() const {
  const auto parts = coeff_parts();
  return stack_blocks(parts);
}

std::vector<Eigen::VectorXd> MisoSystem::coeff_parts() const {
  std::vector<Eigen::VectorXd> parts;
  parts.reserve(modules_.size());
  for (const auto& module : modules_) {
    parts.push_back(module.coeffs());
  }
  return parts;
}

RegressorBank::RegressorBank(std::span<const std::size_t> orders) {
  if (orders.empty()) {
    throw ParameterError("regressor bank needs at least one window");
  }
  windows_.reserve(orders.size());
  for (auto order : orders) {
    if (order == 0) {
      throw ParameterError("regressor window order must be at least 1");
    }
    windows_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(order)));
    parameter_count_ += order;
  }
}

RegressorBank::RegressorBank(const MisoSystem& system) : RegressorBank(system.orders()) {}

void RegressorBank::push(std::span<const double> u) {
  if (u.size() != windows_.size()) {
    throw DimensionError("input sample has " + std::to_string(u.size()) + " channels, bank has " +
                         std::to_string(windows_.size()));
  }
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw ParameterError("input sample " + std::to_string(i) + " is not finite");
    }
    auto& w = windows_[i];
    const auto n = w.size();
    for (Eigen::Index j = n - 1; j > 0; --j) {
      w[j] = w[j - 1];
    }
    w[0] = u[i];
  }
}

std::vector<std::size_t> RegressorBank::orders() const {
  std::vector<std::size_t> out;
  out.reserve(windows_.size());
  for (const auto& w : windows_) {
    out.push_back(static_cast<std::size_t>(w.size()));
  }
  return out;
}

Eigen::VectorXd RegressorBank::stacked() const { return stack_blocks(windows_); }

RegressorBank push_inputs(RegressorBank bank, std::span<const double> u) {
  bank.push(u);
  return bank;
}

double noise_free_output(const MisoSystem& system, const RegressorBank& bank) {
  check_aligned(system.orders(), bank);
  double y = 0.0;
  for (std::size_t i = 0; i < system.module_count(); ++i) {
    y += bank.window(i).dot(system.module(i).coeffs());
  }
  return y;
}

double noisy_output(const MisoSystem& system, const RegressorBank& bank, double noise_sample) {
  return noise_free_output(system, bank) + noise_sample;
}

double predict(std::span<const Eigen::VectorXd> theta_parts, const RegressorBank& bank) {
  std::vector<std::size_t> orders;
  orders.reserve(theta_parts.size());
  for (const auto& part : theta_parts) {
    orders.push_back(static_cast<std::size_t>(part.size()));
  }
  check_aligned(orders, bank);
  double y = 0.0;
  for (std::size_t i = 0; i < theta_parts.size(); ++i) {
    y += bank.window(i).dot(theta_parts[i]);
  }
  return y;
}

std::vector<Eigen::VectorXd> split_blocks(const Eigen::VectorXd& stacked,
                                          std::span<const std::size_t> orders) {
  std::size_t total = 0;
  for (auto order : orders) {
    total += order;
  }
  if (total != static_cast<std::size_t>(stacked.size())) {
    throw DimensionError("stacked vector of length " + std::to_string(stacked.size()) +
                         " does not match block total " + std::to_string(total));
  }
  std::vector<Eigen::VectorXd> parts;
  parts.reserve(orders.size());
  Eigen::Index offset = 0;
  for (auto order : orders) {
    const auto len = static_cast<Eigen::Index>(order);
    parts.emplace_back(stacked.segment(offset, len));
    offset += len;
  }
  return parts;
}

Eigen::VectorXd stack_blocks(std::span<const Eigen::VectorXd> parts) {
  Eigen::Index total = 0;
  for (const auto& part : parts) {
    total += part.size();
  }
  Eigen::VectorXd out(total);
  Eigen::Index offset = 0;
  for (const auto& part : parts) {
    out.segment(offset, part.size()) = part;
    offset += part.size();
  }
  return out;
}

std::string system_to_json(const MisoSystem& system) {
  nlohmann::ordered_json j;
  auto modules = nlohmann::ordered_json::array();
  for (const auto& module : system.modules()) {
    const auto& c = module.coeffs();
    modules.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  j["modules"] = std::move(modules);
  j["noise_std"] = system.noise_std();
  return j.dump(2) + "\n";
}

MisoSystem system_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("system file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("modules") || !j.contains("noise_std")) {
    throw ParameterError("system file needs fields \"modules\" and \"noise_std\"");
  }
  try {
    std::vector<FirModule> modules;
    for (const auto& m : j.at("modules")) {
      modules.emplace_back(m.get<std::vector<double>>());
    }
    return MisoSystem(std::move(modules), j.at("noise_std").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed system file: ") + e.what());
  }
}

void write_system_file(const MisoSystem& system, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(path.string(), "cannot open for writing");
  }
  out << system_to_json(system);
  if (!out) {
    throw IoError(path.string(), "write failed");
  }
}

MisoSystem read_system_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return system_from_json(buf.str());
}

}  // namespace distid
