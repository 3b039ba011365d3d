#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace distid {

inline constexpr double kOrthogonalityTol = 1e-12;
inline constexpr double kViolationTol = 1e-12;
inline constexpr double kDegenerateDenominator = 1e-14;

// theta_err^T info theta_err.
double w_quadratic(const Eigen::VectorXd& theta_err, const Eigen::MatrixXd& info);

// -(theta_err^T phi)^2 / (sigma^2 + phi^T Sigma phi); the exact one-step
// change of W_C under sigma-driven RLS with noise-free data.
double delta_w_central_closed(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                              const Eigen::MatrixXd& sigma_mat, double sigma);

// Same quantity when the information matrix grows by gamma^{-2} phi phi^T
// while alpha keeps sigma^2. Reduces to delta_w_central_closed for gamma = sigma.
double delta_w_central_closed_gamma(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                                    const Eigen::MatrixXd& sigma_mat, double sigma, double gamma);

// -alpha_B (theta_err^T phi)^2 (2 - alpha_B phi^T Sigma_B phi).
double overline_delta_w_b(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                          const Eigen::MatrixXd& sigma_b, double alpha_b);

// alpha^2 e^T phi phi^T Sigma_B phi phi^T e - 2 alpha e^T phi phi^T e, evaluated
// term by term.
double overline_delta_w_b_expanded(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                                   const Eigen::MatrixXd& sigma_b, double alpha_b);

// I - alpha_B Sigma_B phi phi^T.
Eigen::MatrixXd error_transition(const Eigen::MatrixXd& sigma_b, const Eigen::VectorXd& phi,
                                 double alpha_b);

// Largest admissible sum_i gamma_i^{-2} for a guaranteed decrease of W_B.
struct GammaBound {
  enum class Kind {
    finite,
    // denominator vanishes: any gamma works
    unbounded,
    // no decrease available (orthogonal step): no gamma works
    degenerate,
  };
  Kind kind = Kind::degenerate;
  double value = 0.0;

  bool admits(double gamma_inv_sq_sum) const noexcept {
    switch (kind) {
      case Kind::finite: return gamma_inv_sq_sum < value;
      case Kind::unbounded: return true;
      case Kind::degenerate: return false;
    }
    return false;
  }
};

// |overline_dw| / (e^T F^T phi_B F e).
GammaBound gamma_sufficiency_bound(const Eigen::VectorXd& theta_err, const Eigen::MatrixXd& f,
                                   const Eigen::MatrixXd& phi_b, double overline_dw);

// |phi^T e| <= tol * ||phi|| * ||e||.
bool is_orthogonal(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta_err,
                   double tol = kOrthogonalityTol);

// lambda_min(info0) * ||e||^2, the quadratic lower bound on W.
double lyapunov_lower_bound(const Eigen::MatrixXd& info0, const Eigen::VectorXd& theta_err);

enum class MonitorMode { central, distributed };

// Everything needed to evaluate one central step k -> k+1.
struct CentralStep {
  std::size_t k = 0;
  Eigen::VectorXd theta_err;       // theta_hat(k) - theta0
  Eigen::VectorXd theta_err_next;  // theta_hat(k+1) - theta0
  Eigen::MatrixXd sigma_mat;       // Sigma(k)
  Eigen::MatrixXd info;            // Sigma^{-1}(k)
  Eigen::MatrixXd info_next;       // Sigma^{-1}(k+1)
  Eigen::VectorXd phi;             // phi(k+1)
  double sigma = 0.0;
  double gamma = 0.0;
};

struct DistributedStep {
  std::size_t k = 0;
  Eigen::VectorXd theta_err;
  Eigen::VectorXd theta_err_next;
  Eigen::MatrixXd sigma_b;
  Eigen::MatrixXd info;
  Eigen::MatrixXd info_next;
  Eigen::VectorXd phi;
  double alpha_b = 0.0;
  std::vector<double> gammas;       // one per node
  std::vector<std::size_t> orders;  // block sizes
};

struct LyapRecord {
  std::size_t k = 0;
  double w = 0.0;
  double delta_w = 0.0;
  // central only (NaN otherwise)
  double delta_w_closed = 0.0;
  // distributed only (NaN otherwise)
  double overline_delta_w = 0.0;
  GammaBound gamma_bound;
  double gamma_sum = 0.0;
  bool orthogonal = false;
  bool violation = false;
  bool gamma_bound_held = false;
};

struct MonitorReport {
  MonitorMode mode = MonitorMode::central;
  std::vector<LyapRecord> records;
  std::vector<std::size_t> violation_steps;
  std::vector<std::size_t> orthogonal_steps;
  // distributed: non-orthogonal steps where sum gamma_i^{-2} exceeded the bound
  std::vector<std::size_t> gamma_bound_failures;

  bool gamma_bound_held_all() const noexcept { return gamma_bound_failures.empty(); }
};

// Incremental evaluation; memory is one record per step.
class LyapunovMonitor {
 public:
  explicit LyapunovMonitor(MonitorMode mode) { report_.mode = mode; }

  const LyapRecord& observe(const CentralStep& step);
  const LyapRecord& observe(const DistributedStep& step);

  MonitorMode mode() const noexcept { return report_.mode; }
  const MonitorReport& report() const noexcept { return report_; }
  MonitorReport take_report() { return std::move(report_); }

 private:
  const LyapRecord& push(LyapRecord rec);

  MonitorReport report_;
};

MonitorReport check_trajectory(std::span<const CentralStep> steps);
MonitorReport check_trajectory(std::span<const DistributedStep> steps);

std::vector<std::string> monitor_columns(MonitorMode mode);
// Values in monitor_columns order, excluding the leading k.
void append_monitor_fields(std::ostream& out, const LyapRecord& rec, MonitorMode mode);
void write_monitor_csv(std::ostream& out, const MonitorReport& report);

}  // namespace distid
