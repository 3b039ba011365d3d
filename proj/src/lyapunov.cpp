#include "distid/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "distid/csv.hpp"
#include "distid/distributed.hpp"
#include "distid/errors.hpp"

namespace distid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionError(std::string(what) + " must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
}

void check_vec(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + " must have length " + std::to_string(n));
  }
}

}  // namespace

double w_quadratic(const Eigen::VectorXd& theta_err, const Eigen::MatrixXd& info) {
  check_square(info, theta_err.size(), "information matrix");
  return theta_err.dot(info * theta_err);
}

double delta_w_central_closed(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                              const Eigen::MatrixXd& sigma_mat, double sigma) {
  const auto n = theta_err.size();
  check_vec(phi, n, "regressor");
  check_square(sigma_mat, n, "gain matrix");
  const double s = phi.dot(theta_err);
  return -(s * s) / (sigma * sigma + phi.dot(sigma_mat * phi));
}

double delta_w_central_closed_gamma(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                                    const Eigen::MatrixXd& sigma_mat, double sigma, double gamma) {
  const auto n = theta_err.size();
  check_vec(phi, n, "regressor");
  check_square(sigma_mat, n, "gain matrix");
  const double s = phi.dot(theta_err);
  const double p = phi.dot(sigma_mat * phi);
  const double sigma_sq = sigma * sigma;
  const double alpha = 1.0 / (sigma_sq + p);
  // phi^T e(k+1) = s * alpha * sigma^2
  const double s_next = s * alpha * sigma_sq;
  return -alpha * s * s * (2.0 - alpha * p) + s_next * s_next / (gamma * gamma);
}

double overline_delta_w_b(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                          const Eigen::MatrixXd& sigma_b, double alpha_b) {
  const auto n = theta_err.size();
  check_vec(phi, n, "regressor");
  check_square(sigma_b, n, "block gain matrix");
  const double s = theta_err.dot(phi);
  const double p = phi.dot(sigma_b * phi);
  return -alpha_b * s * s * (2.0 - alpha_b * p);
}

double overline_delta_w_b_expanded(const Eigen::VectorXd& theta_err, const Eigen::VectorXd& phi,
                                   const Eigen::MatrixXd& sigma_b, double alpha_b) {
  const auto n = theta_err.size();
  check_vec(phi, n, "regressor");
  check_square(sigma_b, n, "block gain matrix");
  const Eigen::MatrixXd outer = phi * phi.transpose();
  const Eigen::VectorXd projected = outer * theta_err;
  const double quartic = projected.dot(sigma_b * projected);
  const double quadratic = theta_err.dot(projected);
  return alpha_b * alpha_b * quartic - 2.0 * alpha_b * quadratic;
}

Eigen::MatrixXd error_transition(const Eigen::MatrixXd& sigma_b, const Eigen::VectorXd& phi,
                                 double alpha_b) {
  const auto n = phi.size();
  check_square(sigma_b, n, "block gain matrix");
  return Eigen::MatrixXd::Identity(n, n) - alpha_b * (sigma_b * phi) * phi.transpose();
}

GammaBound gamma_sufficiency_bound(const Eigen::VectorXd& theta_err, const Eigen::MatrixXd& f,
                                   const Eigen::MatrixXd& phi_b, double overline_dw) {
  const auto n = theta_err.size();
  check_square(f, n, "transition matrix");
  check_square(phi_b, n, "block regressor matrix");
  if (!(overline_dw < 0.0)) {
    return GammaBound{GammaBound::Kind::degenerate, 0.0};
  }
  const Eigen::VectorXd propagated = f * theta_err;
  const double denom = propagated.dot(phi_b * propagated);
  if (denom <= kDegenerateDenominator) {
    return GammaBound{GammaBound::Kind::unbounded, std::numeric_limits<double>::infinity()};
  }
  return GammaBound{GammaBound::Kind::finite, std::abs(overline_dw) / denom};
}

bool is_orthogonal(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta_err, double tol) {
  check_vec(theta_err, phi.size(), "estimation error");
  return std::abs(phi.dot(theta_err)) <= tol * phi.norm() * theta_err.norm();
}

double lyapunov_lower_bound(const Eigen::MatrixXd& info0, const Eigen::VectorXd& theta_err) {
  check_square(info0, theta_err.size(), "information matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info0, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() * theta_err.squaredNorm();
}

const LyapRecord& LyapunovMonitor::push(LyapRecord rec) {
  if (rec.violation) {
    report_.violation_steps.push_back(rec.k);
  }
  if (rec.orthogonal) {
    report_.orthogonal_steps.push_back(rec.k);
  }
  report_.records.push_back(rec);
  return report_.records.back();
}

const LyapRecord& LyapunovMonitor::observe(const CentralStep& step) {
  if (report_.mode != MonitorMode::central) {
    throw ParameterError("central step fed to a distributed monitor");
  }
  LyapRecord rec;
  rec.k = step.k;
  rec.w = w_quadratic(step.theta_err, step.info);
  rec.delta_w = w_quadratic(step.theta_err_next, step.info_next) - rec.w;
  rec.delta_w_closed =
      step.gamma == step.sigma
          ? delta_w_central_closed(step.theta_err, step.phi, step.sigma_mat, step.sigma)
          : delta_w_central_closed_gamma(step.theta_err, step.phi, step.sigma_mat, step.sigma,
                                         step.gamma);
  rec.overline_delta_w = kNaN;
  rec.gamma_bound = GammaBound{GammaBound::Kind::degenerate, kNaN};
  rec.gamma_sum = kNaN;
  rec.orthogonal = is_orthogonal(step.phi, step.theta_err);
  rec.violation = rec.delta_w > kViolationTol;
  return push(rec);
}

const LyapRecord& LyapunovMonitor::observe(const DistributedStep& step) {
  if (report_.mode != MonitorMode::distributed) {
    throw ParameterError("distributed step fed to a central monitor");
  }
  LyapRecord rec;
  rec.k = step.k;
  rec.w = w_quadratic(step.theta_err, step.info);
  rec.delta_w = w_quadratic(step.theta_err_next, step.info_next) - rec.w;
  rec.delta_w_closed = kNaN;
  rec.overline_delta_w = overline_delta_w_b(step.theta_err, step.phi, step.sigma_b, step.alpha_b);
  const Eigen::MatrixXd f = error_transition(step.sigma_b, step.phi, step.alpha_b);
  const Eigen::MatrixXd phi_b = block_outer(step.phi, step.orders);
  rec.gamma_bound = gamma_sufficiency_bound(step.theta_err, f, phi_b, rec.overline_delta_w);
  rec.gamma_sum = 0.0;
  for (double g : step.gammas) {
    rec.gamma_sum += 1.0 / (g * g);
  }
  rec.orthogonal = is_orthogonal(step.phi, step.theta_err);
  rec.violation = rec.delta_w > kViolationTol;
  rec.gamma_bound_held = rec.gamma_bound.admits(rec.gamma_sum);
  if (!rec.orthogonal && !rec.gamma_bound_held) {
    report_.gamma_bound_failures.push_back(rec.k);
  }
  return push(rec);
}

MonitorReport check_trajectory(std::span<const CentralStep> steps) {
  if (steps.empty()) {
    throw ParameterError("cannot monitor an empty trajectory");
  }
  LyapunovMonitor monitor(MonitorMode::central);
  for (const auto& s : steps) {
    monitor.observe(s);
  }
  return monitor.take_report();
}

MonitorReport check_trajectory(std::span<const DistributedStep> steps) {
  if (steps.empty()) {
    throw ParameterError("cannot monitor an empty trajectory");
  }
  LyapunovMonitor monitor(MonitorMode::distributed);
  for (const auto& s : steps) {
    monitor.observe(s);
  }
  return monitor.take_report();
}

std::vector<std::string> monitor_columns(MonitorMode mode) {
  if (mode == MonitorMode::central) {
    return {"k", "W", "deltaW", "deltaW_closed", "orthogonal_flag", "violation_flag"};
  }
  return {"k",         "W",         "deltaW",          "overline_dW",
          "gamma_bound", "gamma_sum", "orthogonal_flag", "violation_flag"};
}

void append_monitor_fields(std::ostream& out, const LyapRecord& rec, MonitorMode mode) {
  out << ',' << format_real(rec.w) << ',' << format_real(rec.delta_w);
  if (mode == MonitorMode::central) {
    out << ',' << format_real(rec.delta_w_closed);
  } else {
    const double bound = rec.gamma_bound.kind == GammaBound::Kind::degenerate ? kNaN
                                                                               : rec.gamma_bound.value;
    out << ',' << format_real(rec.overline_delta_w) << ',' << format_real(bound) << ','
        << format_real(rec.gamma_sum);
  }
  out << ',' << (rec.orthogonal ? 1 : 0) << ',' << (rec.violation ? 1 : 0);
}

void write_monitor_csv(std::ostream& out, const MonitorReport& report) {
  const auto cols = monitor_columns(report.mode);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << '\n';
  for (const auto& rec : report.records) {
    out << rec.k;
    append_monitor_fields(out, rec, report.mode);
    out << '\n';
  }
}

}  // namespace distid
