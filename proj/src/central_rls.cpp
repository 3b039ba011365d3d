#include "distid/central_rls.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "distid/errors.hpp"
#include "distid/rank_one.hpp"

namespace distid {

namespace {

void check_state(const CentralState& state, const Eigen::VectorXd& phi) {
  const auto n = state.theta_hat.size();
  if (state.sigma_mat.rows() != n || state.sigma_mat.cols() != n || state.info_mat.rows() != n ||
      state.info_mat.cols() != n) {
    throw DimensionError("central state matrices do not match estimate length " +
                         std::to_string(n));
  }
  if (phi.size() != n) {
    throw DimensionError("regressor length " + std::to_string(phi.size()) +
                         " does not match parameter count " + std::to_string(n));
  }
  if (!phi.allFinite()) {
    throw NumericError("regressor is not finite");
  }
}

// Gram matrix with a singularity check based on its eigenvalues.
Eigen::MatrixXd checked_gram(const Eigen::MatrixXd& data_matrix) {
  if (data_matrix.rows() < data_matrix.cols()) {
    throw SingularityError("rank deficient data matrix: " + std::to_string(data_matrix.rows()) +
                           " samples for " + std::to_string(data_matrix.cols()) + " parameters");
  }
  const Eigen::MatrixXd gram = data_matrix.transpose() * data_matrix;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > kSingularConditionLimit) {
    throw SingularityError("Phi^T Phi is numerically singular (eigenvalues in [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
  return gram;
}

CentralState update(const CentralState& state, const Eigen::VectorXd& phi, double y,
                    double gain_var, GainMode mode, RlsStep* step) {
  check_state(state, phi);
  const Eigen::VectorXd sigma_phi = state.sigma_mat * phi;
  const double prediction = phi.dot(state.theta_hat);
  const double error = y - prediction;
  const double denom = state.noise_var + phi.dot(sigma_phi);
  if (!(denom > 0.0)) {
    throw NumericError("alpha denominator sigma^2 + phi^T Sigma phi is not positive");
  }
  const double alpha = 1.0 / denom;

  CentralState next;
  next.theta_hat = state.theta_hat + (alpha * error) * sigma_phi;
  next.sigma_mat = rank_one_inverse_update(state.sigma_mat, phi, gain_var);
  next.info_mat = rank_one_update(state.info_mat, phi, 1.0 / gain_var);
  next.noise_var = state.noise_var;
  next.gain_var = gain_var;
  next.mode = mode;

  if (!next.theta_hat.allFinite() || !next.sigma_mat.allFinite() || !next.info_mat.allFinite()) {
    throw NumericError("non-finite value in RLS update");
  }
  if (step != nullptr) {
    *step = RlsStep{prediction, error, alpha};
  }
  return next;
}

}  // namespace

CentralState from_scratch_init(std::size_t n, double c, double noise_var) {
  if (n == 0) {
    throw ParameterError("parameter count must be at least 1");
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ParameterError("initial gain c must be positive, got " + std::to_string(c));
  }
  if (!(noise_var >= 0.0)) {
    throw ParameterError("noise variance must be non-negative");
  }
  const auto dim = static_cast<Eigen::Index>(n);
  CentralState s;
  s.theta_hat = Eigen::VectorXd::Zero(dim);
  s.sigma_mat = c * Eigen::MatrixXd::Identity(dim, dim);
  s.info_mat = (1.0 / c) * Eigen::MatrixXd::Identity(dim, dim);
  s.noise_var = noise_var;
  s.gain_var = noise_var;
  return s;
}

Eigen::VectorXd batch_lse(const Eigen::MatrixXd& data_matrix, const Eigen::VectorXd& outputs) {
  if (outputs.size() != data_matrix.rows()) {
    throw DimensionError("data matrix has " + std::to_string(data_matrix.rows()) +
                         " rows but there are " + std::to_string(outputs.size()) + " outputs");
  }
  const Eigen::MatrixXd gram = checked_gram(data_matrix);
  return gram.llt().solve(data_matrix.transpose() * outputs);
}

Eigen::MatrixXd batch_covariance(const Eigen::MatrixXd& data_matrix, double noise_var) {
  if (!(noise_var > 0.0)) {
    throw ParameterError("batch covariance needs sigma^2 > 0");
  }
  const Eigen::MatrixXd gram = checked_gram(data_matrix);
  const auto n = gram.rows();
  Eigen::MatrixXd cov = noise_var * gram.llt().solve(Eigen::MatrixXd::Identity(n, n));
  symmetrize(cov);
  return cov;
}

CentralState seed_from_batch(const Eigen::MatrixXd& data_matrix, const Eigen::VectorXd& outputs,
                             double noise_var) {
  CentralState s;
  s.theta_hat = batch_lse(data_matrix, outputs);
  s.sigma_mat = batch_covariance(data_matrix, noise_var);
  s.info_mat = (data_matrix.transpose() * data_matrix) / noise_var;
  symmetrize(s.info_mat);
  s.noise_var = noise_var;
  s.gain_var = noise_var;
  return s;
}

CentralState rls_update(const CentralState& state, const Eigen::VectorXd& phi, double y,
                        RlsStep* step) {
  if (!(state.noise_var > 0.0)) {
    throw ParameterError("sigma-driven RLS needs sigma^2 > 0");
  }
  return update(state, phi, y, state.noise_var, GainMode::sigma_driven, step);
}

CentralState rls_update_gamma(const CentralState& state, const Eigen::VectorXd& phi, double y,
                              double gamma, RlsStep* step) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParameterError("gamma must be positive, got " + std::to_string(gamma));
  }
  return update(state, phi, y, gamma * gamma, GainMode::gamma_driven, step);
}

}  // namespace distid
