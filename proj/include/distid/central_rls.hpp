#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace distid {

enum class GainMode {
  // Sigma^{-1}(k+1) = Sigma^{-1}(k) + sigma^{-2} phi phi^T
  sigma_driven,
  // Sigma^{-1}(k+1) = Sigma^{-1}(k) + gamma^{-2} phi phi^T, alpha still uses sigma^2
  gamma_driven,
};

// Central recursive least-squares state. Both the gain matrix and its
// inverse are carried along so that neither consumer has to invert.
struct CentralState {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd sigma_mat;
  Eigen::MatrixXd info_mat;
  // sigma^2 used inside alpha.
  double noise_var = 1.0;
  // gamma^2 of the last gamma-driven update; equals noise_var in sigma mode.
  double gain_var = 1.0;
  GainMode mode = GainMode::sigma_driven;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(theta_hat.size()); }
};

// Per-step byproducts of an RLS update.
struct RlsStep {
  double prediction = 0.0;  // phi^T theta_hat(k)
  double error = 0.0;       // y - prediction
  double alpha = 0.0;       // 1 / (sigma^2 + phi^T Sigma phi)
};

// theta_hat = 0, Sigma = c I, Sigma^{-1} = I / c. Requires c > 0.
CentralState from_scratch_init(std::size_t n, double c, double noise_var = 1.0);

// (Phi^T Phi)^{-1} Phi^T y. Throws SingularityError if Phi^T Phi is rank
// deficient or its condition number exceeds 1e12.
Eigen::VectorXd batch_lse(const Eigen::MatrixXd& data_matrix, const Eigen::VectorXd& outputs);

// sigma^2 (Phi^T Phi)^{-1}, the batch covariance used to seed the recursion.
Eigen::MatrixXd batch_covariance(const Eigen::MatrixXd& data_matrix, double noise_var);

// Batch estimate plus covariance over a data prefix, ready for rls_update.
CentralState seed_from_batch(const Eigen::MatrixXd& data_matrix, const Eigen::VectorXd& outputs,
                             double noise_var);

CentralState rls_update(const CentralState& state, const Eigen::VectorXd& phi, double y,
                        RlsStep* step = nullptr);

CentralState rls_update_gamma(const CentralState& state, const Eigen::VectorXd& phi, double y,
                              double gamma, RlsStep* step = nullptr);

inline constexpr double kSingularConditionLimit = 1e12;

}  // namespace distid
