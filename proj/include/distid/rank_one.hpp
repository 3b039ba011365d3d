#pragma once

#include <Eigen/Core>

namespace distid {

// Sherman-Morrison: for P = A^{-1} returns (A + w * phi phi^T)^{-1}
//   = P - (P phi)(P phi)^T / (1/w + phi^T P phi).
// `inv_weight` is 1/w. The result is re-symmetrized.
Eigen::MatrixXd rank_one_inverse_update(const Eigen::MatrixXd& inverse,
                                        const Eigen::VectorXd& phi, double inv_weight);

// A + w * phi phi^T, re-symmetrized.
Eigen::MatrixXd rank_one_update(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& phi,
                                double weight);

inline void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// ||A B - I||_F / sqrt(n).
double inverse_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

bool is_symmetric_positive_definite(const Eigen::MatrixXd& m, double sym_tol = 1e-12);

}  // namespace distid
