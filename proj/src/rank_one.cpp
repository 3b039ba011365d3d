#include "distid/rank_one.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace distid {

Eigen::MatrixXd rank_one_inverse_update(const Eigen::MatrixXd& inverse,
                                        const Eigen::VectorXd& phi, double inv_weight) {
  const Eigen::VectorXd p_phi = inverse * phi;
  const double beta = 1.0 / (inv_weight + phi.dot(p_phi));
  Eigen::MatrixXd out = inverse;
  out.noalias() -= beta * (p_phi * p_phi.transpose());
  symmetrize(out);
  return out;
}

Eigen::MatrixXd rank_one_update(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& phi,
                                double weight) {
  Eigen::MatrixXd out = matrix;
  out.noalias() += weight * (phi * phi.transpose());
  symmetrize(out);
  return out;
}

double inverse_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto n = a.rows();
  const Eigen::MatrixXd r = a * b - Eigen::MatrixXd::Identity(n, n);
  return r.norm() / std::sqrt(static_cast<double>(n));
}

bool is_symmetric_positive_definite(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    return false;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
    return false;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace distid
