#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "distid/random.hpp"

namespace testutil {

inline Eigen::VectorXd random_vector(distid::Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(distid::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Well-conditioned SPD matrix A A^T + n I.
inline Eigen::MatrixXd random_spd(distid::Rng& rng, Eigen::Index n) {
  const Eigen::MatrixXd a = random_matrix(rng, n, n);
  return a * a.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

inline std::vector<std::size_t> random_orders(distid::Rng& rng, std::size_t m, int lo, int hi) {
  std::vector<std::size_t> orders(m);
  for (auto& o : orders) o = static_cast<std::size_t>(rng.uniform_int(lo, hi));
  return orders;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace testutil
