#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "distid/fir.hpp"

namespace distid {

// Local identification module I_i: owns theta_i, Sigma_i and Sigma_i^{-1}.
struct NodeState {
  std::size_t index = 0;  // 0-based
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd info;
  double gamma = 100.0;

  std::size_t order() const noexcept { return static_cast<std::size_t>(theta_hat.size()); }
};

NodeState make_node(std::size_t index, std::size_t order, double init_c, double gamma);

// Upstream message of one round: two scalars.
struct RoundMessageUp {
  std::size_t node = 0;
  double local_prediction = 0.0;  // phi_i^T theta_i(k)
  double local_gain = 0.0;        // phi_i^T Sigma_i(k) phi_i
};

// Broadcast of the fusion module: two scalars.
struct RoundMessageDown {
  double prediction_error = 0.0;  // y - sum_i local_prediction
  double alpha = 0.0;             // 1 / (sigma^2 + sum_i local_gain)
};

inline constexpr std::size_t kUpstreamScalarsPerNode = 2;
inline constexpr std::size_t kDownstreamScalars = 2;

// Static fusion relation B.
struct FusionCenter {
  double noise_var = 0.0;
  std::size_t node_count = 1;
};

double local_prediction(const NodeState& node, const Eigen::VectorXd& phi_i);
RoundMessageUp make_message(const NodeState& node, const Eigen::VectorXd& phi_i);

// Messages may arrive in any order; sums are always taken in node order.
RoundMessageDown fuse(const FusionCenter& center, double y, std::span<const RoundMessageUp> ups);

NodeState local_update(const NodeState& node, const Eigen::VectorXd& phi_i,
                       const RoundMessageDown& down);

// Stacked (block) view of all nodes.
struct BlockState {
  Eigen::VectorXd theta_hat;    // col(theta_1, ..., theta_m)
  Eigen::MatrixXd sigma;        // blockdiag(Sigma_i)
  Eigen::MatrixXd info;         // blockdiag(Sigma_i^{-1})
  Eigen::VectorXd gamma_diag;   // diagonal of Gamma_B
  std::vector<std::size_t> orders;
};

BlockState stack(std::span<const NodeState> nodes);

// blockdiag(phi_i phi_i^T) for the given block sizes.
Eigen::MatrixXd block_outer(const Eigen::VectorXd& phi, std::span<const std::size_t> orders);

struct RoundTrace {
  std::size_t k = 0;
  std::vector<RoundMessageUp> ups;  // indexed by node
  RoundMessageDown down;
  Eigen::VectorXd theta_hat;        // stacked estimate after the round

  std::size_t upstream_scalars() const noexcept { return kUpstreamScalarsPerNode * ups.size(); }
  std::size_t downstream_scalars() const noexcept { return kDownstreamScalars; }
};

// Owns the node states and the fusion module between round barriers.
class DistributedEstimator {
 public:
  DistributedEstimator(std::span<const std::size_t> orders, double init_c, double gamma,
                       double noise_var);
  DistributedEstimator(std::vector<NodeState> nodes, FusionCenter center);

  // Steps (i)-(iii) for one time step. Every node is updated from its
  // pre-round state. `order` permutes the processing order of nodes.
  RoundTrace run_round(const RegressorBank& bank, double y);
  RoundTrace run_round(const RegressorBank& bank, double y, std::span<const std::size_t> order);

  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const FusionCenter& center() const noexcept { return center_; }
  std::size_t rounds() const noexcept { return rounds_; }
  BlockState block() const { return stack(nodes_); }
  Eigen::VectorXd theta_hat() const;

 private:
  std::vector<NodeState> nodes_;
  FusionCenter center_;
  std::size_t rounds_ = 0;
};

// CSV layout: k,eps,alpha,pred_1..pred_m,gain_1..gain_m
void write_round_csv_header(std::ostream& out, std::size_t node_count);
void write_round_csv_row(std::ostream& out, const RoundTrace& trace);

}  // namespace distid
