#include "distid/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "distid/csv.hpp"
#include "distid/errors.hpp"
#include "distid/rank_one.hpp"

namespace distid {

namespace {

void check_phi(const NodeState& node, const Eigen::VectorXd& phi_i) {
  if (static_cast<std::size_t>(phi_i.size()) != node.order()) {
    throw DimensionError("node " + std::to_string(node.index) + " expects regressor length " +
                         std::to_string(node.order()) + ", got " + std::to_string(phi_i.size()));
  }
}

}  // namespace

NodeState make_node(std::size_t index, std::size_t order, double init_c, double gamma) {
  if (order == 0) {
    throw ParameterError("node order must be at least 1");
  }
  if (!(init_c > 0.0) || !std::isfinite(init_c)) {
    throw ParameterError("initial gain c must be positive");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParameterError("gamma must be positive");
  }
  const auto n = static_cast<Eigen::Index>(order);
  NodeState node;
  node.index = index;
  node.theta_hat = Eigen::VectorXd::Zero(n);
  node.sigma = init_c * Eigen::MatrixXd::Identity(n, n);
  node.info = (1.0 / init_c) * Eigen::MatrixXd::Identity(n, n);
  node.gamma = gamma;
  return node;
}

double local_prediction(const NodeState& node, const Eigen::VectorXd& phi_i) {
  check_phi(node, phi_i);
  return phi_i.dot(node.theta_hat);
}

RoundMessageUp make_message(const NodeState& node, const Eigen::VectorXd& phi_i) {
  check_phi(node, phi_i);
  return RoundMessageUp{node.index, phi_i.dot(node.theta_hat), phi_i.dot(node.sigma * phi_i)};
}

RoundMessageDown fuse(const FusionCenter& center, double y, std::span<const RoundMessageUp> ups) {
  const std::size_t m = center.node_count;
  std::vector<const RoundMessageUp*> by_node(m, nullptr);
  for (const auto& up : ups) {
    if (up.node >= m) {
      throw ProtocolError("message from unknown node", up.node);
    }
    if (by_node[up.node] != nullptr) {
      throw ProtocolError("duplicate message", up.node);
    }
    by_node[up.node] = &up;
  }
  double predicted = 0.0;
  double gain = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (by_node[i] == nullptr) {
      throw ProtocolError("missing message", i);
    }
    predicted += by_node[i]->local_prediction;
    gain += by_node[i]->local_gain;
  }
  const double denom = center.noise_var + gain;
  if (!(denom > 0.0)) {
    throw NumericError("fusion gain denominator sigma^2 + sum phi_i^T Sigma_i phi_i is zero");
  }
  return RoundMessageDown{y - predicted, 1.0 / denom};
}

NodeState local_update(const NodeState& node, const Eigen::VectorXd& phi_i,
                       const RoundMessageDown& down) {
  check_phi(node, phi_i);
  if (!(down.alpha > 0.0)) {
    throw ParameterError("fusion gain alpha must be positive");
  }
  NodeState next;
  next.index = node.index;
  next.gamma = node.gamma;
  next.theta_hat = node.theta_hat + (down.alpha * down.prediction_error) * (node.sigma * phi_i);
  const double gamma_sq = node.gamma * node.gamma;
  next.sigma = rank_one_inverse_update(node.sigma, phi_i, gamma_sq);
  next.info = rank_one_update(node.info, phi_i, 1.0 / gamma_sq);
  if (!next.theta_hat.allFinite() || !next.sigma.allFinite() || !next.info.allFinite()) {
    throw NumericError("non-finite value in local update of node " + std::to_string(node.index));
  }
  return next;
}

BlockState stack(std::span<const NodeState> nodes) {
  BlockState b;
  Eigen::Index n = 0;
  for (const auto& node : nodes) {
    b.orders.push_back(node.order());
    n += node.theta_hat.size();
  }
  b.theta_hat.resize(n);
  b.sigma = Eigen::MatrixXd::Zero(n, n);
  b.info = Eigen::MatrixXd::Zero(n, n);
  b.gamma_diag.resize(n);
  Eigen::Index offset = 0;
  for (const auto& node : nodes) {
    const auto len = node.theta_hat.size();
    b.theta_hat.segment(offset, len) = node.theta_hat;
    b.sigma.block(offset, offset, len, len) = node.sigma;
    b.info.block(offset, offset, len, len) = node.info;
    b.gamma_diag.segment(offset, len).setConstant(node.gamma);
    offset += len;
  }
  return b;
}

Eigen::MatrixXd block_outer(const Eigen::VectorXd& phi, std::span<const std::size_t> orders) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(phi.size(), phi.size());
  Eigen::Index offset = 0;
  for (auto order : orders) {
    const auto len = static_cast<Eigen::Index>(order);
    if (offset + len > phi.size()) {
      throw DimensionError("block sizes exceed regressor length");
    }
    const auto seg = phi.segment(offset, len);
    out.block(offset, offset, len, len) = seg * seg.transpose();
    offset += len;
  }
  if (offset != phi.size()) {
    throw DimensionError("block sizes do not cover the regressor");
  }
  return out;
}

DistributedEstimator::DistributedEstimator(std::span<const std::size_t> orders, double init_c,
                                           double gamma, double noise_var)
    : center_{noise_var, orders.size()} {
  if (orders.empty()) {
    throw ParameterError("need at least one node");
  }
  if (!(noise_var >= 0.0)) {
    throw ParameterError("noise variance must be non-negative");
  }
  nodes_.reserve(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    nodes_.push_back(make_node(i, orders[i], init_c, gamma));
  }
}

DistributedEstimator::DistributedEstimator(std::vector<NodeState> nodes, FusionCenter center)
    : nodes_(std::move(nodes)), center_(center) {
  if (nodes_.empty() || center_.node_count != nodes_.size()) {
    throw ParameterError("fusion center node count does not match node list");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].index != i) {
      throw ParameterError("nodes must be ordered by index");
    }
  }
}

RoundTrace DistributedEstimator::run_round(const RegressorBank& bank, double y) {
  std::vector<std::size_t> order(nodes_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return run_round(bank, y, order);
}

RoundTrace DistributedEstimator::run_round(const RegressorBank& bank, double y,
                                           std::span<const std::size_t> order) {
  const std::size_t m = nodes_.size();
  if (bank.module_count() != m) {
    throw DimensionError("regressor bank has " + std::to_string(bank.module_count()) +
                         " windows for " + std::to_string(m) + " nodes");
  }
  if (order.size() != m) {
    throw ParameterError("processing order must list every node once");
  }

  // (i) local predictions and gain scalars, in arrival order
  std::vector<RoundMessageUp> arrivals;
  arrivals.reserve(m);
  for (auto i : order) {
    if (i >= m) {
      throw ParameterError("processing order names unknown node");
    }
    arrivals.push_back(make_message(nodes_[i], bank.window(i)));
  }

  // (ii) barrier: fusion and broadcast
  const RoundMessageDown down = fuse(center_, y, arrivals);

  // (iii) local updates from pre-round states
  std::vector<NodeState> next(m);
  for (auto i : order) {
    next[i] = local_update(nodes_[i], bank.window(i), down);
  }
  nodes_ = std::move(next);

  RoundTrace trace;
  trace.k = rounds_++;
  trace.ups.resize(m);
  for (const auto& up : arrivals) {
    trace.ups[up.node] = up;
  }
  trace.down = down;
  trace.theta_hat = theta_hat();
  return trace;
}

Eigen::VectorXd DistributedEstimator::theta_hat() const {
  std::vector<Eigen::VectorXd> parts;
  parts.reserve(nodes_.size());
  for (const auto& node : nodes_) {
    parts.push_back(node.theta_hat);
  }
  return stack_blocks(parts);
}

void write_round_csv_header(std::ostream& out, std::size_t node_count) {
  out << "k,eps,alpha";
  for (std::size_t i = 1; i <= node_count; ++i) {
    out << ",pred_" << i;
  }
  for (std::size_t i = 1; i <= node_count; ++i) {
    out << ",gain_" << i;
  }
  out << '\n';
}

void write_round_csv_row(std::ostream& out, const RoundTrace& trace) {
  out << trace.k << ',' << format_real(trace.down.prediction_error) << ','
      << format_real(trace.down.alpha);
  for (const auto& up : trace.ups) {
    out << ',' << format_real(up.local_prediction);
  }
  for (const auto& up : trace.ups) {
    out << ',' << format_real(up.local_gain);
  }
  out << '\n';
}

}  // namespace distid
