#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "distid/distributed.hpp"
#include "distid/errors.hpp"
#include "distid/lyapunov.hpp"
#include "distid/rank_one.hpp"
#include "test_util.hpp"

using namespace distid;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

NodeState scalar_node(std::size_t index, double theta, double sigma, double gamma) {
  NodeState n = make_node(index, 1, sigma, gamma);
  n.theta_hat[0] = theta;
  return n;
}

// Random nodes with random SPD gains and estimates.
std::vector<NodeState> random_nodes(Rng& rng, const std::vector<std::size_t>& orders) {
  std::vector<NodeState> nodes;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(orders[i]);
    NodeState node;
    node.index = i;
    node.theta_hat = testutil::random_vector(rng, n);
    node.sigma = testutil::random_spd(rng, n);
    node.info = node.sigma.inverse();
    node.gamma = 1.0 + 100.0 * rng.uniform01();
    nodes.push_back(node);
  }
  return nodes;
}

RegressorBank random_bank(Rng& rng, const std::vector<std::size_t>& orders, int pushes) {
  RegressorBank bank(orders);
  for (int t = 0; t < pushes; ++t) {
    std::vector<double> u(orders.size());
    for (auto& x : u) x = rng.normal();
    bank.push(u);
  }
  return bank;
}

}  // namespace

TEST_CASE("local_prediction") {
  CHECK(local_prediction(scalar_node(0, 0.5, 1.0, 10.0), vec({4.0})) == 2.0);
  auto zero = make_node(0, 3, 1.0, 10.0);
  CHECK(local_prediction(zero, vec({1.0, 2.0, 3.0})) == 0.0);
  auto two = make_node(0, 2, 1.0, 10.0);
  two.theta_hat = vec({1.0, 1.0});
  CHECK(local_prediction(two, vec({2.0, -2.0})) == 0.0);
  CHECK_THROWS_AS(local_prediction(two, vec({1.0})), DimensionError);
}

TEST_CASE("fuse") {
  const FusionCenter center{0.01, 2};
  SUBCASE("prediction error") {
    const std::vector<RoundMessageUp> ups{{0, 0.2, 1.0}, {1, 0.3, 1.0}};
    const auto down = fuse(center, 1.0, ups);
    CHECK(down.prediction_error == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(down.alpha == 1.0 / 2.01);
  }
  SUBCASE("arrival order does not matter") {
    const std::vector<RoundMessageUp> a{{0, 0.2, 1.5}, {1, 0.3, 0.7}};
    const std::vector<RoundMessageUp> b{{1, 0.3, 0.7}, {0, 0.2, 1.5}};
    const auto da = fuse(center, 1.0, a);
    const auto db = fuse(center, 1.0, b);
    CHECK(da.prediction_error == db.prediction_error);
    CHECK(da.alpha == db.alpha);
  }
  SUBCASE("protocol errors name the node") {
    const std::vector<RoundMessageUp> missing{{0, 0.2, 1.0}};
    try {
      fuse(center, 1.0, missing);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.node() == 1);
    }
    const std::vector<RoundMessageUp> dup{{0, 0.2, 1.0}, {0, 0.2, 1.0}};
    CHECK_THROWS_AS(fuse(center, 1.0, dup), ProtocolError);
    const std::vector<RoundMessageUp> unknown{{0, 0.2, 1.0}, {5, 0.2, 1.0}};
    CHECK_THROWS_AS(fuse(center, 1.0, unknown), ProtocolError);
  }
  SUBCASE("zero noise with zero gains divides by zero") {
    const FusionCenter silent{0.0, 2};
    const std::vector<RoundMessageUp> ups{{0, 0.0, 0.0}, {1, 0.0, 0.0}};
    CHECK_THROWS_AS(fuse(silent, 1.0, ups), NumericError);
  }
}

TEST_CASE("local_update") {
  SUBCASE("scalar hand evaluation") {
    // theta+ = theta + 0.5 * 1 * 1 * 1; info+ = 1 + 1/100
    const auto node = scalar_node(0, 0.25, 1.0, 10.0);
    const auto next = local_update(node, vec({1.0}), RoundMessageDown{1.0, 0.5});
    CHECK(next.theta_hat[0] == 0.75);
    CHECK(next.info(0, 0) == doctest::Approx(1.01).epsilon(1e-15));
    CHECK(next.sigma(0, 0) == doctest::Approx(1.0 / 1.01).epsilon(1e-14));
  }
  SUBCASE("zero regressor") {
    Rng rng(1);
    auto node = random_nodes(rng, {3}).front();
    const auto next = local_update(node, Eigen::VectorXd::Zero(3), RoundMessageDown{2.0, 0.3});
    CHECK(next.theta_hat == node.theta_hat);
    CHECK(next.sigma == node.sigma);
  }
  SUBCASE("zero innovation freezes only the estimate") {
    Rng rng(2);
    auto node = random_nodes(rng, {3}).front();
    const Eigen::VectorXd phi = testutil::random_vector(rng, 3);
    const auto next = local_update(node, phi, RoundMessageDown{0.0, 0.3});
    CHECK(next.theta_hat == node.theta_hat);
    CHECK(next.sigma != node.sigma);
    const Eigen::MatrixXd expected =
        node.info + phi * phi.transpose() / (node.gamma * node.gamma);
    CHECK(testutil::rel_diff(next.info, expected) < 1e-14);
    CHECK(inverse_residual(next.info, next.sigma) < 1e-10);
  }
  SUBCASE("errors") {
    const auto node = scalar_node(0, 0.0, 1.0, 10.0);
    CHECK_THROWS_AS(local_update(node, vec({1.0, 2.0}), RoundMessageDown{1.0, 0.5}),
                    DimensionError);
    CHECK_THROWS_AS(local_update(node, vec({1e200}), RoundMessageDown{1e200, 0.5}), NumericError);
    CHECK_THROWS_AS(make_node(0, 1, 1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(make_node(0, 0, 1.0, 1.0), ParameterError);
  }
}

TEST_CASE("run_round equals hand composition on two scalar nodes") {
  std::vector<NodeState> nodes{scalar_node(0, 0.1, 2.0, 5.0), scalar_node(1, -0.4, 3.0, 7.0)};
  DistributedEstimator est(nodes, FusionCenter{0.04, 2});
  const std::vector<std::size_t> orders{1, 1};
  RegressorBank bank(orders);
  const double u[] = {1.5, -0.5};
  bank.push(u);
  const double y = 0.9;

  const double p0 = local_prediction(nodes[0], bank.window(0));
  const double p1 = local_prediction(nodes[1], bank.window(1));
  const std::vector<RoundMessageUp> ups{make_message(nodes[0], bank.window(0)),
                                        make_message(nodes[1], bank.window(1))};
  const auto down = fuse(FusionCenter{0.04, 2}, y, ups);
  const auto n0 = local_update(nodes[0], bank.window(0), down);
  const auto n1 = local_update(nodes[1], bank.window(1), down);

  // closed form for the scalar case
  CHECK(down.prediction_error == doctest::Approx(y - (0.1 * 1.5 + -0.4 * -0.5)).epsilon(1e-15));
  CHECK(down.alpha == doctest::Approx(1.0 / (0.04 + 2.0 * 2.25 + 3.0 * 0.25)).epsilon(1e-15));
  CHECK(p0 == ups[0].local_prediction);
  CHECK(p1 == ups[1].local_prediction);

  const auto trace = est.run_round(bank, y);
  CHECK(trace.k == 0);
  CHECK(trace.down.prediction_error == down.prediction_error);
  CHECK(trace.down.alpha == down.alpha);
  CHECK(est.nodes()[0].theta_hat == n0.theta_hat);
  CHECK(est.nodes()[1].theta_hat == n1.theta_hat);
  CHECK(est.nodes()[0].sigma == n0.sigma);
  CHECK(est.nodes()[1].sigma == n1.sigma);
  CHECK(est.rounds() == 1);
}

TEST_CASE("truth is a fixed point without noise") {
  Rng rng(4);
  const std::vector<std::size_t> orders{2, 3, 1};
  auto nodes = random_nodes(rng, orders);
  std::vector<Eigen::VectorXd> truth;
  for (auto& n : nodes) truth.push_back(n.theta_hat);
  MisoSystem sys({FirModule(truth[0]), FirModule(truth[1]), FirModule(truth[2])}, 0.0);
  DistributedEstimator est(nodes, FusionCenter{0.01, 3});
  RegressorBank bank(orders);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> u(3);
    for (auto& x : u) x = rng.normal();
    bank.push(u);
    const auto trace = est.run_round(bank, noise_free_output(sys, bank));
    CHECK(std::abs(trace.down.prediction_error) < 1e-12);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((est.nodes()[i].theta_hat - truth[i]).norm() < 1e-12);
  }
}

TEST_CASE("message accounting") {
  Rng rng(6);
  for (std::size_t m = 1; m <= 6; ++m) {
    const auto orders = testutil::random_orders(rng, m, 1, 4);
    DistributedEstimator est(orders, 100.0, 100.0, 0.01);
    const auto bank = random_bank(rng, orders, 3);
    const auto trace = est.run_round(bank, 1.0);
    CHECK(trace.ups.size() == m);
    CHECK(trace.upstream_scalars() == 2 * m);
    CHECK(trace.downstream_scalars() == 2);
  }
}

TEST_CASE("stack") {
  std::vector<NodeState> nodes{scalar_node(0, 1.0, 2.0, 10.0), make_node(1, 2, 3.0, 20.0)};
  nodes[1].theta_hat = vec({2.0, 3.0});
  const auto b = stack(nodes);
  CHECK(b.theta_hat == vec({1.0, 2.0, 3.0}));
  CHECK(b.sigma.diagonal() == vec({2.0, 3.0, 3.0}));
  CHECK(b.gamma_diag == vec({10.0, 20.0, 20.0}));
  CHECK(b.orders == std::vector<std::size_t>{1, 2});

  const std::vector<NodeState> scalars{scalar_node(0, 0.0, 2.0, 1.0), scalar_node(1, 0.0, 3.0, 1.0)};
  const auto d = stack(scalars);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected.diagonal() << 2.0, 3.0;
  CHECK(d.sigma == expected);

  Rng rng(9);
  const std::vector<std::size_t> orders{2, 3, 1};
  const auto block = stack(random_nodes(rng, orders));
  CHECK(block.sigma.block(0, 2, 2, 4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(block.sigma.block(2, 0, 3, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(block.sigma.block(5, 0, 1, 5).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd phi = testutil::random_vector(rng, 6);
  const Eigen::MatrixXd phi_b = block_outer(phi, orders);
  CHECK(phi_b.block(0, 2, 2, 4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(phi_b.block(2, 2, 3, 3) == phi.segment(2, 3) * phi.segment(2, 3).transpose());
}

TEST_CASE("round equals the dense stacked update") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto orders = testutil::random_orders(rng, m, 1, 4);
    const auto nodes = random_nodes(rng, orders);
    const double noise_var = 0.01 * rng.uniform01();
    DistributedEstimator est(nodes, FusionCenter{noise_var, m});
    const auto bank = random_bank(rng, orders, 5);
    const Eigen::VectorXd phi = bank.stacked();
    const auto before = est.block();
    const Eigen::VectorXd theta0 = testutil::random_vector(rng, phi.size());
    const double y = phi.dot(theta0);

    const auto trace = est.run_round(bank, y);
    const auto after = est.block();

    const double alpha = 1.0 / (noise_var + phi.dot(before.sigma * phi));
    const double eps = y - phi.dot(before.theta_hat);
    const Eigen::VectorXd dense = before.theta_hat + alpha * before.sigma * phi * eps;
    CHECK((after.theta_hat - dense).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd f = error_transition(before.sigma, phi, trace.down.alpha);
    const Eigen::VectorXd err_next = f * (before.theta_hat - theta0);
    CHECK((after.theta_hat - theta0 - err_next).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd gamma_inv_sq = before.gamma_diag.cwiseAbs2().cwiseInverse().asDiagonal();
    const Eigen::MatrixXd info_dense = before.info + gamma_inv_sq * block_outer(phi, orders);
    CHECK(testutil::rel_diff(after.info, info_dense) < 1e-12);

    // 0 < alpha_B < 2 / (phi^T Sigma_B phi)
    CHECK(trace.down.alpha > 0.0);
    CHECK(trace.down.alpha < 2.0 / phi.dot(before.sigma * phi));
  }
}

TEST_CASE("node processing order does not change results") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const auto orders = testutil::random_orders(rng, m, 1, 5);
    const auto nodes = random_nodes(rng, orders);
    DistributedEstimator a(nodes, FusionCenter{0.01, m});
    DistributedEstimator b(nodes, FusionCenter{0.01, m});
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    RegressorBank bank(orders);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> u(m);
      for (auto& x : u) x = rng.normal();
      bank.push(u);
      std::reverse(perm.begin(), perm.end());
      std::rotate(perm.begin(), perm.begin() + 1, perm.end());
      const double y = rng.normal();
      const auto ta = a.run_round(bank, y);
      const auto tb = b.run_round(bank, y, perm);
      REQUIRE(ta.down.prediction_error == tb.down.prediction_error);
      REQUIRE(ta.down.alpha == tb.down.alpha);
    }
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(a.nodes()[i].theta_hat == b.nodes()[i].theta_hat);
      CHECK(a.nodes()[i].sigma == b.nodes()[i].sigma);
      CHECK(a.nodes()[i].info == b.nodes()[i].info);
    }
  }
}

TEST_CASE("run_round rejects misaligned input") {
  const std::vector<std::size_t> orders{1, 2};
  DistributedEstimator est(orders, 1.0, 10.0, 0.01);
  const std::vector<std::size_t> wrong{1};
  CHECK_THROWS_AS(est.run_round(RegressorBank(wrong), 0.0), DimensionError);
  const std::vector<std::size_t> bad_perm{0, 0};
  const std::vector<std::size_t> dup_perm_bank{1, 2};
  CHECK_THROWS(est.run_round(RegressorBank(dup_perm_bank), 0.0, bad_perm));
}

TEST_CASE("round CSV layout") {
  std::ostringstream out;
  write_round_csv_header(out, 2);
  RoundTrace trace;
  trace.k = 3;
  trace.ups = {{0, 0.25, 1.5}, {1, -0.5, 2.0}};
  trace.down = {0.125, 0.5};
  write_round_csv_row(out, trace);
  CHECK(out.str() == "k,eps,alpha,pred_1,pred_2,gain_1,gain_2\n3,0.125,0.5,0.25,-0.5,1.5,2\n");
}
