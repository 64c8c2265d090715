#include <gtest/gtest.h>

#include "modarc/error.hpp"
#include "modarc/neural.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace modarc {
namespace {

TEST(Forward, ZeroNetOutputsZero) {
  DenseNet net(oracle::gradcheck_topology(), 1);
  net.params().for_each_layer([](DenseLayer& l) {
    l.weight.setZero();
    l.bias.setZero();
  });
  for (const auto& [name, out] : net.forward(Eigen::VectorXd::Random(6))) {
    EXPECT_TRUE(out.isZero()) << name;
  }
}

TEST(Forward, IdentityLayerPassesInputThrough) {
  DenseNet net(Topology{3, {}, {{"y", 0, 3}}}, 1);
  net.params().heads[0][0].weight = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd x(Eigen::Vector3d(-1.5, 0.25, 7.0));
  EXPECT_EQ(net.forward(x).at("y"), x);
}

TEST(Forward, PureAcrossRepeatedCalls) {
  DenseNet net(oracle::gradcheck_topology(), 9);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1, 1);
  const auto first = net.forward(x);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(net.forward(x), first);
}

TEST(Forward, WidthMismatchIsShapeError) {
  DenseNet net(oracle::gradcheck_topology(), 9);
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(5)), ShapeError);
}

TEST(Init, SeededInitIsBitwiseReproducible) {
  DenseNet a(oracle::gradcheck_topology(), 42), b(oracle::gradcheck_topology(), 42);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), DenseNet(oracle::gradcheck_topology(), 43).hash());
  a.params().for_each_layer([](const DenseLayer& l) { EXPECT_TRUE(l.bias.isZero()); });
}

TEST(Backward, MatchesFiniteDifferences) {
  const Topology t = oracle::gradcheck_topology();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DenseNet net(t, seed);
    const auto batch = oracle::random_batch(t, 7, seed + 100);
    for (const auto& p : oracle::gradient_probes(net, batch, 8, seed)) {
      EXPECT_LE(p.rel_error, 1e-4) << p.analytic << " vs " << p.numeric;
    }
  }
}

TEST(Backward, PerfectTargetsGiveZeroLossAndGradient) {
  const Topology t = oracle::gradcheck_topology();
  DenseNet net(t, 3);
  auto batch = oracle::random_batch(t, 5, 4);
  batch.targets = net.forward_batch(batch.inputs);
  const auto r = backward(net, batch);
  EXPECT_EQ(r.loss, 0.0);
  r.gradients.for_each_layer([](const DenseLayer& l) {
    EXPECT_TRUE(l.weight.isZero());
    EXPECT_TRUE(l.bias.isZero());
  });
}

TEST(Backward, DoubledResidualQuadruplesLoss) {
  const Topology t = oracle::gradcheck_topology();
  DenseNet net(t, 3);
  auto batch = oracle::random_batch(t, 5, 4);
  const auto out = net.forward_batch(batch.inputs);
  const double base = backward(net, batch).loss;
  for (std::size_t h = 0; h < out.size(); ++h) {
    batch.targets[h] = out[h] + 2.0 * (batch.targets[h] - out[h]);
  }
  EXPECT_NEAR(backward(net, batch).loss, 4.0 * base, 1e-9 * base);
}

TEST(Backward, MaskedEntriesCarryNoGradient) {
  DenseNet net(Topology{2, {}, {{"q", 0, 3}}}, 1);
  TrainBatch b;
  b.inputs = Eigen::MatrixXd::Ones(1, 2);
  b.targets = {Eigen::MatrixXd::Constant(1, 3, 5.0)};
  b.weights = {Eigen::MatrixXd::Zero(1, 3)};
  b.weights[0](0, 1) = 1.0;
  const auto r = backward(net, b);
  const auto& g = r.gradients.heads[0][0];
  EXPECT_EQ(g.bias(0), 0.0);
  EXPECT_EQ(g.bias(2), 0.0);
  EXPECT_NE(g.bias(1), 0.0);
}

TEST(Backward, NonFiniteTargetIsNumericError) {
  const Topology t = oracle::gradcheck_topology();
  DenseNet net(t, 3);
  auto batch = oracle::random_batch(t, 2, 4);
  batch.targets[0](0, 0) = std::nan("");
  EXPECT_THROW(backward(net, batch), NumericError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  DenseNet net(oracle::gradcheck_topology(), 5);
  const auto before = net.hash();
  AdamState st = AdamState::for_net(net);
  apply_update(net, net.params().zeros_like(), st);
  EXPECT_EQ(net.hash(), before);
  EXPECT_EQ(st.steps, 1);
}

TEST(Adam, StepsTowardQuadraticMinimum) {
  // loss = (w - 3)^2 via a single bias parameter fed a zero input.
  DenseNet net(Topology{1, {}, {{"y", 0, 1}}}, 1);
  TrainBatch b;
  b.inputs = Eigen::MatrixXd::Zero(1, 1);
  b.targets = {Eigen::MatrixXd::Constant(1, 1, 3.0)};
  AdamState st = AdamState::for_net(net);
  const double before = net.params().heads[0][0].bias(0);
  apply_update(net, backward(net, b).gradients, st);
  EXPECT_GT(net.params().heads[0][0].bias(0), before);
}

TEST(Adam, RecoversLinearSlope) {
  DenseNet net(Topology{1, {}, {{"y", 0, 1}}}, 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  AdamState st = AdamState::for_net(net);
  const AdamConfig cfg{0.01};
  for (int i = 0; i < 500; ++i) {
    TrainBatch b;
    b.inputs = Eigen::MatrixXd::NullaryExpr(16, 1, [&] { return u(rng); });
    b.targets = {2.0 * b.inputs};
    apply_update(net, backward(net, b).gradients, st, cfg);
  }
  EXPECT_NEAR(net.params().heads[0][0].weight(0, 0), 2.0, 0.05);
}

TEST(Adam, AverageLossDropsOnFixedDataset) {
  const Topology t = oracle::gradcheck_topology();
  DenseNet net(t, 8);
  const auto data = oracle::random_batch(t, 64, 9);
  const double initial = backward(net, data).loss;
  AdamState st = AdamState::for_net(net);
  for (int i = 0; i < 200; ++i) apply_update(net, backward(net, data).gradients, st);
  EXPECT_LT(backward(net, data).loss, initial);
}

TEST(Checkpoint, RoundTripAndTopologyValidation) {
  const auto dir = testing::scratch_dir();
  DenseNet net(oracle::gradcheck_topology(), 77);
  save_checkpoint(dir / "net.bin", net);
  const DenseNet back = load_checkpoint(dir / "net.bin", oracle::gradcheck_topology());
  EXPECT_EQ(back.hash(), net.hash());
  EXPECT_EQ(back.topology(), net.topology());
  EXPECT_THROW(load_checkpoint(dir / "net.bin", Topology{6, {8}, {{"a", 5, 2}}}), ShapeError);
  std::ofstream(dir / "junk.bin") << "nope";
  EXPECT_THROW(load_checkpoint(dir / "junk.bin"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "absent.bin"), IoError);
}

}  // namespace
}  // namespace modarc
