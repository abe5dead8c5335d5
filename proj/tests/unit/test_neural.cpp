#include <gtest/gtest.h>

#include <sstream>

#include "bibc/neural.hpp"
#include "bibc/selftest.hpp"
#include "helpers.hpp"

using namespace bibc;
using namespace bibc::testing;

namespace {

MlpSpec small(Activation hidden, std::size_t side = 0, std::size_t side_layer = 0) {
  return {{6, 8, 8, 3}, hidden, Activation::identity, side, side_layer};
}

RealMatrix random_input(SeededRng& r, Eigen::Index rows, Eigen::Index cols) {
  RealMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = r.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST(Mlp, HiddenWidthIsNextPowerOfTwo) {
  EXPECT_EQ(hidden_width(142), 256u);
  EXPECT_EQ(hidden_width(152), 256u);
  EXPECT_EQ(hidden_width(990), 1024u);
  EXPECT_EQ(hidden_width(1016), 1024u);
  EXPECT_EQ(hidden_width(64), 64u);
  EXPECT_EQ(hidden_width(1), 1u);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  SeededRng r = rng_for(1);
  for (const auto& [name, spec] : selftest::network_shapes())
    EXPECT_LT(selftest::mlp_gradient_error(spec, r), 1e-4) << name;
  for (auto act : {Activation::tanh, Activation::relu, Activation::identity}) {
    EXPECT_LT(selftest::mlp_gradient_error(small(act), r), 1e-6);
    EXPECT_LT(selftest::mlp_gradient_error(small(act, 2, 2), r), 1e-6);
  }
}

TEST(Mlp, PredictMatchesForward) {
  SeededRng r = rng_for(2);
  Mlp net(small(Activation::tanh, 2, 1), r);
  const RealMatrix x = random_input(r, 6, 5), s = random_input(r, 2, 5);
  const RealMatrix p = net.predict(x, &s);
  EXPECT_EQ(p, net.forward(x, &s));
  EXPECT_EQ(p.rows(), 3);
  EXPECT_EQ(p.cols(), 5);
}

TEST(Mlp, ColumnsAreIndependent) {
  SeededRng r = rng_for(3);
  Mlp net(small(Activation::relu), r);
  const RealMatrix x = random_input(r, 6, 4);
  const RealMatrix all = net.predict(x);
  for (Eigen::Index j = 0; j < 4; ++j)
    EXPECT_LT((net.predict(x.col(j)) - all.col(j)).norm(), 1e-14);
}

TEST(Mlp, ContractViolations) {
  SeededRng r = rng_for(4);
  Mlp net(small(Activation::tanh, 2, 0), r);
  const RealMatrix x = random_input(r, 6, 2), s = random_input(r, 2, 2);
  EXPECT_THROW(net.backward(RealMatrix::Ones(3, 2)), StateError);
  EXPECT_THROW(net.predict(x), ParameterError);
  EXPECT_THROW(net.predict(random_input(r, 5, 2), &s), ParameterError);
  net.forward(x, &s);
  EXPECT_THROW(net.backward(RealMatrix::Ones(3, 1)), ParameterError);
  EXPECT_THROW(Mlp({{4}}, r), ParameterError);
  EXPECT_THROW(Mlp({{4, 2}, Activation::tanh, Activation::identity, 1, 3}, r), ParameterError);
  Mlp empty;
  EXPECT_THROW(empty.predict(x), StateError);
}

TEST(Mlp, InitializationBounds) {
  SeededRng r = rng_for(5);
  Mlp net({{10, 16, 4}, Activation::tanh, Activation::identity}, r, 1e-3);
  const auto& p = net.params();
  ASSERT_EQ(p.size(), 10 * 16 + 16 + 16 * 4 + 4);
  EXPECT_LE(p.head(176).cwiseAbs().maxCoeff(), 1.0 / std::sqrt(10.0));
  EXPECT_GT(p.head(176).cwiseAbs().maxCoeff(), 0.9 / std::sqrt(10.0));
  EXPECT_LE(p.tail(68).cwiseAbs().maxCoeff(), 1e-3 / 4.0);
}

TEST(Adam, FirstStepMovesEachParameterByLr) {
  Adam opt(3, {.lr = 0.01, .decay = 0.0});
  RealVector p = RealVector::Zero(3);
  RealVector g(3);
  g << 5.0, -0.2, 1e-3;
  opt.step(p, g);
  // bias-corrected first step is lr * sign(g) up to eps
  EXPECT_NEAR(p[0], -0.01, 1e-10);
  EXPECT_NEAR(p[1], 0.01, 1e-8);
  EXPECT_NEAR(p[2], -0.01, 1e-6);
}

TEST(Adam, LearningRateDecayModes) {
  RealVector p = RealVector::Zero(1), g = RealVector::Ones(1);
  Adam mul(1, {.lr = 1e-3, .decay = 1e-5, .mode = LrDecay::multiplicative});
  Adam lit(1, {.lr = 1e-3, .decay = 0.5, .mode = LrDecay::literal});
  for (int i = 0; i < 1000; ++i) mul.step(p, g);
  for (int i = 0; i < 3; ++i) lit.step(p, g);
  EXPECT_NEAR(mul.lr(), 1e-3 * std::pow(1.0 - 1e-5, 1000), 1e-15);
  EXPECT_NEAR(lit.lr(), 1e-3 / 8.0, 1e-18);
  EXPECT_EQ(mul.steps(), 1000u);
  EXPECT_THROW(Adam(1, {.lr = 0.0}), ParameterError);
  EXPECT_THROW(mul.step(p, RealVector::Ones(2)), ParameterError);
}

TEST(Adam, FitsLinearRegression) {
  SeededRng r = rng_for(6);
  Mlp net({{3, 1}, Activation::identity, Activation::identity}, r);
  Adam opt(net.parameter_count(), {.lr = 0.05, .decay = 0.0});
  const RealMatrix x = random_input(r, 3, 64);
  RealVector truth(3);
  truth << 0.5, -1.5, 2.0;
  const RealMatrix y = truth.transpose() * x;
  for (int it = 0; it < 2000; ++it) {
    net.zero_grad();
    const RealMatrix out = net.forward(x);
    net.backward((out - y) / 64.0);
    opt.step(net.params(), net.grads());
  }
  EXPECT_LT((net.params().head(3) - truth).norm(), 1e-3);
  EXPECT_LT(std::abs(net.params()[3]), 1e-3);
}

TEST(NetPair, TargetStartsEqualAndBlends) {
  SeededRng r = rng_for(7);
  NetPair pair(Mlp(small(Activation::tanh), r), {});
  EXPECT_EQ(pair.train.params(), pair.target.params());
  const RealVector before = pair.target.params();
  pair.train.params().array() += 1.0;
  pair.soft_update(0.25);
  EXPECT_LT((pair.target.params() - (before.array() + 0.25).matrix()).norm(), 1e-12);
  pair.hard_sync();
  EXPECT_EQ(pair.train.params(), pair.target.params());
  EXPECT_THROW(pair.soft_update(0.0), ParameterError);
  Mlp other(small(Activation::relu, 1), r);
  EXPECT_THROW(soft_update(other, pair.train, 0.5), ParameterError);
}

TEST(NetPair, ApplyGradientsClearsGradients) {
  SeededRng r = rng_for(8);
  NetPair pair(Mlp(small(Activation::tanh), r), {});
  pair.train.forward(random_input(r, 6, 2));
  pair.train.backward(RealMatrix::Ones(3, 2));
  const RealVector before = pair.train.params();
  pair.apply_gradients();
  EXPECT_GT((pair.train.params() - before).norm(), 0.0);
  EXPECT_EQ(pair.train.grads().norm(), 0.0);
}

TEST(Checkpoint, BitExactRoundTrip) {
  SeededRng r = rng_for(9);
  Mlp a(small(Activation::tanh, 2, 1), r), b(small(Activation::tanh, 2, 1), r);
  ASSERT_NE(a.params(), b.params());
  std::stringstream ss;
  save_checkpoint(a, ss);
  load_checkpoint(b, ss);
  EXPECT_EQ(a.params(), b.params());
}

TEST(Checkpoint, LittleEndianHeader) {
  SeededRng r = rng_for(10);
  Mlp a({{5, 7, 2}, Activation::tanh, Activation::identity}, r);
  std::stringstream ss;
  save_checkpoint(a, ss);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u * (1 + 3 + 2 + a.parameter_count()));
  EXPECT_EQ(bytes[0], 2);
  EXPECT_EQ(bytes[8], 5);
  EXPECT_EQ(bytes[16], 7);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(bytes[i], 0);
  double first;
  std::uint64_t raw = 0;
  for (int i = 0; i < 8; ++i)
    raw |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[48 + i])) << (8 * i);
  std::memcpy(&first, &raw, 8);
  EXPECT_EQ(first, a.params()[0]);
}

TEST(Checkpoint, ShapeMismatchRejected) {
  SeededRng r = rng_for(11);
  Mlp a(small(Activation::tanh), r), b({{6, 8, 3}, Activation::tanh, Activation::identity}, r);
  Mlp c(small(Activation::tanh, 2), r);
  std::stringstream s1, s2, s3;
  save_checkpoint(a, s1);
  EXPECT_THROW(load_checkpoint(b, s1), ParameterError);
  save_checkpoint(a, s2);
  EXPECT_THROW(load_checkpoint(c, s2), ParameterError);
  s3 << "abc";
  EXPECT_THROW(load_checkpoint(a, s3), ParameterError);
}
