#include "deskq/channel.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace deskq {
namespace {

using test::rng;

TEST(SuperOp, IdentityChannelLeavesInputUnchanged) {
  auto g = rng(31);
  Matrix x = test::random_matrix(g, 3, 3);
  SuperOp id = SuperOp::identity_map(3);
  EXPECT_LE(max_abs(id.apply(x) - x), 1e-14);
  EXPECT_TRUE(id.is_trace_preserving());
}

TEST(SuperOp, DepolarizingSendsToMaximallyMixed) {
  auto g = rng(32);
  Matrix x = test::random_density(g, 2);
  SuperOp dep = depolarizing_channel(2, 1.0);
  EXPECT_LE(max_abs(dep.apply(x) - 0.5 * Matrix::Identity(2, 2) * x.trace()), 1e-12);
  EXPECT_TRUE(dep.is_trace_preserving(1e-9));
}

TEST(SuperOp, ChoiPathAgreesWithKrausPath) {
  auto g = rng(33);
  SuperOp ch = test::random_channel(g, 3);
  Matrix x = test::random_matrix(g, 3, 3);
  // Choi path: Phi(X) = Tr_X( J (X (x) I) )
  Matrix j = ch.choi();
  Matrix lifted = j * kron(x, Matrix::Identity(3, 3));
  Matrix via_choi = partial_trace(lifted, 3, 3, 1);
  EXPECT_LE(max_abs(via_choi - ch.apply(x)), 1e-9);
}

TEST(SuperOp, ChoiRoundTrip) {
  auto g = rng(34);
  SuperOp ch = test::random_channel(g, 2, 4);
  SuperOp back = SuperOp::from_choi(ch.choi(), 2, 2);
  Matrix x = test::random_matrix(g, 2, 2);
  EXPECT_LE(max_abs(back.apply(x) - ch.apply(x)), 1e-10);
}

TEST(SuperOp, ChoiHermitianForHermiticityPreservingMaps) {
  auto g = rng(35);
  SuperOp a = test::random_channel(g, 2);
  SuperOp b = test::random_channel(g, 2);
  SuperOp diff = a.difference_with(b);
  EXPECT_TRUE(is_hermitian(diff.choi(), 1e-10));
}

TEST(SuperOp, AdjointDualityOnRandomPairs) {
  auto g = rng(36);
  SuperOp ch = test::random_channel(g, 3);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix x = test::random_hermitian(g, 3, 1.0);
    Matrix y = test::random_hermitian(g, 3, 1.0);
    const Complex lhs = hs_inner(ch.apply(x), y);
    const Complex rhs = hs_inner(x, ch.apply_adjoint(y));
    EXPECT_LE(std::abs(lhs - rhs), 1e-9);
  }
}

TEST(SuperOp, TracePreservationUnderApply) {
  auto g = rng(37);
  SuperOp ch = test::random_channel(g, 4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix x = test::random_matrix(g, 4, 4);
    EXPECT_LE(std::abs(ch.apply(x).trace() - x.trace()), 1e-9);
  }
}

TEST(SuperOp, PartialTraceMapMatchesDirectComputation) {
  auto g = rng(38);
  Matrix rho = test::random_density(g, 8);
  RegisterSplit split({2, 2, 2});
  SuperOp tr = partial_trace_map(split, {0, 2});
  EXPECT_LE(max_abs(tr.apply(rho) - partial_trace(rho, split, {0, 2})), 1e-12);
  EXPECT_TRUE(tr.is_trace_preserving(1e-10));
}

TEST(SuperOp, EmbedOnFactorsActsLocally) {
  auto g = rng(39);
  SuperOp ch = test::random_channel(g, 2);
  RegisterSplit split({2, 2});
  SuperOp lifted = embed_map_on_factors(ch, split, {1});
  Matrix rho = test::random_density(g, 2);
  Matrix sigma = test::random_density(g, 2);
  Matrix joint = kron(rho, sigma);
  EXPECT_LE(max_abs(lifted.apply(joint) - kron(rho, ch.apply(sigma))), 1e-11);
}

TEST(SuperOp, EmbedOnFirstFactorWithPermutation) {
  auto g = rng(40);
  SuperOp ch = test::random_channel(g, 2);
  RegisterSplit split({2, 3});
  SuperOp lifted = embed_map_on_factors(ch, split, {0});
  Matrix rho = test::random_density(g, 2);
  Matrix sigma = test::random_density(g, 3);
  EXPECT_LE(max_abs(lifted.apply(kron(rho, sigma)) - kron(ch.apply(rho), sigma)), 1e-11);
}

TEST(SuperOp, ComposedWithMatchesSequentialApplication) {
  auto g = rng(41);
  SuperOp a = test::random_channel(g, 2);
  SuperOp b = test::random_channel(g, 2);
  Matrix x = test::random_matrix(g, 2, 2);
  EXPECT_LE(max_abs(a.composed_with(b).apply(x) - a.apply(b.apply(x))), 1e-11);
}

}  // namespace
}  // namespace deskq
