#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace phzero;

namespace {

std::string corpus(const std::string& name) { return std::string(CORPUS_DIR) + "/" + name; }

PHSystem load_uniform(const std::string& name) { return std::get<PHSystem>(load_system(corpus(name))); }

RowVector unit(Index n, Index i) { return RowVector::Unit(n, i); }

/// Random SISO system with sparse integer boundary data, so that singular
/// [K0; Ky] and nontrivial V* occur often.
PHSystem sparse_siso(Rng& rng, Index n) {
  PHSystem s;
  s.n = n;
  s.m = 1;
  for (int tries = 0;; ++tries) {
    s.K0 = integer_matrix(rng, n - 1, n, -2, 2, 0.4);
    s.L0 = integer_matrix(rng, n - 1, n, -2, 2, 0.3);
    s.Ku = integer_matrix(rng, 1, n, -2, 2, 0.5);
    s.Lu = integer_matrix(rng, 1, n, -2, 2, 0.3);
    s.Ky = integer_matrix(rng, 1, n, -2, 2, 0.3);
    s.Ly = integer_matrix(rng, 1, n, -2, 2, 0.5);
    if (check_well_posed(s) && !scan_zeros(s).identically_zero) return s;
  }
}

}  // namespace

TEST(Vstar, SplitExample) {
  const PHSystem s = load_uniform("ex52.json");
  const Subspace v = vstar_discrete(s);
  ASSERT_EQ(v.dim(), 2);
  const Vector normal = Eigen::Vector3d(1, 1, 0);
  EXPECT_LE((normal.transpose() * v.basis()).norm(), 1e-14);
  EXPECT_TRUE(v.same_as(vstar_from_quadruple(discrete_reduce(s))));
}

TEST(Vstar, InvertibleStackedBoundaryGivesFullSpace) {
  Rng rng(109);
  for (int t = 0; t < 20; ++t) {
    const PHSystem s = gaussian_system(rng, 2 + t % 5, 1 + t % 2);
    EXPECT_EQ(vstar_discrete(s).dim(), s.n);
  }
}

TEST(Vstar, IsAFixedPointAndOutputNulling) {
  Rng rng(113);
  for (int t = 0; t < 40; ++t) {
    const PHSystem s = sparse_siso(rng, 3 + t % 4);
    const Subspace v = vstar_discrete(s);
    const Matrix e = -s.K_stacked(), f = s.L_stacked();
    EXPECT_TRUE(subspace_intersect(v, preimage(f, image(e, v))).same_as(v));
    const DiscreteSystem d = discrete_reduce(s);
    EXPECT_TRUE(v.same_as(vstar_from_quadruple(d)));
    const NullingFriend nf = nulling_friend(d, v);
    EXPECT_LE(nf.invariance_residual, 1e-10);
    EXPECT_LE(nf.output_residual, 1e-10);
  }
}

TEST(Friend, VanishesOnComplement) {
  const PHSystem s = load_uniform("ex52.json");
  const DiscreteSystem d = discrete_reduce(s);
  const Subspace v = vstar_discrete(s);
  const NullingFriend nf = nulling_friend(d, v);
  EXPECT_LE((nf.Fd * v.complement().basis()).norm(), 1e-14);
}

TEST(Friend, RejectsNonNullingSubspace) {
  const PHSystem s = load_uniform("ex52.json");
  EXPECT_THROW(nulling_friend(discrete_reduce(s), Subspace::full(3)), ConsistencyError);
}

TEST(Reduce, FullStatePathWhenStackedBoundaryIsInvertible) {
  Rng rng(127);
  for (int t = 0; t < 10; ++t) {
    const PHSystem s = gaussian_system(rng, 4, 2);
    const ZeroDynamicsResult r = reduce(s);
    EXPECT_TRUE(r.full_state);
    EXPECT_EQ(r.k, 4);
    EXPECT_EQ(r.constraints.rows(), 0);
    // The input that keeps y = 0 solves the stacked boundary equations.
    const Matrix w0 = -s.K_stacked().partialPivLu().solve(s.L_stacked());
    EXPECT_LE((r.Kw * w0 + r.Lw).norm(), 1e-9 * std::max(1.0, w0.norm()));
  }
}

TEST(Reduce, SplitExampleMatchesPrintedResult) {
  const PHSystem s = load_uniform("ex52.json");
  const ZeroDynamicsResult r = reduce(s);
  EXPECT_FALSE(r.full_state);
  EXPECT_EQ(r.k, 2);
  ASSERT_EQ(r.transform_chain.size(), 1u);
  EXPECT_LE((r.transform_chain[0] - Matrix{{2, 0, 1}, {0, 1, -1}, {1, 1, 0}}).norm(), 1e-12);
  EXPECT_LE((r.Kw - Matrix{{0, -1}, {-1, -1}}).norm(), 1e-12);
  EXPECT_LE((r.Lw - Matrix{{1, 1}, {1, 2}}).norm(), 1e-12);
  ASSERT_EQ(r.constraints.rows(), 1);
  EXPECT_LE((r.constraints - Matrix{{1, 1, 0}} / std::sqrt(2.0)).norm(), 1e-14);
  for (double res : r.identity_residuals) EXPECT_LE(res, 1e-9);
  // Zeroing input u = z3(0, t).
  EXPECT_LE(zeroing_residual_mod_constraints(r, unit(3, 2), RowVector::Zero(3)), 1e-10);
}

TEST(Reduce, CyclicExampleNeedsTwoIterations) {
  const PHSystem s = load_uniform("ex53_reconciled.json");
  const ZeroDynamicsResult r = reduce(s);
  EXPECT_EQ(r.k, 1);
  ASSERT_EQ(r.transform_chain.size(), 2u);
  EXPECT_LE((r.transform_chain[0] - Matrix{{-1, 1, 0}, {1, 0, -1}, {1, 0, 0}}).norm(), 1e-12);
  EXPECT_LE((r.transform_chain[1] - Matrix{{0, 1}, {1, 0}}).norm(), 1e-12);
  EXPECT_LE((r.Kw - Matrix{{1}}).norm(), 1e-12);
  EXPECT_LE(r.Lw.norm(), 1e-12);
  const Subspace span = Subspace::span(r.constraints.transpose());
  EXPECT_TRUE(span.same_as(Subspace::span(Matrix::Identity(3, 3).leftCols(2))));
  // Zeroing input u = z3(1, t).
  EXPECT_LE(zeroing_residual_mod_constraints(r, RowVector::Zero(3), unit(3, 2)), 1e-10);
}

TEST(Reduce, TenChannelExample) {
  const PHSystem s = load_uniform("ex54.json");
  const ZeroDynamicsResult r = reduce(s);
  EXPECT_EQ(r.k, 9);
  EXPECT_LE((r.Kw - Matrix::Identity(9, 9)).norm(), 1e-12);
  EXPECT_LE(r.Lw.norm(), 1e-12);
  RowVector c = RowVector::Zero(10);
  c(1) = 1.0;
  c(3) = -2.0;
  EXPECT_LE((r.constraints - c / std::sqrt(5.0)).norm(), 1e-14);
  // Printed transformation, rounded to four digits. Rows 4..8 depend on the
  // elimination order among the trailing pivots and are not compared.
  Matrix tp = Matrix::Zero(10, 10);
  tp(0, 0) = -5, tp(0, 5) = 2;
  tp(1, 1) = -1, tp(1, 2) = 1;
  tp(2, 2) = -2, tp(2, 4) = -5, tp(2, 7) = 1;
  tp(3, 4) = -2.5, tp(3, 7) = 0.5, tp(3, 8) = -3;
  tp(4, 8) = -4, tp(4, 9) = 6;
  tp(5, 5) = 5.4, tp(5, 8) = -1;
  tp(6, 6) = 3, tp(6, 8) = 0.1852;
  tp(7, 7) = 4, tp(7, 8) = -0.1481;
  tp(8, 8) = 0.1852;
  tp(9, 1) = 1, tp(9, 3) = -2;
  ASSERT_EQ(r.transform_chain.size(), 1u);
  for (Index i : {0, 1, 2, 3, 9}) EXPECT_LE((r.transform_chain[0].row(i) - tp.row(i)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s.Ku * r.transform_chain[0] - tp.row(3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Reduce, TenChannelFunctionalOnZeroDynamics) {
  const PHSystem s = load_uniform("ex54.json");
  const ZeroDynamicsResult r = reduce(s);
  RowVector a0 = RowVector::Zero(10);
  a0(4) = -2.5, a0(7) = 0.5, a0(8) = -3;
  EXPECT_LE(zeroing_residual_on_zero_dynamics(r, a0, RowVector::Zero(10)), 1e-8);
}

TEST(Reduce, RejectsMultiInputWithSingularStackedBoundary) {
  PHSystem s;
  s.n = 3;
  s.m = 2;
  s.K0 = Matrix{{1, 0, 0}};
  s.L0 = Matrix{{0, 1, 0}};
  s.Ku = Matrix{{0, 1, 0}, {0, 0, 1}};
  s.Lu = Matrix::Zero(2, 3);
  s.Ky = Matrix::Zero(2, 3);
  s.Ly = Matrix{{1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(reduce(s), PreconditionError);
}

TEST(Reduce, IdenticallyZeroTransferExhaustsScan) {
  Rng rng(131);
  PHSystem s = gaussian_system(rng, 3, 1);
  s.Ky.setZero();
  s.Ly.setZero();
  EXPECT_THROW(reduce(s), PreconditionError);
}

TEST(Reduce, DimensionAgreesWithVstarOnSparseSystems) {
  Rng rng(137);
  for (int t = 0; t < 60; ++t) {
    const PHSystem s = sparse_siso(rng, 3 + t % 5);
    const ZeroDynamicsResult r = reduce(s);
    const Subspace v = vstar_discrete(s);
    EXPECT_EQ(r.k, v.dim());
    if (r.constraints.rows() > 0 && v.dim() > 0) {
      EXPECT_LE((r.constraints * v.basis()).cwiseAbs().maxCoeff(), 1e-9);
    }
    for (Index i = 0; i < r.constraints.rows(); ++i) EXPECT_NEAR(r.constraints.row(i).norm(), 1.0, 1e-12);
  }
}

TEST(Reduce, ConstraintRowsHavePositiveLeadingEntry) {
  Rng rng(139);
  for (int t = 0; t < 30; ++t) {
    const ZeroDynamicsResult r = reduce(sparse_siso(rng, 4));
    for (Index i = 0; i < r.constraints.rows(); ++i) {
      Index j = 0;
      while (j < r.n && std::abs(r.constraints(i, j)) <= 1e-14) ++j;
      ASSERT_LT(j, r.n);
      EXPECT_GT(r.constraints(i, j), 0.0);
    }
  }
}

TEST(Reduce, IsDeterministic) {
  const PHSystem s = load_uniform("ex54.json");
  EXPECT_EQ(reduce(s), reduce(s));
}

TEST(CrossCheck, CorpusSystems) {
  for (const char* name : {"ex52.json", "ex53_reconciled.json", "ex54.json"}) {
    SCOPED_TRACE(name);
    const CrossCheckReport rep = cross_check(load_uniform(name));
    EXPECT_TRUE(rep.ok()) << (rep.failures.empty() ? "" : rep.failures.front());
  }
}

TEST(CrossCheck, ReducedRootsMatchTransmissionZerosOnSparseSystems) {
  Rng rng(149);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const PHSystem s = sparse_siso(rng, 3 + t % 3);
    const CrossCheckReport rep = cross_check(s);
    EXPECT_TRUE(rep.ok()) << (rep.failures.empty() ? "" : rep.failures.front());
    checked += !rep.reduced_roots.empty();
  }
  EXPECT_GT(checked, 0);
}
