#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace phzero;

namespace {

std::string corpus(const std::string& name) { return std::string(CORPUS_DIR) + "/" + name; }

MultiSpeedSystem random_multispeed(Rng& rng, std::vector<RationalSpeed> speeds, Index m) {
  MultiSpeedSystem s;
  s.n = static_cast<Index>(speeds.size());
  s.m = m;
  s.speeds = std::move(speeds);
  s.K = gaussian_matrix(rng, s.n, s.n);
  s.L = gaussian_matrix(rng, s.n, s.n);
  s.Ky = gaussian_matrix(rng, m, s.n);
  s.Ly = gaussian_matrix(rng, m, s.n);
  return s;
}

std::vector<Vector> random_channels(Rng& rng, const MultiSpeedSystem& s, Index grid_n) {
  const auto r = oracle::segments_brute(s);
  std::vector<Vector> out;
  for (Index i = 0; i < s.n; ++i) out.push_back(gaussian_matrix(rng, r[static_cast<std::size_t>(i)] * grid_n, 1));
  return out;
}

/// Output of the split system driven by u (one column per substep).
Matrix split_output(const MultiSpeedSystem& s, const std::vector<Vector>& channels, const Matrix& u, Index grid_n) {
  const PHSystem split = split_commensurate(s);
  const Matrix z0 = split_profile(s, channels, grid_n);
  const Index steps = u.cols() / grid_n;
  const auto input = [&](Index step, const Matrix&) { return Matrix(u.middleCols(step * grid_n, grid_n)); };
  return oracle::flatten_steps(simulate(split, z0, input, steps).outputs, s.m);
}

RawConstantSystem raw_with_spectrum(Rng& rng, const Vector& lambda, Index m) {
  const Index n = lambda.size();
  const Matrix g = gaussian_matrix(rng, n, n);
  RawConstantSystem raw;
  raw.n = n;
  raw.H = g * g.transpose() + Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(raw.H);
  const Matrix hinv = es.operatorInverseSqrt();
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, n, n));
  const Matrix q = qr.householderQ();
  raw.P1 = hinv * q * lambda.asDiagonal() * q.transpose() * hinv;
  raw.P1 = 0.5 * (raw.P1 + raw.P1.transpose()).eval();
  raw.WB1 = gaussian_matrix(rng, n - m, 2 * n);
  raw.WB2 = gaussian_matrix(rng, m, 2 * n);
  raw.WC = gaussian_matrix(rng, m, 2 * n);
  return raw;
}

}  // namespace

TEST(Rationalize, SimpleFractions) {
  Rational r;
  ASSERT_TRUE(rationalize(0.5, r));
  EXPECT_EQ(r.num, 1);
  EXPECT_EQ(r.den, 2);
  ASSERT_TRUE(rationalize(1.0 / 3.0, r));
  EXPECT_EQ(r.num, 1);
  EXPECT_EQ(r.den, 3);
  ASSERT_TRUE(rationalize(7.0 / 4.0, r));
  EXPECT_EQ(r.num, 7);
  EXPECT_EQ(r.den, 4);
  EXPECT_FALSE(rationalize(std::sqrt(2.0), r, 1e-10, 100));
  EXPECT_FALSE(rationalize(-1.0, r));
}

TEST(Diagonalize, SwapMatrixGivesOpposingUnitSpeeds) {
  RawConstantSystem raw;
  raw.n = 2;
  raw.P1 = Matrix{{0, 1}, {1, 0}};
  raw.H = Matrix::Identity(2, 2);
  raw.WB1 = Matrix{{1, 0, 0, 0}};
  raw.WB2 = Matrix{{0, 0, 1, 0}};
  raw.WC = Matrix{{0, 1, 0, 0}};
  const auto [dc, ms] = diagonalize_constant(raw);
  EXPECT_NEAR(dc.Delta(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(dc.Delta(1, 1), -1.0, 1e-14);
  EXPECT_EQ(dc.k_pos, 1);
  EXPECT_EQ(dc.l_neg, 1);
  EXPECT_LE((dc.S * raw.P1 * raw.H * dc.S.inverse() - dc.Delta).norm(), 1e-12);
  EXPECT_EQ(ms.speeds[0], RationalSpeed(1, 1, 1));
  EXPECT_EQ(ms.speeds[1], RationalSpeed(1, 1, -1));
  EXPECT_NEAR(ms.speed_scale, 1.0, 1e-14);
}

TEST(Diagonalize, RandomSpdWithCommensurateSpectrum) {
  Rng rng(31);
  Vector lambda(4);
  lambda << 0.5, -1.0, 2.0, -1.5;
  for (int t = 0; t < 10; ++t) {
    const RawConstantSystem raw = raw_with_spectrum(rng, lambda, 2);
    const auto [dc, ms] = diagonalize_constant(raw);
    const Matrix p1h = raw.P1 * raw.H;
    EXPECT_LE((dc.S * p1h - dc.Delta * dc.S).norm(), 1e-10 * norm2(p1h));
    EXPECT_EQ(dc.k_pos, 2);
    EXPECT_EQ(dc.l_neg, 2);
    for (Index i = 0; i + 1 < 4; ++i) EXPECT_GE(dc.Delta(i, i), dc.Delta(i + 1, i + 1));
    EXPECT_NEAR(ms.speed_scale, 0.5, 1e-12);
    std::vector<RationalSpeed> want{{4, 1, 1}, {1, 1, 1}, {2, 1, -1}, {3, 1, -1}};
    EXPECT_EQ(ms.speeds, want);

    // Boundary rows act on [(Hx)(1); (Hx)(0)] with x = S⁻¹z.
    const Vector z0 = gaussian_matrix(rng, 4, 1), z1 = gaussian_matrix(rng, 4, 1);
    const Matrix to_hx = raw.H * dc.S.inverse();
    Vector trace(8);
    trace << to_hx * z1, to_hx * z0;
    const Vector lhs = ms.K * z0 + ms.L * z1;
    const Vector rhs = vstack(raw.WB1, raw.WB2) * trace;
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
    EXPECT_LE((ms.Ky * z0 + ms.Ly * z1 - raw.WC * trace).norm(), 1e-10 * std::max(1.0, trace.norm()));
  }
}

TEST(Diagonalize, Rejections) {
  Rng rng(37);
  Vector lambda(2);
  lambda << 1.0, -1.0;
  RawConstantSystem raw = raw_with_spectrum(rng, lambda, 1);
  RawConstantSystem bad = raw;
  bad.P1(0, 1) += 1.0;
  EXPECT_THROW(diagonalize_constant(bad), PreconditionError);
  bad = raw;
  bad.H = -raw.H;
  EXPECT_THROW(diagonalize_constant(bad), PreconditionError);
  bad = raw;
  bad.WB2 = Matrix::Zero(1, 3);
  EXPECT_THROW(diagonalize_constant(bad), ShapeError);
  lambda << 1.0, 0.0;
  EXPECT_THROW(diagonalize_constant(raw_with_spectrum(rng, lambda, 1)), PreconditionError);
  lambda << 1.0, -(1.0 + 1e-8);
  EXPECT_THROW(diagonalize_constant(raw_with_spectrum(rng, lambda, 1)), PreconditionError);
}

TEST(Grid, CommonTravelTime) {
  MultiSpeedSystem s;
  s.n = 2;
  s.speeds = {RationalSpeed(2, 1), RationalSpeed(3, 1)};
  const CommensurateGrid g = commensurate_grid(s);
  EXPECT_EQ(g.g.num, 1);
  EXPECT_EQ(g.g.den, 6);
  EXPECT_EQ(g.r, (std::vector<Index>{3, 2}));
  EXPECT_DOUBLE_EQ(g.p, 1.0 / 6.0);
  EXPECT_EQ(g.r, oracle::segments_brute(s));

  s.speeds = {RationalSpeed(1, 1), RationalSpeed(1, 3)};
  const CommensurateGrid g2 = commensurate_grid(s);
  EXPECT_EQ(g2.r, (std::vector<Index>{1, 3}));
  EXPECT_EQ(g2.total(), 4);
  EXPECT_DOUBLE_EQ(g2.p, 1.0);
}

TEST(Grid, MatchesBruteForceOnRandomSpeeds) {
  Rng rng(41);
  std::uniform_int_distribution<int> pick(1, 6);
  for (int t = 0; t < 200; ++t) {
    MultiSpeedSystem s;
    s.n = 3;
    for (int i = 0; i < 3; ++i) s.speeds.emplace_back(pick(rng), pick(rng));
    EXPECT_EQ(commensurate_grid(s).r, oracle::segments_brute(s));
  }
}

TEST(Grid, OverflowIsRejected) {
  MultiSpeedSystem s;
  s.n = 2;
  s.speeds = {RationalSpeed(1, 1), RationalSpeed(1000003, 1)};
  EXPECT_THROW(commensurate_grid(s), PreconditionError);
}

TEST(Split, TwoSpeedExampleMatchesPrintedMatrices) {
  const auto ms = std::get<MultiSpeedSystem>(load_system(corpus("ex31.json")));
  const auto printed = std::get<PHSystem>(load_system(corpus("ex52.json")));
  const PHSystem split = split_commensurate(ms);
  EXPECT_EQ(split, printed);
  EXPECT_EQ(to_uniform(ms), printed);
}

TEST(Split, SpeedsOneAndOneThirdGiveFourChannels) {
  Rng rng(43);
  const MultiSpeedSystem s = random_multispeed(rng, {RationalSpeed(1, 1), RationalSpeed(1, 3)}, 1);
  const PHSystem split = split_commensurate(s);
  EXPECT_EQ(split.n, 4);
  EXPECT_EQ(split.m, 1);
  EXPECT_DOUBLE_EQ(split.p, 1.0);
  // Chaining rows: seg2(0) = seg1(1), seg3(0) = seg2(1) with the sink in slot 1.
  EXPECT_EQ(split.K0.row(1), RowVector(Eigen::RowVector4d(0, 0, 0, 1)));
  EXPECT_EQ(split.L0.row(1), RowVector(Eigen::RowVector4d(0, 0, -1, 0)));
  EXPECT_EQ(split.K0.row(2), RowVector(Eigen::RowVector4d(0, 1, 0, 0)));
  EXPECT_EQ(split.L0.row(2), RowVector(Eigen::RowVector4d(0, 0, 0, -1)));
}

TEST(Split, RightwardChannelRequiresReflection) {
  Rng rng(47);
  const MultiSpeedSystem s = random_multispeed(rng, {RationalSpeed(1, 1, 1), RationalSpeed(1, 1, -1)}, 1);
  EXPECT_THROW(split_commensurate(s), PreconditionError);
  EXPECT_NO_THROW(to_uniform(s));
}

TEST(Split, SpeedScaleSetsTravelTime) {
  Rng rng(53);
  MultiSpeedSystem s = random_multispeed(rng, {RationalSpeed(2, 1), RationalSpeed(1, 1)}, 1);
  s.speed_scale = 4.0;
  EXPECT_DOUBLE_EQ(split_commensurate(s).p, 0.125);
}

TEST(Split, DelayLinesAgreeWithSplitRecursion) {
  Rng rng(59);
  const std::vector<std::vector<RationalSpeed>> cases = {
      {RationalSpeed(1, 1), RationalSpeed(1, 2)},
      {RationalSpeed(1, 1), RationalSpeed(1, 3), RationalSpeed(1, 2)},
      {RationalSpeed(3, 1), RationalSpeed(2, 1)},
      {RationalSpeed(2, 3), RationalSpeed(1, 1), RationalSpeed(1, 2)},
  };
  for (const auto& speeds : cases) {
    for (Index m = 1; m < static_cast<Index>(speeds.size()); ++m) {
      const MultiSpeedSystem s = random_multispeed(rng, speeds, m);
      const Index grid_n = 6, steps = 7;
      const auto channels = random_channels(rng, s, grid_n);
      const Matrix u = gaussian_matrix(rng, m, steps * grid_n);
      const Matrix want = oracle::simulate_delay_lines(s, channels, u, grid_n);
      const Matrix got = split_output(s, channels, u, grid_n);
      EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, want.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Reflect, ReflectedSystemHasSameOutputs) {
  Rng rng(61);
  for (int t = 0; t < 10; ++t) {
    const MultiSpeedSystem s = random_multispeed(
        rng, {RationalSpeed(1, 1, 1), RationalSpeed(1, 2, -1), RationalSpeed(1, 1, t % 2 ? 1 : -1)}, 1);
    const MultiSpeedSystem r = reflect_positive(s);
    for (const auto& sp : r.speeds) EXPECT_EQ(sp.direction, -1);
    const Index grid_n = 5;
    const auto channels = random_channels(rng, s, grid_n);
    const Matrix u = gaussian_matrix(rng, 1, 6 * grid_n);
    const Matrix want = oracle::simulate_delay_lines(s, channels, u, grid_n);
    const Matrix got = oracle::simulate_delay_lines(r, reflect_profiles(s, channels), u, grid_n);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
}

TEST(Reflect, UniformSystemAsDelayLinesMatchesRecursion) {
  Rng rng(67);
  const PHSystem s = std::get<PHSystem>(load_system(corpus("ex52.json")));
  const MultiSpeedSystem ms = oracle::as_multispeed(s);
  const Index grid_n = 4;
  std::vector<Vector> channels;
  for (Index i = 0; i < s.n; ++i) channels.push_back(gaussian_matrix(rng, grid_n, 1));
  const Matrix u = gaussian_matrix(rng, 1, 5 * grid_n);
  EXPECT_LE((oracle::simulate_delay_lines(ms, channels, u, grid_n) - split_output(ms, channels, u, grid_n))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}
