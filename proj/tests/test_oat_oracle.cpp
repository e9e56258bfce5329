#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinarray/errors.hpp"
#include "spinarray/moments.hpp"
#include "spinarray/oat_oracle.hpp"

using namespace spinarray;

namespace {

void expect_moments_near(const CollectiveMoments& a, const CollectiveMoments& b, double tol) {
  EXPECT_NEAR(a.mean_sx, b.mean_sx, tol);
  EXPECT_NEAR(a.mean_sy, b.mean_sy, tol);
  EXPECT_NEAR(a.mean_sz, b.mean_sz, tol);
  EXPECT_NEAR(a.var_sx, b.var_sx, tol);
  EXPECT_NEAR(a.var_sy, b.var_sy, tol);
  EXPECT_NEAR(a.var_sz, b.var_sz, tol);
  EXPECT_NEAR(a.cov_yz, b.cov_yz, tol);
}

}  // namespace

TEST(OatState, Normalized) {
  for (const int n : {2, 7, 100, 1450}) {
    for (const double t : {0.0, 0.01, 0.3}) {
      EXPECT_NEAR(evolve_oat(n, t).amplitudes.squaredNorm(), 1.0, 1e-12);
      EXPECT_NEAR(rotate_x(evolve_oat(n, t), 0.7).amplitudes.squaredNorm(), 1.0, 1e-12);
    }
  }
}

TEST(OatState, ZeroTwistIsCoherent) {
  for (const int n : {2, 11, 400}) {
    const auto m = collective_moments(evolve_oat(n, 0.0));
    EXPECT_NEAR(m.mean_sx, n / 2.0, 1e-10 * n);
    EXPECT_NEAR(m.var_sz, n / 4.0, 1e-10 * n);
    EXPECT_NEAR(m.var_sy, n / 4.0, 1e-10 * n);
    EXPECT_NEAR(m.xi2, 1.0, 1e-10);
    EXPECT_DOUBLE_EQ(optimal_rotation(evolve_oat(n, 0.0)), 0.0);
  }
}

TEST(OatState, SmallSystemAgainstProductBasis) {
  const auto s = evolve_oat(4, 0.3);
  const auto brute = brute_force_moments(4, 0.3, 0.0, {4});
  expect_moments_near(collective_moments(s), brute.global, 1e-12);
}

TEST(OatState, CollectiveAndProductBasesAgree) {
  for (int n = 2; n <= kMaxBruteForceAtoms; ++n) {
    for (const double t : {0.0, 0.1, 0.25, 0.5}) {
      const auto twisted = evolve_oat(n, t);
      const double rot = optimal_rotation(twisted) + 0.1 * (n % 3);
      const auto brute = brute_force_moments(n, t, rot, {n});
      expect_moments_near(collective_moments(rotate_x(twisted, rot)), brute.global, 1e-10);
    }
  }
}

TEST(OatState, RotatedN8MatchesBruteForce) {
  const auto s = aligned_oat(8, 0.2);
  const auto brute = brute_force_moments(8, 0.2, s.rotation_x, {8});
  expect_moments_near(collective_moments(s), brute.global, 1e-12);
}

TEST(OatState, NearMinimumUncertaintyInSqueezingWindow) {
  const int n = 100;
  const double t = std::pow(n, -5.0 / 6.0);
  const auto m = collective_moments(aligned_oat(n, t));
  EXPECT_LT(m.xi2, 1.0);
  const double ratio = m.var_sy * m.var_sz / (0.25 * m.mean_sx * m.mean_sx);
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

TEST(OatState, UncertaintyRelationHolds) {
  oracle::Gen g(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(2, 300);
    const auto s = rotate_x(evolve_oat(n, g.uniform(0.0, 1.0)), g.uniform(-2.0, 2.0));
    const auto m = collective_moments(s);
    const double lhs = m.var_sy * m.var_sz - m.cov_yz * m.cov_yz;
    EXPECT_GE(lhs, 0.25 * m.mean_sx * m.mean_sx - 1e-9 * n * n);
  }
}

TEST(OptimalRotation, MatchesDenseGrid) {
  for (const int n : {10, 50, 200}) {
    for (const double t : {0.01, 0.05, 0.2}) {
      const auto s = evolve_oat(n, t);
      const double v = collective_moments(rotate_x(s, optimal_rotation(s))).var_sz;
      const double grid = oracle::grid_min_var_sz(s, 2000);
      EXPECT_LE(v, grid + 1e-9 * n);
      EXPECT_GE(v, grid - 1e-3 * grid);
    }
  }
}

TEST(OptimalRotation, SqueezesAndDecorrelates) {
  const int n = 200;
  const auto s = aligned_oat(n, best_squeezing_twist(n));
  const auto m = collective_moments(s);
  EXPECT_LT(m.var_sz, n / 4.0);
  EXPECT_NEAR(m.cov_yz, 0.0, 1e-8 * n);
  EXPECT_NEAR(m.mean_sy, 0.0, 1e-10 * n);
  EXPECT_NEAR(m.mean_sz, 0.0, 1e-10 * n);
}

TEST(AlignedXi2, MatchesMaterializedRotation) {
  for (const int n : {5, 60, 333}) {
    for (const double t : {0.003, 0.04, 0.4}) {
      const double want = collective_moments(aligned_oat(n, t)).xi2;
      if (want > 1e6) continue;
      EXPECT_NEAR(aligned_xi2(n, t), want, 1e-9 * std::max(1.0, want));
    }
  }
}

TEST(BestSqueezing, DipAndOversqueezing) {
  const int n = 100;
  const double best = best_squeezing_twist(n);
  const double xi2 = aligned_xi2(n, best);
  EXPECT_LT(xi2, 1.0);
  EXPECT_LT(best, 3.0 * std::pow(n, -2.0 / 3.0));
  EXPECT_GT(best, 1.0 / n);
  for (const double d : {-1e-4, 1e-4}) EXPECT_LE(xi2, aligned_xi2(n, best + d) + 1e-12);
  EXPECT_GT(aligned_xi2(n, 1.0), 1.0);
  EXPECT_THROW(best_squeezing_twist(2), InvalidInput);
}

TEST(BruteForcePartition, CoherentN8) {
  const auto g = brute_force_partition_moments(8, 0.0, 0.0, SensorPartition::with_contrast({4, 4}, 1.0));
  EXPECT_LT((g - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BruteForcePartition, SymmetryAndSum) {
  const auto s = aligned_oat(9, 0.25);
  const auto g = brute_force_partition_moments(9, 0.25, s.rotation_x, SensorPartition::with_contrast({3, 3, 3}, 1.0));
  EXPECT_NEAR(g(0, 1), g(0, 2), 1e-12);
  EXPECT_NEAR(g(0, 1), g(1, 2), 1e-12);
  EXPECT_NEAR(g(0, 0), g(1, 1), 1e-12);
  EXPECT_NEAR(g(0, 0), g(2, 2), 1e-12);
  EXPECT_NEAR(g.sum(), collective_moments(s).var_sz, 1e-10);
}

TEST(BruteForcePartition, MatchesClosedFormN8) {
  const auto s = aligned_oat(8, 0.25);
  const auto r = resource_from_state(s);
  const auto part = SensorPartition::with_contrast({4, 4}, r.contrast());
  const auto brute = brute_force_moments(8, 0.25, s.rotation_x, part.atom_counts);
  const auto model = partition_moments(r, part);
  EXPECT_LT((brute.gamma - model.gamma).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((brute.response - model.response).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BruteForcePartition, RejectsLargeSystems) {
  EXPECT_THROW(brute_force_moments(13, 0.1, 0.0, {13}), InvalidInput);
}
