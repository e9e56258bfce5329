#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "spinarray/errors.hpp"
#include "spinarray/protocol.hpp"

using namespace spinarray;

namespace {

std::vector<std::vector<int>> rows_of(const std::vector<SignConfiguration>& cs) {
  std::vector<std::vector<int>> out;
  for (const auto& c : cs) out.push_back(c.signs);
  return out;
}

LinearCombination comb(std::vector<double> c) { return LinearCombination{std::move(c), std::nullopt}; }

}  // namespace

TEST(Hadamard, SmallOrders) {
  Eigen::Matrix2i h1;
  h1 << 1, 1, 1, -1;
  EXPECT_EQ(sylvester_hadamard(1), h1);
  Eigen::Matrix4i h2;
  h2 << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
  EXPECT_EQ(sylvester_hadamard(2), h2);
}

TEST(Hadamard, Orthogonal) {
  for (int p = 0; p <= 10; ++p) {
    const Eigen::MatrixXi h = sylvester_hadamard(p);
    EXPECT_EQ(h * h.transpose(), Eigen::MatrixXi::Identity(h.rows(), h.rows()) * (1 << p)) << p;
  }
  EXPECT_THROW(sylvester_hadamard(11), InvalidInput);
}

TEST(ConfigurationSet, Examples) {
  using R = std::vector<std::vector<int>>;
  EXPECT_EQ(rows_of(configuration_set(1)), (R{{1}}));
  EXPECT_EQ(rows_of(configuration_set(2)), (R{{1, 1}, {1, -1}}));
  EXPECT_EQ(rows_of(configuration_set(3)), (R{{1, 1, 1}, {1, -1, 1}, {1, 1, -1}, {1, -1, -1}}));
  EXPECT_EQ(rows_of(configuration_set(4)), (R{{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}}));
}

TEST(ConfigurationSet, Properties) {
  for (int m = 1; m <= 17; ++m) {
    const auto rows = rows_of(configuration_set(m));
    EXPECT_EQ(std::set<std::vector<int>>(rows.begin(), rows.end()).size(), rows.size());
    Eigen::MatrixXi h(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int k = 0; k < m; ++k) h(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    const Eigen::MatrixXi gram = h * h.transpose();
    if ((m & (m - 1)) == 0) {
      EXPECT_EQ(gram, Eigen::MatrixXi::Identity(m, m) * m);
    }
    if (m == 3) {
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_EQ(std::abs(gram(i, j)), i == j ? 3 : 1);
    }
  }
}

TEST(LargestRemainder, ConservesAndBreaksTiesLow) {
  EXPECT_EQ(largest_remainder({1, 1, 1}, 10), (std::vector<int>{4, 3, 3}));
  EXPECT_EQ(largest_remainder({1, 1}, 7), (std::vector<int>{4, 3}));
  EXPECT_EQ(largest_remainder({0, 2, 1}, 9), (std::vector<int>{0, 6, 3}));
  oracle::Gen g(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = g.integer(1, 8);
    std::vector<double> w(static_cast<std::size_t>(m));
    for (auto& x : w) x = g.uniform(0.0, 1.0);
    const int total = g.integer(0, 5000);
    const auto out = largest_remainder(w, total);
    EXPECT_EQ(std::accumulate(out.begin(), out.end(), 0), total);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (int k = 0; k < m; ++k) EXPECT_LT(std::abs(out[static_cast<std::size_t>(k)] - total * w[static_cast<std::size_t>(k)] / s), 1.0);
  }
}

TEST(AllocateAtoms, Examples) {
  EXPECT_EQ(allocate_atoms(comb({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}), 1450), (std::vector<int>{725, 725}));
  EXPECT_EQ(allocate_atoms(LinearCombination::from_mixing_angle(std::atan(0.5)), 900), (std::vector<int>{600, 300}));
  const auto measured = allocate_atoms(comb({0.644, -0.431, 0.632}), 1670);
  for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(measured[k] - std::vector<int>{630, 420, 620}[k]), 3);
  EXPECT_EQ(allocate_atoms(comb({630, -420, 620}), 1670), (std::vector<int>{630, 420, 620}));
  EXPECT_EQ(allocate_atoms(comb({1, 0}), 10), (std::vector<int>{10, 0}));
  EXPECT_THROW(allocate_atoms(comb({1, 1e-6}), 100), InfeasiblePlan);
}

TEST(AllocateAtoms, PropertyConservationEquivarianceRoundTrip) {
  oracle::Gen g(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = g.integer(1, 5);
    const int n = g.integer(200, 5000);
    std::vector<double> c(static_cast<std::size_t>(m));
    for (auto& x : c) x = (g.uniform(0.0, 1.0) < 0.5 ? -1 : 1) * g.uniform(0.2, 1.0);
    const auto a = allocate_atoms(comb(c), n);
    EXPECT_EQ(std::accumulate(a.begin(), a.end(), 0), n);

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<double> pc;
    for (const int p : perm) pc.push_back(c[static_cast<std::size_t>(p)]);
    const auto pa = allocate_atoms(comb(pc), n);
    // Ties may move one atom; away from ties the allocation permutes.
    for (int k = 0; k < m; ++k) EXPECT_LE(std::abs(pa[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]), 1);

    SignConfiguration s;
    for (const double x : c) s.signs.push_back(x < 0 ? -1 : 1);
    const auto back = combination_from_partition(SensorPartition::with_contrast(a, 1.0), s).unit_vector();
    const Eigen::VectorXd want = Eigen::Map<const Eigen::VectorXd>(c.data(), m).normalized();
    EXPECT_LE((back - want).cwiseAbs().maxCoeff(), static_cast<double>(m) / (2.0 * n) * 2.0);
  }
}

TEST(CombinationFromPartition, Examples) {
  const auto c = combination_from_partition(SensorPartition::with_contrast({630, 420, 620}, 0.93), {{1, 1, 1}});
  EXPECT_NEAR(c.coeffs[0], 0.644, 2.5e-3);
  EXPECT_NEAR(c.coeffs[1], 0.431, 2.5e-3);
  EXPECT_NEAR(c.coeffs[2], 0.632, 2.5e-3);
  const auto d = combination_from_partition(SensorPartition::equal(100, 2, 1.0), {{1, -1}});
  EXPECT_NEAR(d.coeffs[0], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.coeffs[1], -1 / std::sqrt(2.0), 1e-15);
  const auto e = combination_from_partition(SensorPartition::equal(100, 4, 1.0), {{1, -1, -1, 1}});
  EXPECT_EQ(e.coeffs, (std::vector<double>{0.5, -0.5, -0.5, 0.5}));
}

TEST(CssAllocation, Examples) {
  const auto a = css_allocation(comb({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}), 1, 1000);
  EXPECT_NEAR(a[0], 500, 1e-9);
  EXPECT_NEAR(a[1], 500, 1e-9);
  const auto c = comb({3 / std::sqrt(10.0), 1 / std::sqrt(10.0)});
  const auto b = css_allocation(c, 10, 100);
  EXPECT_NEAR(b[0], 750, 1e-9);
  EXPECT_NEAR(b[1], 250, 1e-9);
  EXPECT_NEAR(css_variance(c, b), css_minimum_variance(c, 10, 100), 1e-15);
}

TEST(CssAllocation, GridSearchFindsNothingBetter) {
  oracle::Gen g(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = g.integer(2, 3);
    std::vector<double> c(static_cast<std::size_t>(m));
    for (auto& x : c) x = (g.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * g.uniform(0.05, 1.0);
    const auto lc = comb(c);
    const int budget = m == 2 ? 1000 : 200;  // mu N
    double best = 0.0;
    const auto split = oracle::best_integer_split(
        m, budget, [&](const std::vector<int>& w) { return css_variance(lc, {w.begin(), w.end()}); }, &best);
    const double bound = css_minimum_variance(lc, 1, budget);
    EXPECT_GE(best, bound * (1 - 1e-12));
    EXPECT_NEAR(css_variance(lc, css_allocation(lc, 1, budget)), bound, 1e-12 * bound);
    // Rounded to integers, the allocation is as good as the grid optimum up to granularity.
    std::vector<double> w;
    for (const double x : c) w.push_back(std::abs(x));
    const auto rounded = largest_remainder(w, budget);
    const double v = css_variance(lc, {rounded.begin(), rounded.end()});
    EXPECT_LE(v - best, best * 4.0 * m / budget);
    (void)split;
  }
}

TEST(ScanningAllocation, Examples) {
  EXPECT_EQ(scanning_allocation(comb({1, 1}), 100), (std::vector<int>{50, 50}));
  EXPECT_EQ(scanning_allocation(comb({1, 0}), 10), (std::vector<int>{10, 0}));
  const auto c = comb({2, 1, 1});
  const auto r = scanning_allocation(c, 400);
  EXPECT_EQ(r, (std::vector<int>{200, 100, 100}));
  const double xi2 = 0.3, n = 1000;
  EXPECT_NEAR(scanning_variance(c, r, xi2, n), xi2 * 16 / (400 * n), 1e-15);
  double best = 0.0;
  oracle::best_integer_split(3, 400, [&](const std::vector<int>& w) { return scanning_variance(c, w, xi2, n); }, &best);
  EXPECT_NEAR(scanning_variance(c, r, xi2, n), best, 1e-15);
  EXPECT_THROW(scanning_allocation(c, 2), InfeasiblePlan);
}

TEST(ScanningAllocation, GridSearchWithinGranularity) {
  oracle::Gen g(31);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> c = {g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0)};
    const auto lc = comb(c);
    const int mu = g.integer(10, 150);
    double best = 0.0;
    oracle::best_integer_split(3, mu, [&](const std::vector<int>& w) { return scanning_variance(lc, w, 1.0, 1.0); }, &best);
    const double l1 = lc.l1_norm();
    EXPECT_GE(best, l1 * l1 / mu * (1 - 1e-12));
    const double v = scanning_variance(lc, scanning_allocation(lc, mu), 1.0, 1.0);
    EXPECT_LE(v - best, best * 6.0 / mu + 1e-12);
  }
}

TEST(Plan, SplitAndRescale) {
  const auto plan = ConfigurationPlan::split(configuration_set(3), 10);
  EXPECT_EQ(plan.total_reps(), 10);
  EXPECT_EQ(plan.entries[0].reps, 3);
  EXPECT_EQ(plan.entries[3].reps, 2);
  EXPECT_EQ(plan.rescaled(402).total_reps(), 402);
  EXPECT_THROW(ConfigurationPlan::split(configuration_set(3), 3), InfeasiblePlan);
  EXPECT_THROW(plan.rescaled(2), InfeasiblePlan);
}
