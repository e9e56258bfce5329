#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinarray/errors.hpp"
#include "spinarray/estimator.hpp"
#include "spinarray/simulate.hpp"

using namespace spinarray;

namespace {

std::vector<Eigen::MatrixXd> analytic_sigmas(const SqueezedResource& r, const SensorPartition& p,
                                             const ConfigurationPlan& plan) {
  const auto model = partition_moments(r, p);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& e : plan.entries) out.push_back(configuration_covariance(model, e.config.signs, e.reps));
  return out;
}

ShotSet tiny_shots(const std::vector<std::vector<double>>& rows, Eigen::VectorXd mean_spins, std::vector<int> signs) {
  ShotSet s;
  s.plan.entries.push_back({{std::move(signs)}, static_cast<int>(rows.size())});
  s.mean_spins = std::move(mean_spins);
  kernels::RowMatrix m(static_cast<Eigen::Index>(rows.size()), s.mean_spins.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  s.readouts.push_back(m);
  return s;
}

}  // namespace

TEST(LocalEstimate, LinearReadout) {
  const Eigen::Vector2d sx(340.0, 341.0);
  EXPECT_EQ(local_estimate(tiny_shots({{0, 0}, {0, 0}}, sx, {1, -1}), 0), Eigen::Vector2d::Zero());
  const auto e = local_estimate(tiny_shots({{340.0 * 0.05, -341.0 * 0.02}}, sx, {1, -1}), 0);
  EXPECT_NEAR(e[0], 0.05, 1e-15);
  EXPECT_NEAR(e[1], 0.02, 1e-15);
}

TEST(LocalEstimate, ScaleEquivariance) {
  oracle::Gen g(2);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({g.normal(), g.normal()});
  const Eigen::Vector2d sx(100.0, 80.0);
  const auto a = tiny_shots(rows, sx, {1, 1});
  auto b = a;
  b.readouts[0] *= 3.0;
  const auto sa = configuration_statistics(a), sb = configuration_statistics(b);
  EXPECT_LT((3.0 * sa[0].mean - sb[0].mean).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((9.0 * sa[0].sigma - sb[0].sigma).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(quantum_gain(2.0, 4.0).ratio, quantum_gain(18.0, 36.0).ratio, 1e-15);
}

TEST(WeightAlpha, Examples) {
  EXPECT_DOUBLE_EQ(weight_alpha(1.0, 2.0, 3), 0.0);
  EXPECT_NEAR(weight_alpha(1.0, 1e300, 2), 1.0, 1e-12);
  EXPECT_NEAR(weight_alpha(1.0, 1e-3, 2), -0.999 / 1.001, 1e-15);
  EXPECT_THROW(weight_alpha(0.0, 1.0, 2), InvalidInput);
}

TEST(WeightAlpha, FusedVarianceIsHarmonic) {
  oracle::Gen g(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double vs = g.uniform(0.1, 3.0), va = g.uniform(0.1, 3.0);
    const int m = g.integer(2, 6);
    const double a = weight_alpha(vs, va, m);
    if (std::abs(a) == 1.0) continue;
    const double fused = 0.25 * (1 + a) * (1 + a) * vs + 0.25 * (1 - a) * (1 - a) * va / (m - 1);
    EXPECT_NEAR(fused, 1.0 / (1.0 / vs + (m - 1) / va), 1e-12);
  }
}

TEST(FuseAlpha, Endpoints) {
  const std::vector<double> asq = {0.2, 0.4, 0.9};
  EXPECT_DOUBLE_EQ(fuse_alpha(0.7, asq, 1.0), 0.7);
  EXPECT_DOUBLE_EQ(fuse_alpha(0.7, asq, -1.0), 0.5);
  EXPECT_DOUBLE_EQ(fuse_alpha(0.7, asq, 0.0), 0.6);
}

TEST(GeneralWeights, WorkedExample) {
  Eigen::Matrix2d s1, s2;
  s1 << 2, 1, 1, 2;
  s2 << 2, -1, -1, 2;
  const std::vector<Eigen::MatrixXd> sig = {s1, s2};
  const auto w = general_weights(sig, Eigen::Vector2d(1, 0));
  EXPECT_LT((w.x[0] - Eigen::Vector2d(0.5, -0.25)).norm(), 1e-15);
  EXPECT_LT((w.x[1] - Eigen::Vector2d(0.5, 0.25)).norm(), 1e-15);
  EXPECT_NEAR(w.variance, 0.75, 1e-15);
  double qp = 0.0;
  const auto x = oracle::fusion_qp({s1, s2}, Eigen::Vector2d(1, 0), &qp);
  EXPECT_NEAR(qp, 0.75, 1e-12);
  EXPECT_LT((x[0] - w.x[0]).norm(), 1e-10);
}

TEST(GeneralWeights, SingleConfiguration) {
  oracle::Gen g(4);
  const Eigen::MatrixXd s = g.spd(3, 0.5, 2.0);
  const Eigen::Vector3d n(0.3, -1.0, 2.0);
  const std::vector<Eigen::MatrixXd> sig = {s};
  const auto w = general_weights(sig, n);
  EXPECT_LT((w.x[0] - n).norm(), 1e-12);
  EXPECT_NEAR(w.variance, n.dot(s * n), 1e-12);
}

TEST(GeneralWeights, MatchesQpOracle) {
  oracle::Gen g(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = g.integer(1, 4), L = g.integer(1, 5);
    std::vector<Eigen::MatrixXd> sig;
    for (int l = 0; l < L; ++l) sig.push_back(g.spd(m, 0.2, 3.0));
    Eigen::VectorXd n(m);
    for (int k = 0; k < m; ++k) n[k] = g.uniform(-1.0, 1.0);
    const auto w = general_weights(sig, n);
    double qp = 0.0;
    const auto x = oracle::fusion_qp(sig, n, &qp);
    EXPECT_NEAR(w.variance, qp, 1e-8);
    for (int l = 0; l < L; ++l) EXPECT_LT((w.x[static_cast<std::size_t>(l)] - x[static_cast<std::size_t>(l)]).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(w.covariance_with(w, sig), w.variance, 1e-12 * w.variance);
  }
}

TEST(GeneralWeights, RejectsSingularCovariance) {
  Eigen::Matrix2d s;
  s << 1, 1, 1, 1;
  const std::vector<Eigen::MatrixXd> sig = {s};
  EXPECT_THROW(general_weights(sig, Eigen::Vector2d(1, 0)), NumericalFailure);
}

TEST(AlphaFusion, SymmetricTwoConfigurationsEqualGeneralWeights) {
  oracle::Gen g(55);
  const auto plan = ConfigurationPlan::split(configuration_set(2), 2000);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = g.uniform(0.5, 2.0), b = g.uniform(-0.45, 0.45) * a;
    Eigen::Matrix2d s1, s2;
    s1 << a, b, b, a;
    s2 << a, -b, -b, a;
    const std::vector<Eigen::MatrixXd> sig = {s1, s2};
    for (const int k : {0, 1}) {
      const auto gw = general_weights(sig, Eigen::Vector2d::Unit(k));
      for (const bool correlated : {true, false}) {
        const auto af = hadamard_alpha_fusion(plan, sig, k, correlated);
        EXPECT_NEAR(af.fused.variance, gw.variance, 1e-10 * gw.variance);
      }
    }
  }
}

TEST(AlphaFusion, DominanceOnRandomPairs) {
  oracle::Gen g(66);
  const auto plan = ConfigurationPlan::split(configuration_set(2), 2000);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Eigen::MatrixXd> sig = {g.spd(2, 0.1, 3.0), g.spd(2, 0.1, 3.0)};
    for (const int k : {0, 1}) {
      const auto gw = general_weights(sig, Eigen::Vector2d::Unit(k));
      const auto af = hadamard_alpha_fusion(plan, sig, k);
      EXPECT_LE(gw.variance, af.fused.variance + 1e-12);
      EXPECT_LE(af.fused.variance, std::min(af.var_sq, af.var_asq_mean) + 1e-12);
    }
  }
}

TEST(AlphaFusion, ThreeSensorWeightMatchesClosedForm) {
  const int n = 1671, mu = 4000;
  const auto r = SqueezedResource::from_squeezing(n, from_db(-4.9), 0.93);
  const auto part = SensorPartition::equal(n, 3, 0.93);
  const auto plan = ConfigurationPlan::split(configuration_set(3), mu);
  const auto sig = analytic_sigmas(r, part, plan);
  const auto s = configuration_covariance(partition_moments(r, part), std::vector<int>{1, 1, 1}, mu / 4.0);
  const double expected = -(s(0, 0) + 4 * s(0, 1)) / (2 * (s(0, 0) + s(0, 1)));
  for (int k = 0; k < 3; ++k) {
    const auto af = hadamard_alpha_fusion(plan, sig, k);
    EXPECT_NEAR(af.alpha, expected, 1e-10);
    const auto gw = general_weights(sig, Eigen::Vector3d::Unit(k));
    EXPECT_NEAR(af.fused.variance, gw.variance, 1e-10 * gw.variance);
    EXPECT_NEAR(gw.variance / (3.0 / (mu * n)), joint_gain(r, 3), 1e-10);
  }
}

TEST(AlphaFusion, RejectsNonHadamardPlan) {
  ConfigurationPlan plan;
  plan.entries.push_back({{{1, 1}}, 10});
  const std::vector<Eigen::MatrixXd> sig = {Eigen::Matrix2d::Identity()};
  EXPECT_THROW(hadamard_alpha_fusion(plan, sig, 0), InvalidInput);
}

TEST(Fusion, AnalyticTwoSensorMatchesClosedForm) {
  ScenarioSpec spec;
  spec.resource = SqueezedResource::from_squeezing(1450, from_db(-6.5), 0.94);
  spec.partition = SensorPartition::equal(1450, 2, 0.94);
  spec.plan = ConfigurationPlan::split(configuration_set(2), 200000);
  spec.true_theta = Eigen::Vector2d::Zero();
  const auto rep = analytic_protocol(spec);
  for (const auto& p : rep.parameters) EXPECT_NEAR(p.gain.ratio, joint_gain(spec.resource, 2), 1e-10 * p.gain.ratio);
  EXPECT_EQ(rep.dof, 3);
}

TEST(Fusion, DroppingAConfigurationHurtsEveryParameter) {
  ScenarioSpec spec;
  spec.resource = SqueezedResource::from_squeezing(1671, from_db(-4.9), 0.93);
  spec.partition = SensorPartition::equal(1671, 3, 0.93);
  spec.plan = ConfigurationPlan::split(configuration_set(3), 200000);
  spec.true_theta = Eigen::Vector3d::Zero();
  const auto full = analytic_protocol(spec).gain_db();
  for (int drop = 0; drop < 4; ++drop) {
    ScenarioSpec s = spec;
    std::vector<SignConfiguration> kept;
    for (int l = 0; l < 4; ++l)
      if (l != drop) kept.push_back(spec.plan.entries[static_cast<std::size_t>(l)].config);
    s.plan = ConfigurationPlan::split(kept, 200000);
    const auto g = analytic_protocol(s).gain_db();
    for (int k = 0; k < 3; ++k) EXPECT_GT(g[k], full[k] + 1e-6);
  }
}

TEST(Gain, Examples) {
  EXPECT_DOUBLE_EQ(quantum_gain(2.0, 2.0).db, 0.0);
  EXPECT_NEAR(quantum_gain(1.0, 2.0).db, -3.0103, 1e-4);
  EXPECT_THROW(quantum_gain(1.0, 0.0), InvalidInput);
  EXPECT_THROW(quantum_gain(-1.0, 1.0), InvalidInput);
}

TEST(DofError, Examples) {
  EXPECT_DOUBLE_EQ(dof_error(1.0, 3, 1), 1.0);
  EXPECT_NEAR(dof_error(1.0, 402, 10), 0.0714, 1e-4);
  EXPECT_EQ(fusion_dof(3, 4), 10);
  EXPECT_EQ(fusion_dof(2, 2), 3);
  EXPECT_THROW(dof_error(1.0, 10, 10), InvalidInput);
}
