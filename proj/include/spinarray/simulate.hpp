#pragma once
//
// Monte Carlo engine. Shots are Gaussian draws of the sensor S_z readouts with
// the parameters encoded as mean shifts eps_k <S_k^x> sin(theta_k).
//

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinarray/estimator.hpp"
#include "spinarray/moments.hpp"
#include "spinarray/protocol.hpp"

namespace spinarray {

struct ScenarioSpec {
  SqueezedResource resource;
  SensorPartition partition;
  ConfigurationPlan plan;
  Eigen::VectorXd true_theta;
  double detection_noise_sd = 0.0;
  std::uint64_t seed = 0;
  std::vector<LinearCombination> combinations;

  int m() const { return partition.m(); }
  void validate() const;
};

/// Symmetric square root of a PSD matrix. Eigenvalues in [-1e-10 max(1, |lambda|max), 0)
/// are treated as zero; anything more negative raises NumericalFailure.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& psd);

ShotSet sample_shots(const ScenarioSpec& spec);
EstimationReport run_protocol(const ScenarioSpec& spec);

/// Per-configuration statistics from the moment model: means equal the true
/// parameters and Sigma_l = configuration_covariance(model, eps_l, mu_l).
std::vector<ConfigurationStatistics> analytic_statistics(const ScenarioSpec& spec);
/// run_protocol with analytic_statistics in place of sampled shots.
EstimationReport analytic_protocol(const ScenarioSpec& spec);

struct SweepRow {
  double angle = 0.0;                  // radians
  std::vector<double> coefficients;    // unit L2
  std::vector<int> atom_counts;
  std::vector<int> signs;
  double gain_db = 0.0;                // Monte Carlo
  double se_gain_db = 0.0;
  double analytic_gain_db = 0.0;       // same allocation, moment model
  double xi2_db = 0.0;
};

/// The ten mixing angles of the two-sensor combination scan, in radians.
std::vector<double> default_sweep_angles();

/// For each angle: atoms N_k proportional to |c_k|, signs from sign(c_k), a
/// single configuration with all of base.plan's repetitions, and the gain of
/// the estimate of c . theta. Requires M = 2.
std::vector<SweepRow> sweep_mixing_angle(const ScenarioSpec& base, std::span<const double> angles);

struct ConvergenceRow {
  int mu = 0;
  double variance = 0.0;
  double dof_error = 0.0;
  double analytic_variance = 0.0;
  double gain_db = 0.0;
  double se_gain_db = 0.0;
};

/// Fused variance of theta_1 as the plan is rescaled to each mu in the grid.
std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, std::span<const int> mu_grid);

/// CSV with header config_index,shot_index,S_1^z,...,S_M^z.
void write_shots_csv(const ShotSet& shots, std::ostream& out);

}  // namespace spinarray
