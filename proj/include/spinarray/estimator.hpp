#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinarray/kernels.hpp"
#include "spinarray/protocol.hpp"

namespace spinarray {

/// Per-shot S_k^z readouts grouped by configuration.
struct ShotSet {
  ConfigurationPlan plan;
  std::vector<kernels::RowMatrix> readouts;  // readouts[l] is reps_l x M
  Eigen::VectorXd mean_spins;                // <S_k^x> = C_k N_k / 2

  int m() const { return static_cast<int>(mean_spins.size()); }
  void validate() const;
};

/// Per-shot local estimates eps_k S_k^z / <S_k^x> for one configuration.
kernels::RowMatrix local_estimates(const ShotSet& shots, int config_index);
/// Mean over the configuration's shots of local_estimates.
Eigen::VectorXd local_estimate(const ShotSet& shots, int config_index);

/// Mean of the local estimates and their covariance divided by the shot count.
struct ConfigurationStatistics {
  Eigen::VectorXd mean;
  Eigen::MatrixXd sigma;
  int reps = 0;
};

std::vector<ConfigurationStatistics> configuration_statistics(const ShotSet& shots);

/// Optimal weight between a squeezed estimate and M-1 independent anti-squeezed
/// estimates, clipped to [-1, 1].
double weight_alpha(double var_sq, double var_asq, int m_sensors);
/// Same, for a squeezed estimate and the mean of the anti-squeezed estimates
/// with covariance `cov` between them. Clipped to [-1, 1].
double weight_alpha_correlated(double var_sq, double var_asq_mean, double cov);
/// ((1+alpha)/2) theta_sq + ((1-alpha)/2) mean(theta_asq).
double fuse_alpha(double theta_sq, std::span<const double> theta_asq, double alpha);

/// Per-configuration coefficient vectors x_l of an unbiased linear estimator
/// n . theta = sum_l x_l . theta_hat_l, and its variance sum_l x_l^T Sigma_l x_l.
struct FusionWeights {
  std::vector<Eigen::VectorXd> x;
  double variance = 0.0;

  double apply(std::span<const ConfigurationStatistics> stats) const;
  double covariance_with(const FusionWeights& other, std::span<const Eigen::MatrixXd> sigmas) const;
};

/// Minimizes sum x_l^T Sigma_l x_l subject to sum x_l = n. Closed form
/// x_l = Sigma_l^{-1} W n with W = (sum Sigma_l^{-1})^{-1}.
/// Throws NumericalFailure when some Sigma_l is not positive definite.
FusionWeights general_weights(std::span<const Eigen::MatrixXd> sigmas, const Eigen::VectorXd& target);

/// Squeezed / anti-squeezed decomposition of the (possibly truncated) Hadamard
/// plan for local parameter k, and its alpha-weighted fusion.
struct AlphaFusion {
  FusionWeights squeezed;
  std::vector<FusionWeights> antisqueezed;  // L - 1 estimates
  FusionWeights antisqueezed_mean;
  double var_sq = 0.0;
  double var_asq_mean = 0.0;
  double cov = 0.0;
  double alpha = 0.0;
  FusionWeights fused;
};

/// `plan` must list the rows of configuration_set(M) in order.
/// With `correlated` false, alpha ignores the covariance between the squeezed
/// and anti-squeezed estimates (exact for M = 2^p on a symmetric state).
AlphaFusion hadamard_alpha_fusion(const ConfigurationPlan& plan, std::span<const Eigen::MatrixXd> sigmas,
                                  int parameter, bool correlated = true);

struct Gain {
  double ratio = 1.0;
  double db = 0.0;
};

Gain quantum_gain(double variance, double sql);

/// Standard error of a sample variance, variance * sqrt(2 / (mu - dof)).
double dof_error(double variance, int mu, int dof);
/// Fitted coefficients of a general-weights fusion over `n_configs`
/// configurations plus one for the sample mean: M L - M + 1.
int fusion_dof(int m_sensors, int n_configs);

struct ParameterResult {
  std::string label;
  Eigen::VectorXd target;  // n, as given (local parameter or combination)
  double estimate = 0.0;
  double truth = 0.0;
  double variance = 0.0;
  double sql = 0.0;
  Gain gain;
  double se_gain_db = 0.0;
  FusionWeights weights;
};

struct EstimationReport {
  std::vector<ParameterResult> parameters;    // local theta_k
  std::vector<ParameterResult> combinations;  // requested n . theta
  Eigen::MatrixXd covariance;                 // of the local estimators
  Eigen::MatrixXd configuration_gain_db;      // rows: configuration, columns: matched combination
  int dof = 0;
  int mu_total = 0;
  int n_atoms = 0;

  Eigen::VectorXd estimates() const;
  Eigen::VectorXd gain_db() const;
};

/// Fuses per-configuration statistics into local-parameter and combination
/// estimates. SQL is M/(mu N) for local parameters and (sum|c|)^2/(mu N) for
/// combinations. `truth` (optional, may be empty) is carried into the report.
EstimationReport fuse_configurations(std::span<const ConfigurationStatistics> stats,
                                     const ConfigurationPlan& plan, const SensorPartition& partition,
                                     const std::vector<LinearCombination>& combinations,
                                     const Eigen::VectorXd& truth = {});

/// Gain in dB of each configuration (row) for each configuration-matched
/// combination eps_j N_k / |.| (column), SQL (sum|n|)^2 / (mu_l N).
Eigen::MatrixXd configuration_gain_matrix(std::span<const ConfigurationStatistics> stats,
                                          const ConfigurationPlan& plan, const SensorPartition& partition);

}  // namespace spinarray
