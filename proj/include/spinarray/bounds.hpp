#pragma once
//
// Fisher information of the sensor array for rotations about y, and the
// harmonic-mean Cramer-Rao inequality sigma_H >= lambda_H between the
// spectra of the estimator covariance and of (mu F)^{-1}.
//

#include <span>

#include <Eigen/Dense>

#include "spinarray/moments.hpp"
#include "spinarray/simulate.hpp"

namespace spinarray {

struct FisherSpectrum {
  double lambda_sq = 0.0;   // along (1, ..., 1)
  double lambda_asq = 0.0;  // (M - 1)-fold
  Eigen::MatrixXd matrix;
};

/// F_kl = 4 Cov(S_k^y, S_l^y) for an equal split. Requires var_sy.
FisherSpectrum fisher_matrix(const SqueezedResource& resource, int m_sensors);
/// Same matrix for any partition.
Eigen::MatrixXd fisher_matrix(const SqueezedResource& resource, const SensorPartition& partition);

/// M / sum(1 / v_i). Rejects non-positive entries.
double harmonic_mean(std::span<const double> values);

struct CrbResult {
  double sigma_h = 0.0;
  double lambda_h = 0.0;
  double ratio = 0.0;
  bool satisfied = false;
  bool applicable = true;   // false for unequal splits
  bool pure_state = true;   // false when detection noise is present
};

/// sigma_H from the eigenvalues of estimator_cov, lambda_H from those of
/// (mu F)^{-1}; satisfied when sigma_H >= lambda_H - tolerance.
CrbResult crb_check(const Eigen::MatrixXd& estimator_cov, const FisherSpectrum& fisher, int mu,
                    double tolerance = 1e-10);

enum class CrbMethod { Analytic, MonteCarlo };

/// Runs the scenario's protocol (moment model or sampled shots) and checks the
/// inequality. Monte Carlo tolerance is three standard errors of sigma_H.
/// Unequal splits return applicable = false without evaluating the bound.
CrbResult crb_for_scenario(const ScenarioSpec& spec, CrbMethod method);

}  // namespace spinarray
