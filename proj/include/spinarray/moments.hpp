#pragma once
//
// Gaussian moment model of a permutation-symmetric spin-squeezed ensemble split
// into M sensors: covariance of the local S_z readouts, the response matrix,
// and the closed-form gain ratios (estimator variance over the standard
// quantum limit for the same atoms and repetitions).
//

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinarray {

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// Global squeezed resource. All spin quantities are in units of hbar.
struct SqueezedResource {
  int n_atoms = 0;
  double var_sz = 0.0;
  double mean_sx = 0.0;
  std::optional<double> var_sy;

  /// Builds the resource from the Wineland parameter and contrast:
  /// <Sx> = C N / 2 and Var(Sz) = xi2 <Sx>^2 / N.
  static SqueezedResource from_squeezing(int n_atoms, double xi2, double contrast,
                                         std::optional<double> var_sy = std::nullopt);
  /// Ideal coherent spin state (xi2 = 1, C = 1, Var(Sy) = N/4).
  static SqueezedResource coherent(int n_atoms);

  double xi2() const { return n_atoms * var_sz / (mean_sx * mean_sx); }
  double contrast() const { return mean_sx / (0.5 * n_atoms); }

  /// Var(Sy) if given, otherwise the minimum-uncertainty value <Sx>^2 / (4 Var(Sz)).
  double var_sy_or_minimum() const;

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;
};

struct SensorPartition {
  std::vector<int> atom_counts;
  std::vector<double> contrasts;

  /// N split as evenly as possible (first N mod M sensors get one extra atom).
  static SensorPartition equal(int n_atoms, int m_sensors, double contrast);
  static SensorPartition with_contrast(std::vector<int> atom_counts, double contrast);

  int m() const { return static_cast<int>(atom_counts.size()); }
  int total_atoms() const;
  bool is_equal_split() const;
  /// Per-sensor mean spin <S_k^x> = C_k N_k / 2.
  Eigen::VectorXd mean_spins() const;

  void validate() const;
  void validate_against(const SqueezedResource& resource) const;
};

struct MomentModel {
  Eigen::MatrixXd gamma;     // Cov(S_k^z, S_l^z)
  Eigen::MatrixXd response;  // d<S_k^z>/d theta_l, diagonal
  double pair_cov = 0.0;     // Cov(s_i^z, s_j^z) for two distinct atoms
};

/// c_ij = (4 Var(Sz) - N) / (4 N (N - 1)).
double pair_covariance(const SqueezedResource& resource);

/// Covariance matrix of sub-ensemble sums of one transverse spin component for
/// any permutation-symmetric state with zero transverse mean:
/// Var(S_k) = N_k/4 + N_k (N_k - 1) c, Cov(S_k, S_l) = N_k N_l c, with c derived
/// from the global variance. Atom counts may be fractional.
Eigen::MatrixXd symmetric_partition_covariance(double n_atoms, double global_variance,
                                               std::span<const double> atom_counts);

MomentModel partition_moments(const SqueezedResource& resource, const SensorPartition& partition);

/// Large-mu covariance of the local estimators, (1/mu) (G^T Gamma^{-1} G)^{-1}.
/// Throws NumericalFailure when Gamma is not positive definite or its
/// condition number exceeds 1e12.
Eigen::MatrixXd estimator_covariance(const MomentModel& model, double mu);

/// Covariance of the per-configuration local estimates theta_k = eps_k S_k^z / <S_k^x>
/// averaged over mu_lambda shots, including additive detection noise on each S_k^z.
Eigen::MatrixXd configuration_covariance(const MomentModel& model, std::span<const int> signs,
                                         double mu_lambda, double detection_noise_sd = 0.0);

enum class GainForm { Exact, LargeN };

/// Variance ratio to the SQL of each local estimate with a fixed configuration.
double local_gain(const SqueezedResource& resource, int m_sensors);
/// Variance ratio of each local parameter under the Hadamard joint protocol.
double joint_gain(const SqueezedResource& resource, int m_sensors, GainForm form = GainForm::Exact);
/// Variance ratio of the M-1 combinations orthogonal to the squeezed one.
double antisqueezed_gain(const SqueezedResource& resource);

/// 1e12, the largest accepted condition number of Gamma.
inline constexpr double kMaxConditionNumber = 1e12;

}  // namespace spinarray
