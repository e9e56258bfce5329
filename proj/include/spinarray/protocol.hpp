#pragma once
//
// Measurement plans and resource allocation.
//
// A sign configuration eps in {-1,+1}^M says which sensors get a pi rotation
// about x (eps_k = -1) before the parameters are imprinted. Allocations of
// atoms and repetitions to sensors are proportional to |c_k| (L1 scaling);
// combinations reported back to the user are normalized to unit L2 norm.
//

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spinarray/moments.hpp"

namespace spinarray {

struct SignConfiguration {
  std::vector<int> signs;

  int m() const { return static_cast<int>(signs.size()); }
  void validate() const;
  bool operator==(const SignConfiguration&) const = default;
};

struct PlanEntry {
  SignConfiguration config;
  int reps = 0;
};

struct ConfigurationPlan {
  std::vector<PlanEntry> entries;

  int m() const { return entries.empty() ? 0 : entries.front().config.m(); }
  int total_reps() const;
  int size() const { return static_cast<int>(entries.size()); }
  void validate() const;

  /// mu_total split over the configurations by largest remainder.
  /// Throws InfeasiblePlan if mu_total < configs.size().
  static ConfigurationPlan split(const std::vector<SignConfiguration>& configs, int mu_total);
  /// Same configurations, repetitions rescaled proportionally to sum to mu_total.
  ConfigurationPlan rescaled(int mu_total) const;
};

struct LinearCombination {
  std::vector<double> coeffs;
  std::optional<double> mixing_angle;  // radians, M = 2 only

  static LinearCombination from_mixing_angle(double alpha);
  int m() const { return static_cast<int>(coeffs.size()); }
  double l1_norm() const;
  Eigen::VectorXd unit_vector() const;  // L2-normalized
  void validate() const;
};

/// Sylvester Hadamard matrix of order 2^p (p <= 10).
Eigen::MatrixXi sylvester_hadamard(int order_exponent);

/// Rows of the Sylvester matrix of order M if M is a power of two; otherwise
/// the rows of the next larger one with trailing columns dropped to width M.
std::vector<SignConfiguration> configuration_set(int m_sensors);

/// N_k proportional to |c_k|, largest-remainder rounded so that sum N_k = N.
/// Zero coefficients get zero atoms. Throws InfeasiblePlan if a nonzero
/// coefficient would receive no atoms.
std::vector<int> allocate_atoms(const LinearCombination& combination, int n_atoms);

/// eps_k N_k, normalized to unit Euclidean norm.
LinearCombination combination_from_partition(const SensorPartition& partition,
                                             const SignConfiguration& signs);

/// Cauchy-Schwarz-optimal mu_k N_k for a coherent-state reference:
/// B |c_k| with B = mu N / sum |c_j|.
std::vector<double> css_allocation(const LinearCombination& combination, int mu, int n_atoms);
/// Minimum CSS variance (sum |c_k|)^2 / (mu N).
double css_minimum_variance(const LinearCombination& combination, double mu, double n_atoms);
/// Variance sum c_k^2 / w_k of a CSS estimate with weights w_k = mu_k N_k.
double css_variance(const LinearCombination& combination, const std::vector<double>& weights);

/// Repetitions mu_k proportional to |c_k| for the scanning-microscope strategy.
/// Throws InfeasiblePlan if mu is smaller than the number of nonzero coefficients.
std::vector<int> scanning_allocation(const LinearCombination& combination, int mu);
/// xi^2 sum c_k^2 / (mu_k N); infinite if a nonzero coefficient has mu_k = 0.
double scanning_variance(const LinearCombination& combination, const std::vector<int>& reps, double xi2,
                         double n_atoms);

/// Splits `total` proportionally to `weights` (all >= 0, not all zero) by the
/// largest-remainder method; ties go to the lower index.
std::vector<int> largest_remainder(const std::vector<double>& weights, int total);

}  // namespace spinarray
