#include "spinarray/moments.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "spinarray/errors.hpp"

namespace spinarray {

SqueezedResource SqueezedResource::from_squeezing(int n_atoms, double xi2, double contrast,
                                                  std::optional<double> var_sy) {
  SqueezedResource r;
  r.n_atoms = n_atoms;
  r.mean_sx = contrast * n_atoms / 2.0;
  r.var_sz = xi2 * r.mean_sx * r.mean_sx / n_atoms;
  r.var_sy = var_sy;
  r.validate();
  return r;
}

SqueezedResource SqueezedResource::coherent(int n_atoms) {
  return from_squeezing(n_atoms, 1.0, 1.0, n_atoms / 4.0);
}

double SqueezedResource::var_sy_or_minimum() const {
  if (var_sy) return *var_sy;
  return mean_sx * mean_sx / (4.0 * var_sz);
}

void SqueezedResource::validate() const {
  if (n_atoms < 1) throw InvalidInput("resource: n_atoms must be positive");
  if (!(var_sz >= 0.0) || !std::isfinite(var_sz)) throw InvalidInput("resource: var_sz must be >= 0");
  if (!(mean_sx > 0.0) || !std::isfinite(mean_sx)) throw InvalidInput("resource: mean_sx must be > 0");
  if (mean_sx > 0.5 * n_atoms * (1.0 + 1e-12)) {
    throw InvalidInput(fmt::format("resource: contrast {} exceeds 1", contrast()));
  }
  if (var_sy) {
    if (!(*var_sy > 0.0)) throw InvalidInput("resource: var_sy must be > 0");
    if (*var_sy * var_sz < mean_sx * mean_sx / 4.0 * (1.0 - 1e-9)) {
      throw InvalidInput(fmt::format(
          "resource: Var(Sy) Var(Sz) = {} violates the uncertainty bound <Sx>^2/4 = {}",
          *var_sy * var_sz, mean_sx * mean_sx / 4.0));
    }
  }
}

SensorPartition SensorPartition::equal(int n_atoms, int m_sensors, double contrast) {
  if (m_sensors < 1) throw InvalidInput("partition: need at least one sensor");
  if (n_atoms < m_sensors) throw InvalidInput("partition: fewer atoms than sensors");
  SensorPartition p;
  p.atom_counts.assign(static_cast<std::size_t>(m_sensors), n_atoms / m_sensors);
  for (int k = 0; k < n_atoms % m_sensors; ++k) ++p.atom_counts[static_cast<std::size_t>(k)];
  p.contrasts.assign(static_cast<std::size_t>(m_sensors), contrast);
  return p;
}

SensorPartition SensorPartition::with_contrast(std::vector<int> atom_counts, double contrast) {
  SensorPartition p;
  p.contrasts.assign(atom_counts.size(), contrast);
  p.atom_counts = std::move(atom_counts);
  p.validate();
  return p;
}

int SensorPartition::total_atoms() const {
  return std::accumulate(atom_counts.begin(), atom_counts.end(), 0);
}

bool SensorPartition::is_equal_split() const {
  for (std::size_t k = 1; k < atom_counts.size(); ++k) {
    if (atom_counts[k] != atom_counts[0] || contrasts[k] != contrasts[0]) return false;
  }
  return true;
}

Eigen::VectorXd SensorPartition::mean_spins() const {
  Eigen::VectorXd g(m());
  for (int k = 0; k < m(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    g[k] = contrasts[i] * atom_counts[i] / 2.0;
  }
  return g;
}

void SensorPartition::validate() const {
  if (atom_counts.empty()) throw InvalidInput("partition: need at least one sensor");
  if (contrasts.size() != atom_counts.size()) {
    throw InvalidInput(fmt::format("partition: {} contrasts for {} sensors", contrasts.size(),
                                   atom_counts.size()));
  }
  for (std::size_t k = 0; k < atom_counts.size(); ++k) {
    if (atom_counts[k] < 1) throw InvalidInput(fmt::format("partition: sensor {} has no atoms", k + 1));
    if (!(contrasts[k] > 0.0 && contrasts[k] <= 1.0)) {
      throw InvalidInput(fmt::format("partition: contrast of sensor {} not in (0, 1]", k + 1));
    }
  }
}

void SensorPartition::validate_against(const SqueezedResource& resource) const {
  validate();
  if (total_atoms() != resource.n_atoms) {
    throw InvalidInput(fmt::format("partition: atom counts sum to {} but the resource has {} atoms",
                                   total_atoms(), resource.n_atoms));
  }
}

double pair_covariance(const SqueezedResource& resource) {
  const double n = resource.n_atoms;
  if (resource.n_atoms < 2) throw InvalidInput("pair_covariance: need at least two atoms");
  return (4.0 * resource.var_sz - n) / (4.0 * n * (n - 1.0));
}

Eigen::MatrixXd symmetric_partition_covariance(double n_atoms, double global_variance,
                                               std::span<const double> atom_counts) {
  if (n_atoms < 2.0) throw InvalidInput("partition covariance: need at least two atoms");
  const double c = (4.0 * global_variance - n_atoms) / (4.0 * n_atoms * (n_atoms - 1.0));
  const auto m = static_cast<Eigen::Index>(atom_counts.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double nk = atom_counts[static_cast<std::size_t>(k)];
    for (Eigen::Index l = 0; l < m; ++l) {
      const double nl = atom_counts[static_cast<std::size_t>(l)];
      out(k, l) = (k == l) ? nk / 4.0 + nk * (nk - 1.0) * c : nk * nl * c;
    }
  }
  return out;
}

MomentModel partition_moments(const SqueezedResource& resource, const SensorPartition& partition) {
  resource.validate();
  partition.validate_against(resource);
  std::vector<double> counts(partition.atom_counts.begin(), partition.atom_counts.end());
  MomentModel model;
  model.pair_cov = pair_covariance(resource);
  model.gamma = symmetric_partition_covariance(resource.n_atoms, resource.var_sz, counts);
  model.response = partition.mean_spins().asDiagonal();
  return model;
}

namespace {

void check_conditioning(const Eigen::MatrixXd& gamma, const char* who) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw NumericalFailure(fmt::format("{}: Gamma is not positive definite (smallest eigenvalue {:.3e})",
                                       who, lo),
                           std::numeric_limits<double>::infinity());
  }
  const double cond = hi / lo;
  if (cond > kMaxConditionNumber) {
    throw NumericalFailure(fmt::format("{}: Gamma condition number {:.3e} exceeds {:.0e}", who, cond,
                                       kMaxConditionNumber),
                           cond);
  }
}

}  // namespace

Eigen::MatrixXd estimator_covariance(const MomentModel& model, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("estimator_covariance: mu must be positive");
  check_conditioning(model.gamma, "estimator_covariance");
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(model.gamma);
  const Eigen::MatrixXd info = model.response.transpose() * ldlt.solve(model.response);
  const Eigen::MatrixXd cov = info.inverse() / mu;
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd configuration_covariance(const MomentModel& model, std::span<const int> signs,
                                         double mu_lambda, double detection_noise_sd) {
  const auto m = model.gamma.rows();
  if (static_cast<Eigen::Index>(signs.size()) != m) {
    throw InvalidInput("configuration_covariance: sign vector length does not match M");
  }
  if (!(mu_lambda > 0.0)) throw InvalidInput("configuration_covariance: mu must be positive");
  Eigen::VectorXd scale(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    scale[k] = signs[static_cast<std::size_t>(k)] / model.response(k, k);
  }
  Eigen::MatrixXd readout = model.gamma;
  readout.diagonal().array() += detection_noise_sd * detection_noise_sd;
  return scale.asDiagonal() * readout * scale.asDiagonal() / mu_lambda;
}

namespace {

void require_sensors(int m_sensors, int minimum, const char* who) {
  if (m_sensors < minimum) throw InvalidInput(fmt::format("{}: need at least {} sensor(s)", who, minimum));
}

}  // namespace

double local_gain(const SqueezedResource& resource, int m_sensors) {
  require_sensors(m_sensors, 1, "local_gain");
  const double n = resource.n_atoms;
  const double m = m_sensors;
  const double xi2 = resource.xi2();
  const double sx2 = resource.mean_sx * resource.mean_sx;
  if (m_sensors == 1) return xi2;
  return xi2 / m + n * n * n * (m - 1.0) / (4.0 * m * (n - 1.0) * sx2) - xi2 * (m - 1.0) / (m * (n - 1.0));
}

double antisqueezed_gain(const SqueezedResource& resource) {
  if (resource.n_atoms < 2) throw InvalidInput("antisqueezed_gain: need at least two atoms");
  const double n = resource.n_atoms;
  const double sx2 = resource.mean_sx * resource.mean_sx;
  return n * n * n / (4.0 * (n - 1.0) * sx2) - resource.xi2() / (n - 1.0);
}

double joint_gain(const SqueezedResource& resource, int m_sensors, GainForm form) {
  require_sensors(m_sensors, 1, "joint_gain");
  const double m = m_sensors;
  const double xi2 = resource.xi2();
  if (m_sensors == 1) return xi2;
  if (form == GainForm::LargeN) {
    const double c2 = resource.contrast() * resource.contrast();
    return m * xi2 / (1.0 + (m - 1.0) * c2 * xi2);
  }
  return m / (1.0 / xi2 + (m - 1.0) / antisqueezed_gain(resource));
}

}  // namespace spinarray
