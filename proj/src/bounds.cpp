#include "spinarray/bounds.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "spinarray/errors.hpp"

namespace spinarray {

namespace {

double require_var_sy(const SqueezedResource& resource) {
  if (!resource.var_sy) throw InvalidInput("fisher_matrix: the resource has no Var(Sy)");
  return *resource.var_sy;
}

}  // namespace

FisherSpectrum fisher_matrix(const SqueezedResource& resource, int m_sensors) {
  const double vy = require_var_sy(resource);
  if (m_sensors < 1 || resource.n_atoms % m_sensors != 0) {
    throw InvalidInput(fmt::format("fisher_matrix: {} atoms cannot be split equally over {} sensors",
                                   resource.n_atoms, m_sensors));
  }
  const double n = resource.n_atoms;
  const double m = m_sensors;
  const std::vector<double> counts(static_cast<std::size_t>(m_sensors), n / m);
  FisherSpectrum out;
  out.matrix = 4.0 * symmetric_partition_covariance(n, vy, counts);
  out.lambda_sq = (n / m) * vy / (n / 4.0);
  out.lambda_asq = m_sensors == 1 ? out.lambda_sq : (n / m) / (n - 1.0) * (n - vy / (n / 4.0));
  return out;
}

Eigen::MatrixXd fisher_matrix(const SqueezedResource& resource, const SensorPartition& partition) {
  const double vy = require_var_sy(resource);
  partition.validate_against(resource);
  const std::vector<double> counts(partition.atom_counts.begin(), partition.atom_counts.end());
  return 4.0 * symmetric_partition_covariance(resource.n_atoms, vy, counts);
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("harmonic_mean: no values");
  double s = 0.0;
  for (const double v : values) {
    if (!(v > 0.0)) throw InvalidInput(fmt::format("harmonic_mean: entry {} is not positive", v));
    s += 1.0 / v;
  }
  return static_cast<double>(values.size()) / s;
}

CrbResult crb_check(const Eigen::MatrixXd& estimator_cov, const FisherSpectrum& fisher, int mu, double tolerance) {
  if (estimator_cov.rows() != fisher.matrix.rows() || estimator_cov.cols() != fisher.matrix.cols()) {
    throw InvalidInput("crb_check: covariance and Fisher matrix sizes differ");
  }
  if (mu < 1) throw InvalidInput("crb_check: mu must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cov_eig(estimator_cov, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> f_eig(fisher.matrix, Eigen::EigenvaluesOnly);
  std::vector<double> sigma(cov_eig.eigenvalues().data(),
                            cov_eig.eigenvalues().data() + cov_eig.eigenvalues().size());
  std::vector<double> lambda;
  for (Eigen::Index i = 0; i < f_eig.eigenvalues().size(); ++i) {
    const double f = f_eig.eigenvalues()[i];
    if (!(f > 0.0)) throw NumericalFailure("crb_check: Fisher matrix is singular", std::numeric_limits<double>::infinity());
    lambda.push_back(1.0 / (mu * f));
  }
  CrbResult out;
  out.sigma_h = harmonic_mean(sigma);
  out.lambda_h = harmonic_mean(lambda);
  out.ratio = out.sigma_h / out.lambda_h;
  out.satisfied = out.sigma_h >= out.lambda_h - tolerance;
  return out;
}

CrbResult crb_for_scenario(const ScenarioSpec& spec, CrbMethod method) {
  spec.validate();
  CrbResult out;
  out.pure_state = spec.detection_noise_sd == 0.0;
  if (!spec.partition.is_equal_split() || spec.resource.n_atoms % spec.m() != 0) {
    out.applicable = false;
    return out;
  }
  SqueezedResource resource = spec.resource;
  resource.var_sy = resource.var_sy_or_minimum();
  const auto fisher = fisher_matrix(resource, spec.m());
  const auto report = method == CrbMethod::Analytic ? analytic_protocol(spec) : run_protocol(spec);
  double tolerance = 1e-10;
  if (method == CrbMethod::MonteCarlo) {
    const auto probe = crb_check(report.covariance, fisher, report.mu_total);
    tolerance = 3.0 * probe.sigma_h * std::sqrt(2.0 / (report.mu_total - report.dof));
  }
  const bool pure = out.pure_state;
  out = crb_check(report.covariance, fisher, report.mu_total, tolerance);
  out.pure_state = pure;
  return out;
}

}  // namespace spinarray
