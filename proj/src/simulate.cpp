#include "spinarray/simulate.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "spinarray/errors.hpp"

namespace spinarray {

void ScenarioSpec::validate() const {
  resource.validate();
  partition.validate_against(resource);
  plan.validate();
  if (plan.m() != m()) throw InvalidInput("scenario: plan and partition disagree on the number of sensors");
  if (true_theta.size() != m()) {
    throw InvalidInput(fmt::format("scenario: theta has {} entries, expected {}", true_theta.size(), m()));
  }
  if (!true_theta.allFinite()) throw InvalidInput("scenario: theta must be finite");
  if (!std::isfinite(detection_noise_sd) || detection_noise_sd < 0.0) {
    throw InvalidInput("scenario: detection_noise_sd must be finite and non-negative");
  }
  for (const auto& c : combinations) {
    c.validate();
    if (c.m() != m()) throw InvalidInput("scenario: combination length does not match the number of sensors");
  }
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& psd) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(psd);
  if (eig.info() != Eigen::Success) throw NumericalFailure("symmetric_sqrt: eigendecomposition failed", 0.0);
  Eigen::VectorXd values = eig.eigenvalues();
  const double floor = -1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < floor) {
      throw NumericalFailure(fmt::format("covariance factorization: eigenvalue {:.3e} is negative", values[i]),
                             std::numeric_limits<double>::infinity());
    }
    values[i] = std::sqrt(std::max(values[i], 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

ShotSet sample_shots(const ScenarioSpec& spec) {
  spec.validate();
  const auto model = partition_moments(spec.resource, spec.partition);
  const Eigen::MatrixXd root = symmetric_sqrt(model.gamma);
  ShotSet shots;
  shots.plan = spec.plan;
  shots.mean_spins = spec.partition.mean_spins();
  for (int l = 0; l < spec.plan.size(); ++l) {
    const auto& entry = spec.plan.entries[static_cast<std::size_t>(l)];
    kernels::GaussianSource src;
    src.mean.resize(spec.m());
    for (int k = 0; k < spec.m(); ++k) {
      src.mean[k] = entry.config.signs[static_cast<std::size_t>(k)] * shots.mean_spins[k] * std::sin(spec.true_theta[k]);
    }
    src.sqrt_cov = root;
    src.extra_noise_sd = spec.detection_noise_sd;
    src.seed = spec.seed;
    src.stream = static_cast<std::uint64_t>(l);
    kernels::RowMatrix block(entry.reps, spec.m());
    kernels::sample_gaussian(src, block);
    shots.readouts.push_back(std::move(block));
  }
  return shots;
}

EstimationReport run_protocol(const ScenarioSpec& spec) {
  const auto shots = sample_shots(spec);
  const auto stats = configuration_statistics(shots);
  return fuse_configurations(stats, spec.plan, spec.partition, spec.combinations, spec.true_theta);
}

std::vector<ConfigurationStatistics> analytic_statistics(const ScenarioSpec& spec) {
  spec.validate();
  const auto model = partition_moments(spec.resource, spec.partition);
  std::vector<ConfigurationStatistics> out;
  for (const auto& entry : spec.plan.entries) {
    out.push_back({spec.true_theta,
                   configuration_covariance(model, entry.config.signs, entry.reps, spec.detection_noise_sd),
                   entry.reps});
  }
  return out;
}

EstimationReport analytic_protocol(const ScenarioSpec& spec) {
  const auto stats = analytic_statistics(spec);
  return fuse_configurations(stats, spec.plan, spec.partition, spec.combinations, spec.true_theta);
}

std::vector<double> default_sweep_angles() {
  std::vector<double> out;
  for (const double f : {0.81, 0.71, 0.64, 0.52, 0.40}) {
    const double a = std::atan((1.0 - f) / f);
    out.push_back(a);
    out.push_back(-a);
  }
  return out;
}

std::vector<SweepRow> sweep_mixing_angle(const ScenarioSpec& base, std::span<const double> angles) {
  base.validate();
  if (base.m() != 2) throw InvalidInput("sweep_mixing_angle: requires two sensors");
  const int n = base.resource.n_atoms;
  const double contrast = base.resource.contrast();
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    auto comb = LinearCombination::from_mixing_angle(angles[i]);
    for (double& c : comb.coeffs) {
      if (std::abs(c) < 1e-12) c = 0.0;
    }
    const auto atoms = allocate_atoms(comb, n);

    SweepRow row;
    row.angle = angles[i];
    row.coefficients = comb.coeffs;
    row.atom_counts = atoms;
    row.xi2_db = to_db(base.resource.xi2());

    // Sensors with no atoms drop out of the reduced scenario.
    ScenarioSpec spec;
    spec.resource = base.resource;
    spec.detection_noise_sd = base.detection_noise_sd;
    spec.seed = base.seed + i;
    LinearCombination active;
    SignConfiguration signs;
    std::vector<int> counts;
    std::vector<double> theta;
    for (int k = 0; k < 2; ++k) {
      const double c = comb.coeffs[static_cast<std::size_t>(k)];
      const int s = c < 0.0 ? -1 : 1;
      row.signs.push_back(c == 0.0 ? 0 : s);
      if (c == 0.0) continue;
      active.coeffs.push_back(c);
      signs.signs.push_back(s);
      counts.push_back(atoms[static_cast<std::size_t>(k)]);
      theta.push_back(base.true_theta[k]);
    }
    spec.partition = SensorPartition::with_contrast(counts, contrast);
    spec.plan.entries.push_back({signs, base.plan.total_reps()});
    spec.true_theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    spec.combinations.push_back(active);

    const auto mc = run_protocol(spec).combinations.front();
    row.gain_db = mc.gain.db;
    row.se_gain_db = mc.se_gain_db;
    row.analytic_gain_db = analytic_protocol(spec).combinations.front().gain.db;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, std::span<const int> mu_grid) {
  spec.validate();
  std::vector<ConvergenceRow> rows;
  for (const int mu : mu_grid) {
    ScenarioSpec s = spec;
    s.plan = spec.plan.rescaled(mu);
    const auto report = run_protocol(s);
    const auto& p = report.parameters.front();
    ConvergenceRow row;
    row.mu = report.mu_total;
    row.variance = p.variance;
    row.dof_error = dof_error(p.variance, report.mu_total, report.dof);
    row.analytic_variance = analytic_protocol(s).parameters.front().variance;
    row.gain_db = p.gain.db;
    row.se_gain_db = p.se_gain_db;
    rows.push_back(row);
  }
  return rows;
}

void write_shots_csv(const ShotSet& shots, std::ostream& out) {
  out << "config_index,shot_index";
  for (int k = 0; k < shots.m(); ++k) out << ",S_" << (k + 1) << "^z";
  out << '\n';
  for (std::size_t l = 0; l < shots.readouts.size(); ++l) {
    const auto& block = shots.readouts[l];
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      out << l << ',' << r;
      for (Eigen::Index k = 0; k < block.cols(); ++k) out << fmt::format(",{}", block(r, k));
      out << '\n';
    }
  }
}

}  // namespace spinarray
