#include "spinarray/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "spinarray/errors.hpp"

namespace spinarray {

void ShotSet::validate() const {
  plan.validate();
  if (readouts.size() != plan.entries.size()) throw InvalidInput("shot set: one readout block per configuration");
  for (std::size_t l = 0; l < readouts.size(); ++l) {
    if (readouts[l].rows() != plan.entries[l].reps || readouts[l].cols() != m() || plan.m() != m()) {
      throw InvalidInput(fmt::format("shot set: configuration {} has shape {}x{}, expected {}x{}", l,
                                     readouts[l].rows(), readouts[l].cols(), plan.entries[l].reps, m()));
    }
  }
  for (Eigen::Index k = 0; k < mean_spins.size(); ++k) {
    if (mean_spins[k] == 0.0) throw InvalidInput(fmt::format("shot set: sensor {} has zero mean spin", k + 1));
  }
}

kernels::RowMatrix local_estimates(const ShotSet& shots, int config_index) {
  if (config_index < 0 || config_index >= shots.plan.size()) throw InvalidInput("local_estimates: bad index");
  const auto& signs = shots.plan.entries[static_cast<std::size_t>(config_index)].config.signs;
  Eigen::VectorXd scale(shots.m());
  for (int k = 0; k < shots.m(); ++k) {
    if (shots.mean_spins[k] == 0.0) throw InvalidInput("local_estimates: zero mean spin");
    scale[k] = signs[static_cast<std::size_t>(k)] / shots.mean_spins[k];
  }
  return shots.readouts[static_cast<std::size_t>(config_index)] * scale.asDiagonal();
}

Eigen::VectorXd local_estimate(const ShotSet& shots, int config_index) {
  const auto& block = shots.readouts.at(static_cast<std::size_t>(config_index));
  if (block.rows() < 1) throw InvalidInput("local_estimate: configuration has no shots");
  return local_estimates(shots, config_index).colwise().mean().transpose();
}

std::vector<ConfigurationStatistics> configuration_statistics(const ShotSet& shots) {
  shots.validate();
  std::vector<ConfigurationStatistics> out;
  for (int l = 0; l < shots.plan.size(); ++l) {
    const auto est = local_estimates(shots, l);
    if (est.rows() < 2) throw InfeasiblePlan("configuration_statistics: need at least two shots per configuration");
    const auto mom = kernels::column_moments(est);
    out.push_back({mom.mean, mom.cov / static_cast<double>(est.rows()), static_cast<int>(est.rows())});
  }
  return out;
}

double weight_alpha(double var_sq, double var_asq, int m_sensors) {
  if (!(var_sq > 0.0 && var_asq > 0.0)) throw InvalidInput("weight_alpha: variances must be positive");
  if (m_sensors < 2) return 1.0;
  const double per = var_asq / (m_sensors - 1);
  return std::clamp((per - var_sq) / (per + var_sq), -1.0, 1.0);
}

double weight_alpha_correlated(double var_sq, double var_asq_mean, double cov) {
  const double denom = var_sq + var_asq_mean - 2.0 * cov;
  if (!(denom > 0.0)) return 1.0;
  const double a = (var_asq_mean - cov) / denom;
  return std::clamp(2.0 * a - 1.0, -1.0, 1.0);
}

double fuse_alpha(double theta_sq, std::span<const double> theta_asq, double alpha) {
  if (theta_asq.empty()) return theta_sq;
  double mean = 0.0;
  for (const double t : theta_asq) mean += t;
  mean /= static_cast<double>(theta_asq.size());
  return 0.5 * (1.0 + alpha) * theta_sq + 0.5 * (1.0 - alpha) * mean;
}

double FusionWeights::apply(std::span<const ConfigurationStatistics> stats) const {
  if (stats.size() != x.size()) throw InvalidInput("FusionWeights::apply: size mismatch");
  double v = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) v += x[l].dot(stats[l].mean);
  return v;
}

double FusionWeights::covariance_with(const FusionWeights& other, std::span<const Eigen::MatrixXd> sigmas) const {
  double v = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) v += x[l].dot(sigmas[l] * other.x[l]);
  return v;
}

FusionWeights general_weights(std::span<const Eigen::MatrixXd> sigmas, const Eigen::VectorXd& target) {
  if (sigmas.empty()) throw InvalidInput("general_weights: no configurations");
  const auto m = target.size();
  std::vector<Eigen::MatrixXd> inverses;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t l = 0; l < sigmas.size(); ++l) {
    const auto& s = sigmas[l];
    if (s.rows() != m || s.cols() != m) throw InvalidInput("general_weights: covariance size mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
      throw NumericalFailure(
          fmt::format("general_weights: covariance of configuration {} is singular (eigenvalues {:.3e}..{:.3e})",
                      l, lo, hi),
          lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    }
    inverses.push_back(s.llt().solve(Eigen::MatrixXd::Identity(m, m)));
    info += inverses.back();
  }
  const Eigen::MatrixXd w = info.llt().solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::VectorXd wn = w * target;
  FusionWeights out;
  for (const auto& inv : inverses) out.x.push_back(inv * wn);
  out.variance = target.dot(wn);
  return out;
}

AlphaFusion hadamard_alpha_fusion(const ConfigurationPlan& plan, std::span<const Eigen::MatrixXd> sigmas,
                                  int parameter, bool correlated) {
  const int m = plan.m();
  const auto expected = configuration_set(m);
  if (static_cast<int>(expected.size()) != plan.size()) {
    throw InvalidInput("hadamard_alpha_fusion: plan is not the Hadamard configuration set");
  }
  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (!(plan.entries[j].config == expected[j])) {
      throw InvalidInput("hadamard_alpha_fusion: plan is not the Hadamard configuration set");
    }
  }
  if (parameter < 0 || parameter >= m) throw InvalidInput("hadamard_alpha_fusion: bad parameter index");
  if (sigmas.size() != expected.size()) throw InvalidInput("hadamard_alpha_fusion: one covariance per configuration");

  const int rows = plan.size();
  auto zero = [&] {
    FusionWeights w;
    w.x.assign(static_cast<std::size_t>(rows), Eigen::VectorXd::Zero(m));
    return w;
  };
  auto variance = [&](FusionWeights& w) { w.variance = w.covariance_with(w, sigmas); };

  // theta_k = (1/L) sum_j h_jk (h_j . theta); coefficient j read from configuration (j + shift) mod L.
  auto build = [&](int shift) {
    FusionWeights w = zero();
    for (int j = 0; j < rows; ++j) {
      const auto& h = expected[static_cast<std::size_t>(j)].signs;
      Eigen::VectorXd hv(m);
      for (int k = 0; k < m; ++k) hv[k] = h[static_cast<std::size_t>(k)];
      w.x[static_cast<std::size_t>((j + shift) % rows)] += (h[static_cast<std::size_t>(parameter)] / double(rows)) * hv;
    }
    variance(w);
    return w;
  };

  AlphaFusion out;
  out.squeezed = build(0);
  out.antisqueezed_mean = zero();
  double var_asq_sum = 0.0;
  for (int shift = 1; shift < rows; ++shift) {
    out.antisqueezed.push_back(build(shift));
    var_asq_sum += out.antisqueezed.back().variance;
    for (int l = 0; l < rows; ++l) {
      out.antisqueezed_mean.x[static_cast<std::size_t>(l)] +=
          out.antisqueezed.back().x[static_cast<std::size_t>(l)] / double(rows - 1);
    }
  }
  variance(out.antisqueezed_mean);
  out.var_sq = out.squeezed.variance;
  out.var_asq_mean = out.antisqueezed_mean.variance;
  out.cov = out.squeezed.covariance_with(out.antisqueezed_mean, sigmas);
  if (rows < 2) {
    out.alpha = 1.0;
  } else if (correlated) {
    out.alpha = weight_alpha_correlated(out.var_sq, out.var_asq_mean, out.cov);
  } else {
    out.alpha = weight_alpha(out.var_sq, var_asq_sum / (rows - 1), rows);
  }
  out.fused = zero();
  for (int l = 0; l < rows; ++l) {
    const auto i = static_cast<std::size_t>(l);
    out.fused.x[i] = 0.5 * (1.0 + out.alpha) * out.squeezed.x[i] + 0.5 * (1.0 - out.alpha) * out.antisqueezed_mean.x[i];
  }
  variance(out.fused);
  return out;
}

Gain quantum_gain(double variance, double sql) {
  if (!(sql > 0.0)) throw InvalidInput("quantum_gain: SQL must be positive");
  if (!(variance > 0.0)) throw InvalidInput("quantum_gain: variance must be positive");
  const double ratio = variance / sql;
  return {ratio, to_db(ratio)};
}

double dof_error(double variance, int mu, int dof) {
  if (mu <= dof) throw InvalidInput(fmt::format("dof_error: mu = {} must exceed d.o.f. = {}", mu, dof));
  return variance * std::sqrt(2.0 / (mu - dof));
}

int fusion_dof(int m_sensors, int n_configs) { return m_sensors * n_configs - m_sensors + 1; }

Eigen::VectorXd EstimationReport::estimates() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(parameters.size()));
  for (std::size_t k = 0; k < parameters.size(); ++k) v[static_cast<Eigen::Index>(k)] = parameters[k].estimate;
  return v;
}

Eigen::VectorXd EstimationReport::gain_db() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(parameters.size()));
  for (std::size_t k = 0; k < parameters.size(); ++k) v[static_cast<Eigen::Index>(k)] = parameters[k].gain.db;
  return v;
}

EstimationReport fuse_configurations(std::span<const ConfigurationStatistics> stats, const ConfigurationPlan& plan,
                                     const SensorPartition& partition,
                                     const std::vector<LinearCombination>& combinations,
                                     const Eigen::VectorXd& truth) {
  plan.validate();
  if (stats.size() != plan.entries.size()) throw InvalidInput("fuse_configurations: one statistics block per configuration");
  const int m = plan.m();
  if (partition.m() != m) throw InvalidInput("fuse_configurations: partition and plan disagree on M");
  std::vector<Eigen::MatrixXd> sigmas;
  for (const auto& s : stats) sigmas.push_back(s.sigma);

  EstimationReport report;
  report.mu_total = plan.total_reps();
  report.n_atoms = partition.total_atoms();
  report.dof = fusion_dof(m, plan.size());
  if (report.mu_total <= report.dof) {
    throw InfeasiblePlan(fmt::format("fusion needs more than {} repetitions, plan has {}", report.dof, report.mu_total));
  }
  const double mu = report.mu_total;
  const double n = report.n_atoms;
  const double se_db = 10.0 / std::numbers::ln10 * std::sqrt(2.0 / (mu - report.dof));

  auto solve = [&](std::string label, const Eigen::VectorXd& target, double sql) {
    ParameterResult r;
    r.label = std::move(label);
    r.target = target;
    r.weights = general_weights(sigmas, target);
    r.estimate = r.weights.apply(stats);
    r.truth = truth.size() == m ? target.dot(truth) : 0.0;
    r.variance = r.weights.variance;
    r.sql = sql;
    r.gain = quantum_gain(r.variance, r.sql);
    r.se_gain_db = se_db;
    return r;
  };

  for (int k = 0; k < m; ++k) {
    report.parameters.push_back(solve(fmt::format("theta_{}", k + 1), Eigen::VectorXd::Unit(m, k), m / (mu * n)));
  }
  report.covariance.resize(m, m);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      report.covariance(k, l) = report.parameters[static_cast<std::size_t>(k)].weights.covariance_with(
          report.parameters[static_cast<std::size_t>(l)].weights, sigmas);
    }
  }
  for (std::size_t c = 0; c < combinations.size(); ++c) {
    const auto& comb = combinations[c];
    comb.validate();
    if (comb.m() != m) throw InvalidInput("fuse_configurations: combination length does not match M");
    const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(comb.coeffs.data(), m);
    report.combinations.push_back(solve(fmt::format("combo_{}", c + 1), target, css_minimum_variance(comb, mu, n)));
  }
  report.configuration_gain_db = configuration_gain_matrix(stats, plan, partition);
  return report;
}

Eigen::MatrixXd configuration_gain_matrix(std::span<const ConfigurationStatistics> stats,
                                          const ConfigurationPlan& plan, const SensorPartition& partition) {
  const int rows = plan.size();
  const double n = partition.total_atoms();
  Eigen::MatrixXd out(rows, rows);
  for (int j = 0; j < rows; ++j) {
    const auto comb = combination_from_partition(partition, plan.entries[static_cast<std::size_t>(j)].config);
    const Eigen::VectorXd v = comb.unit_vector();
    for (int l = 0; l < rows; ++l) {
      const auto& s = stats[static_cast<std::size_t>(l)];
      const double var = v.dot(s.sigma * v);
      const double sql = css_minimum_variance(comb, s.reps, n);
      out(l, j) = to_db(var / sql);
    }
  }
  return out;
}

}  // namespace spinarray
