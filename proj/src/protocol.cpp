#include "spinarray/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "spinarray/errors.hpp"

namespace spinarray {

void SignConfiguration::validate() const {
  if (signs.empty()) throw InvalidInput("sign configuration: empty");
  for (const int s : signs) {
    if (s != 1 && s != -1) throw InvalidInput(fmt::format("sign configuration: entry {} is not +-1", s));
  }
}

int ConfigurationPlan::total_reps() const {
  int total = 0;
  for (const auto& e : entries) total += e.reps;
  return total;
}

void ConfigurationPlan::validate() const {
  if (entries.empty()) throw InvalidInput("plan: no configurations");
  const int m0 = entries.front().config.m();
  for (const auto& e : entries) {
    e.config.validate();
    if (e.config.m() != m0) throw InvalidInput("plan: configurations of different length");
    if (e.reps < 1) {
      throw InfeasiblePlan(fmt::format("plan: configuration has {} repetitions, need at least 1", e.reps));
    }
  }
}

std::vector<int> largest_remainder(const std::vector<double>& weights, int total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw InvalidInput("largest_remainder: weights sum to zero");
  std::vector<int> out(weights.size());
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] < 0.0) throw InvalidInput("largest_remainder: negative weight");
    const double exact = total * weights[k] / sum;
    out[k] = static_cast<int>(std::floor(exact));
    remainder[k] = exact - out[k];
    assigned += out[k];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++out[order[i % order.size()]];
  return out;
}

ConfigurationPlan ConfigurationPlan::split(const std::vector<SignConfiguration>& configs, int mu_total) {
  if (configs.empty()) throw InvalidInput("plan: no configurations");
  if (mu_total < static_cast<int>(configs.size())) {
    throw InfeasiblePlan(fmt::format("plan: {} repetitions cannot cover {} configurations", mu_total,
                                     configs.size()));
  }
  const auto reps = largest_remainder(std::vector<double>(configs.size(), 1.0), mu_total);
  ConfigurationPlan plan;
  for (std::size_t i = 0; i < configs.size(); ++i) plan.entries.push_back({configs[i], reps[i]});
  plan.validate();
  return plan;
}

ConfigurationPlan ConfigurationPlan::rescaled(int mu_total) const {
  if (mu_total < size()) {
    throw InfeasiblePlan(fmt::format("plan: {} repetitions cannot cover {} configurations", mu_total, size()));
  }
  std::vector<double> weights;
  for (const auto& e : entries) weights.push_back(e.reps);
  const auto reps = largest_remainder(weights, mu_total);
  ConfigurationPlan plan = *this;
  for (std::size_t i = 0; i < reps.size(); ++i) plan.entries[i].reps = reps[i];
  plan.validate();
  return plan;
}

LinearCombination LinearCombination::from_mixing_angle(double alpha) {
  LinearCombination c;
  c.coeffs = {std::cos(alpha), std::sin(alpha)};
  c.mixing_angle = alpha;
  return c;
}

double LinearCombination::l1_norm() const {
  double s = 0.0;
  for (const double c : coeffs) s += std::abs(c);
  return s;
}

Eigen::VectorXd LinearCombination::unit_vector() const {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), m());
  return v / v.norm();
}

void LinearCombination::validate() const {
  if (coeffs.empty()) throw InvalidInput("combination: no coefficients");
  if (!(l1_norm() > 0.0)) throw InvalidInput("combination: all coefficients are zero");
  for (const double c : coeffs) {
    if (!std::isfinite(c)) throw InvalidInput("combination: non-finite coefficient");
  }
}

Eigen::MatrixXi sylvester_hadamard(int order_exponent) {
  if (order_exponent < 0 || order_exponent > 10) {
    throw InvalidInput(fmt::format("sylvester_hadamard: exponent {} outside [0, 10]", order_exponent));
  }
  Eigen::MatrixXi h = Eigen::MatrixXi::Ones(1, 1);
  for (int p = 0; p < order_exponent; ++p) {
    const auto n = h.rows();
    Eigen::MatrixXi next(2 * n, 2 * n);
    next << h, h, h, -h;
    h = std::move(next);
  }
  return h;
}

std::vector<SignConfiguration> configuration_set(int m_sensors) {
  if (m_sensors < 1) throw InvalidInput("configuration_set: need at least one sensor");
  int p = 0;
  while ((1 << p) < m_sensors) ++p;
  const Eigen::MatrixXi h = sylvester_hadamard(p);
  std::vector<SignConfiguration> out;
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    SignConfiguration cfg;
    for (int k = 0; k < m_sensors; ++k) cfg.signs.push_back(h(r, k));
    if (std::find(out.begin(), out.end(), cfg) == out.end()) out.push_back(std::move(cfg));
  }
  return out;
}

std::vector<int> allocate_atoms(const LinearCombination& combination, int n_atoms) {
  combination.validate();
  const int active = static_cast<int>(
      std::count_if(combination.coeffs.begin(), combination.coeffs.end(), [](double c) { return c != 0.0; }));
  if (n_atoms < active) {
    throw InfeasiblePlan(fmt::format("allocate_atoms: {} atoms for {} active sensors", n_atoms, active));
  }
  std::vector<double> weights;
  for (const double c : combination.coeffs) weights.push_back(std::abs(c));
  auto counts = largest_remainder(weights, n_atoms);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (weights[k] > 0.0 && counts[k] == 0) {
      throw InfeasiblePlan(fmt::format(
          "allocate_atoms: sensor {} has coefficient {} but rounds to zero atoms out of {}", k + 1,
          combination.coeffs[k], n_atoms));
    }
  }
  return counts;
}

LinearCombination combination_from_partition(const SensorPartition& partition, const SignConfiguration& signs) {
  if (signs.m() != partition.m()) throw InvalidInput("combination_from_partition: size mismatch");
  signs.validate();
  LinearCombination c;
  double norm2 = 0.0;
  for (int k = 0; k < partition.m(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double v = signs.signs[i] * static_cast<double>(partition.atom_counts[i]);
    c.coeffs.push_back(v);
    norm2 += v * v;
  }
  for (double& v : c.coeffs) v /= std::sqrt(norm2);
  return c;
}

std::vector<double> css_allocation(const LinearCombination& combination, int mu, int n_atoms) {
  combination.validate();
  const double budget = static_cast<double>(mu) * n_atoms;
  const auto active = std::count_if(combination.coeffs.begin(), combination.coeffs.end(),
                                    [](double c) { return c != 0.0; });
  if (budget < static_cast<double>(active)) {
    throw InfeasiblePlan("css_allocation: mu N smaller than the number of active sensors");
  }
  const double b = budget / combination.l1_norm();
  std::vector<double> out;
  for (const double c : combination.coeffs) out.push_back(b * std::abs(c));
  return out;
}

double css_minimum_variance(const LinearCombination& combination, double mu, double n_atoms) {
  const double l1 = combination.l1_norm();
  return l1 * l1 / (mu * n_atoms);
}

double css_variance(const LinearCombination& combination, const std::vector<double>& weights) {
  if (weights.size() != combination.coeffs.size()) throw InvalidInput("css_variance: size mismatch");
  double v = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double c = combination.coeffs[k];
    if (c == 0.0) continue;
    if (!(weights[k] > 0.0)) return std::numeric_limits<double>::infinity();
    v += c * c / weights[k];
  }
  return v;
}

std::vector<int> scanning_allocation(const LinearCombination& combination, int mu) {
  combination.validate();
  const int active = static_cast<int>(
      std::count_if(combination.coeffs.begin(), combination.coeffs.end(), [](double c) { return c != 0.0; }));
  if (mu < active) {
    throw InfeasiblePlan(fmt::format(
        "scanning_allocation: {} preparations cannot scan {} sensors with nonzero coefficients", mu, active));
  }
  std::vector<double> weights;
  for (const double c : combination.coeffs) weights.push_back(std::abs(c));
  auto reps = largest_remainder(weights, mu);
  // Rounding can starve a small coefficient; move one repetition from the largest.
  for (std::size_t k = 0; k < reps.size(); ++k) {
    if (weights[k] > 0.0 && reps[k] == 0) {
      const auto donor = static_cast<std::size_t>(std::max_element(reps.begin(), reps.end()) - reps.begin());
      --reps[donor];
      reps[k] = 1;
    }
  }
  return reps;
}

double scanning_variance(const LinearCombination& combination, const std::vector<int>& reps, double xi2,
                         double n_atoms) {
  if (reps.size() != combination.coeffs.size()) throw InvalidInput("scanning_variance: size mismatch");
  double v = 0.0;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const double c = combination.coeffs[k];
    if (c == 0.0) continue;
    if (reps[k] <= 0) return std::numeric_limits<double>::infinity();
    v += c * c * xi2 / (reps[k] * n_atoms);
  }
  return v;
}

}  // namespace spinarray
