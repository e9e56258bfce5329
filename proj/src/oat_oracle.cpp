#include "spinarray/oat_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>

#include "spinarray/errors.hpp"
#include "spinarray/kernels.hpp"

namespace spinarray {

namespace {

using cd = std::complex<double>;

struct LadderOps {
  int n;
  double j;
  double m(int i) const { return j - i; }
  // <m+1| J+ |m>
  double raise(int i) const { return std::sqrt(j * (j + 1.0) - m(i) * (m(i) + 1.0)); }
};

// Sx psi, Sy psi, Sz psi in the Dicke basis.
void apply_collective(const Eigen::VectorXcd& psi, Eigen::VectorXcd& sx, Eigen::VectorXcd& sy,
                      Eigen::VectorXcd& sz) {
  const int n = static_cast<int>(psi.size()) - 1;
  const LadderOps ops{n, n / 2.0};
  Eigen::VectorXcd up = Eigen::VectorXcd::Zero(n + 1);
  Eigen::VectorXcd down = Eigen::VectorXcd::Zero(n + 1);
  sz.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    sz[i] = ops.m(i) * psi[i];
    if (i > 0) up[i - 1] += ops.raise(i) * psi[i];
    // <m-1| J- |m> = <m| J+ |m-1>
    if (i < n) down[i + 1] += ops.raise(i + 1) * psi[i];
  }
  sx = 0.5 * (up + down);
  sy = cd(0.0, -0.5) * (up - down);
}

CollectiveMoments moments_of(const Eigen::VectorXcd& psi) {
  Eigen::VectorXcd sx, sy, sz;
  apply_collective(psi, sx, sy, sz);
  CollectiveMoments out;
  out.mean_sx = psi.dot(sx).real();
  out.mean_sy = psi.dot(sy).real();
  out.mean_sz = psi.dot(sz).real();
  out.var_sx = sx.squaredNorm() - out.mean_sx * out.mean_sx;
  out.var_sy = sy.squaredNorm() - out.mean_sy * out.mean_sy;
  out.var_sz = sz.squaredNorm() - out.mean_sz * out.mean_sz;
  out.cov_yz = sy.dot(sz).real() - out.mean_sy * out.mean_sz;
  const int n = static_cast<int>(psi.size()) - 1;
  out.xi2 = n * out.var_sz / (out.mean_sx * out.mean_sx);
  return out;
}

// Minimum over phi of Vz cos^2 + Vy sin^2 + 2 Cyz sin cos.
struct QuadratureFit {
  double angle;
  double min_variance;
};

QuadratureFit fit_quadrature(double var_sy, double var_sz, double cov_yz) {
  const double half_diff = 0.5 * (var_sz - var_sy);
  const double radius = std::hypot(half_diff, cov_yz);
  const double mean = 0.5 * (var_sz + var_sy);
  const double scale = std::max(1.0, mean);
  if (radius <= 1e-13 * scale) return {0.0, mean};
  double angle = 0.5 * std::atan2(-cov_yz, -half_diff);
  if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
  return {angle, mean - radius};
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

OATState evolve_oat(int n_atoms, double twist_phase) {
  if (n_atoms < 2) throw InvalidInput("evolve_oat: need at least two atoms");
  if (!(twist_phase >= 0.0)) throw InvalidInput("evolve_oat: twist phase must be >= 0");
  OATState state;
  state.n_atoms = n_atoms;
  state.twist_phase = twist_phase;
  state.amplitudes.resize(n_atoms + 1);
  const double j = n_atoms / 2.0;
  const double log_norm = -0.5 * n_atoms * std::log(2.0);
  for (int i = 0; i <= n_atoms; ++i) {
    const double m = j - i;
    const double magnitude = std::exp(0.5 * log_binomial(n_atoms, i) + log_norm);
    state.amplitudes[i] = std::polar(magnitude, -twist_phase * m * m);
  }
  return state;
}

OATState rotate_x(const OATState& state, double angle) {
  const int n = state.n_atoms;
  Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(n + 1, n + 1);
  const LadderOps ops{n, n / 2.0};
  for (int i = 1; i <= n; ++i) {
    const double e = 0.5 * ops.raise(i);
    sx(i - 1, i) = e;
    sx(i, i - 1) = e;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sx);
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::VectorXcd coeffs = v.transpose().cast<cd>() * state.amplitudes;
  for (int i = 0; i <= n; ++i) coeffs[i] *= std::polar(1.0, -angle * eig.eigenvalues()[i]);
  OATState out = state;
  out.amplitudes = v.cast<cd>() * coeffs;
  out.rotation_x = state.rotation_x + angle;
  return out;
}

double optimal_rotation(const OATState& state) {
  const CollectiveMoments mom = moments_of(state.amplitudes);
  return fit_quadrature(mom.var_sy, mom.var_sz, mom.cov_yz).angle;
}

CollectiveMoments collective_moments(const OATState& state) { return moments_of(state.amplitudes); }

OATState aligned_oat(int n_atoms, double twist_phase) {
  const OATState twisted = evolve_oat(n_atoms, twist_phase);
  return rotate_x(twisted, optimal_rotation(twisted));
}

double aligned_xi2(int n_atoms, double twist_phase) {
  const CollectiveMoments mom = moments_of(evolve_oat(n_atoms, twist_phase).amplitudes);
  const QuadratureFit fit = fit_quadrature(mom.var_sy, mom.var_sz, mom.cov_yz);
  return n_atoms * fit.min_variance / (mom.mean_sx * mom.mean_sx);
}

double best_squeezing_twist(int n_atoms) {
  if (n_atoms < 3) throw InvalidInput("best_squeezing_twist: need at least three atoms");
  const double upper = 3.0 * std::pow(static_cast<double>(n_atoms), -2.0 / 3.0);
  constexpr int kGrid = 400;
  const double step = upper / kGrid;
  int best = 1;
  double best_value = aligned_xi2(n_atoms, step);
  for (int g = 2; g <= kGrid; ++g) {
    const double v = aligned_xi2(n_atoms, g * step);
    if (v < best_value) {
      best_value = v;
      best = g;
    }
  }
  double a = (best - 1) * step;
  double b = (best + 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = aligned_xi2(n_atoms, c);
  double fd = aligned_xi2(n_atoms, d);
  while (b - a > 1e-6) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = aligned_xi2(n_atoms, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = aligned_xi2(n_atoms, d);
    }
  }
  return 0.5 * (a + b);
}

SqueezedResource resource_from_state(const OATState& state) {
  const CollectiveMoments mom = collective_moments(state);
  SqueezedResource r;
  r.n_atoms = state.n_atoms;
  r.var_sz = mom.var_sz;
  r.mean_sx = std::min(mom.mean_sx, 0.5 * state.n_atoms);
  r.var_sy = mom.var_sy;
  return r;
}

ProductBasisMoments brute_force_moments(int n_atoms, double twist_phase, double rotation_x,
                                        const std::vector<int>& atom_counts) {
  if (n_atoms < 1 || n_atoms > kMaxBruteForceAtoms) {
    throw InvalidInput(fmt::format("brute force: n_atoms must be in [1, {}], got {}",
                                   kMaxBruteForceAtoms, n_atoms));
  }
  int total = 0;
  for (const int c : atom_counts) {
    if (c < 1) throw InvalidInput("brute force: every sensor needs at least one atom");
    total += c;
  }
  if (total != n_atoms) throw InvalidInput("brute force: atom counts do not sum to n_atoms");

  const std::size_t dim = std::size_t{1} << n_atoms;
  kernels::cvec psi(dim, cd(std::pow(2.0, -0.5 * n_atoms), 0.0));
  for (std::size_t x = 0; x < dim; ++x) {
    const double m = 0.5 * n_atoms - std::popcount(x);
    psi[x] *= std::polar(1.0, -twist_phase * m * m);
  }
  const double c = std::cos(0.5 * rotation_x);
  const double s = std::sin(0.5 * rotation_x);
  kernels::apply_product_rotation({cd(c, 0), cd(0, -s), cd(0, -s), cd(c, 0)}, n_atoms, psi);

  const kernels::SpinOp half_x{cd(0), cd(0.5), cd(0.5), cd(0)};
  const kernels::SpinOp half_y{cd(0), cd(0, -0.5), cd(0, 0.5), cd(0)};
  const std::size_t m = atom_counts.size();
  std::vector<kernels::cvec> xs(m), ys(m), zs(m);
  int offset = 0;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<int> spins(static_cast<std::size_t>(atom_counts[k]));
    for (int i = 0; i < atom_counts[k]; ++i) spins[static_cast<std::size_t>(i)] = offset + i;
    offset += atom_counts[k];
    kernels::apply_spin_sum(half_x, spins, psi, xs[k]);
    kernels::apply_spin_sum(half_y, spins, psi, ys[k]);
    std::size_t mask = 0;
    for (const int i : spins) mask |= std::size_t{1} << i;
    zs[k].resize(dim);
    for (std::size_t x = 0; x < dim; ++x) {
      zs[k][x] = (0.5 * atom_counts[k] - std::popcount(x & mask)) * psi[x];
    }
  }

  auto inner = [dim](const kernels::cvec& a, const kernels::cvec& b) {
    cd acc = 0.0;
    for (std::size_t x = 0; x < dim; ++x) acc += std::conj(a[x]) * b[x];
    return acc;
  };

  ProductBasisMoments out;
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::VectorXd mx(mi), my(mi), mz(mi);
  for (std::size_t k = 0; k < m; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    mx[ki] = inner(psi, xs[k]).real();
    my[ki] = inner(psi, ys[k]).real();
    mz[ki] = inner(psi, zs[k]).real();
  }
  out.mean_sx = mx;
  out.gamma.resize(mi, mi);
  out.cov_sy.resize(mi, mi);
  out.response.resize(mi, mi);
  Eigen::MatrixXd sxx(mi, mi), syz(mi, mi);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = 0; l < m; ++l) {
      const auto ki = static_cast<Eigen::Index>(k);
      const auto li = static_cast<Eigen::Index>(l);
      out.gamma(ki, li) = inner(zs[k], zs[l]).real() - mz[ki] * mz[li];
      out.cov_sy(ki, li) = inner(ys[k], ys[l]).real() - my[ki] * my[li];
      out.response(ki, li) = -2.0 * inner(zs[k], ys[l]).imag();
      sxx(ki, li) = inner(xs[k], xs[l]).real();
      syz(ki, li) = inner(ys[k], zs[l]).real();
    }
  }
  CollectiveMoments& g = out.global;
  g.mean_sx = mx.sum();
  g.mean_sy = my.sum();
  g.mean_sz = mz.sum();
  g.var_sx = sxx.sum() - g.mean_sx * g.mean_sx;
  g.var_sy = out.cov_sy.sum();
  g.var_sz = out.gamma.sum();
  g.cov_yz = syz.sum() - g.mean_sy * g.mean_sz;
  g.xi2 = n_atoms * g.var_sz / (g.mean_sx * g.mean_sx);
  return out;
}

Eigen::MatrixXd brute_force_partition_moments(int n_atoms, double twist_phase, double rotation_x,
                                              const SensorPartition& partition) {
  return brute_force_moments(n_atoms, twist_phase, rotation_x, partition.atom_counts).gamma;
}

}  // namespace spinarray
