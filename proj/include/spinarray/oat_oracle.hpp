#pragma once
//
// Exact one-axis-twisting states, exp(-i chi_t Sz^2) |CSS_x>, followed by an
// optional rotation about x. Two independent representations:
//
//   * the (N+1)-dimensional symmetric (Dicke) subspace, index i <-> m = N/2 - i;
//   * the full 2^N product basis (N <= 12), bit i of the index is 1 when spin i
//     is down.
//
// Rotation convention, used everywhere: R(phi) = exp(-i phi Sx), so that
//   R^dag Sy R = Sy cos(phi) - Sz sin(phi),  R^dag Sz R = Sz cos(phi) + Sy sin(phi).
//

#include <vector>

#include <Eigen/Dense>

#include "spinarray/moments.hpp"

namespace spinarray {

struct OATState {
  int n_atoms = 0;
  double twist_phase = 0.0;
  double rotation_x = 0.0;
  Eigen::VectorXcd amplitudes;  // length N + 1
};

struct CollectiveMoments {
  double mean_sx = 0.0, mean_sy = 0.0, mean_sz = 0.0;
  double var_sx = 0.0, var_sy = 0.0, var_sz = 0.0;
  double cov_yz = 0.0;  // symmetrized
  double xi2 = 0.0;     // N Var(Sz) / <Sx>^2
};

OATState evolve_oat(int n_atoms, double twist_phase);
/// Returns a copy of `state` rotated by `angle` about x.
OATState rotate_x(const OATState& state, double angle);
/// Angle about x that minimizes Var(Sz) of the rotated state, in (-pi/2, pi/2].
/// Returns 0 when the transverse noise is isotropic.
double optimal_rotation(const OATState& state);
CollectiveMoments collective_moments(const OATState& state);

/// Twisted and then aligned so that the squeezed quadrature is along z.
OATState aligned_oat(int n_atoms, double twist_phase);
/// xi^2 of the aligned state, computed without materializing the rotation.
double aligned_xi2(int n_atoms, double twist_phase);
/// Twist minimizing aligned_xi2 (dense grid, then golden section to 1e-6).
double best_squeezing_twist(int n_atoms);
/// Moments of an (aligned) state in resource form, Var(Sy) included.
SqueezedResource resource_from_state(const OATState& state);

inline constexpr int kMaxBruteForceAtoms = 12;

struct ProductBasisMoments {
  CollectiveMoments global;
  Eigen::MatrixXd gamma;     // Cov(S_k^z, S_l^z)
  Eigen::MatrixXd cov_sy;    // Cov(S_k^y, S_l^y)
  Eigen::MatrixXd response;  // i <[S_k^z, S_l^y]>, equal to diag <S_k^x>
  Eigen::VectorXd mean_sx;   // <S_k^x>
};

/// Full 2^N calculation with sensor k holding a contiguous block of atom_counts[k] spins.
ProductBasisMoments brute_force_moments(int n_atoms, double twist_phase, double rotation_x,
                                        const std::vector<int>& atom_counts);
/// Gamma only. Rejects n_atoms > 12.
Eigen::MatrixXd brute_force_partition_moments(int n_atoms, double twist_phase, double rotation_x,
                                              const SensorPartition& partition);

}  // namespace spinarray
