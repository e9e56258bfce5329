#pragma once
//
// Data-parallel inner loops. Every kernel has a plain serial reference (used by
// the tests and the benchmark) and an OpenMP version used by the library. The
// OpenMP versions partition work into fixed-size blocks so their output does
// not depend on the number of threads.
//

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinarray::kernels {

inline constexpr std::size_t kShotBlock = 1024;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GaussianSource {
  Eigen::VectorXd mean;     // length M
  Eigen::MatrixXd sqrt_cov; // M x M, cov = sqrt_cov * sqrt_cov^T
  double extra_noise_sd = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // configuration index
};

// Fills `out` (shots x M) with draws mean + sqrt_cov*z + extra_noise_sd*w.
// Shot block b uses its own engine seeded from (seed, stream, b).
void sample_gaussian_serial(const GaussianSource& src, RowMatrix& out);
void sample_gaussian(const GaussianSource& src, RowMatrix& out);

struct ColumnMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (divides by n-1)
};

// Straightforward two-pass reference.
ColumnMoments column_moments_serial(const RowMatrix& rows);
// Blocked pairwise accumulation; blocks are combined in a fixed order.
ColumnMoments column_moments(const RowMatrix& rows);

using cvec = std::vector<std::complex<double>>;

// Product-basis action of sum_{i in spins} op_i, where op is a 2x2 matrix in
// the (|up>, |down>) basis and bit i of the basis index is 1 for |down>.
using SpinOp = std::array<std::complex<double>, 4>;  // row-major 2x2
void apply_spin_sum_serial(const SpinOp& op, std::span<const int> spins, const cvec& in, cvec& out);
void apply_spin_sum(const SpinOp& op, std::span<const int> spins, const cvec& in, cvec& out);

// Product-basis action of op on every spin, i.e. op^{(x) N}. `state` is updated in place.
void apply_product_rotation(const SpinOp& op, int n_spins, cvec& state);

}  // namespace spinarray::kernels
