#include "spinarray/kernels.hpp"

#include <random>

#include <omp.h>

namespace spinarray::kernels {

namespace {

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

// Noise draws are made even when extra_noise_sd == 0 so that the projection
// noise sequence is the same for every detection-noise level.
void fill_block(const GaussianSource& src, RowMatrix& out, std::size_t block) {
  const auto m = static_cast<Eigen::Index>(src.mean.size());
  const auto rows = static_cast<std::size_t>(out.rows());
  const std::size_t begin = block * kShotBlock;
  const std::size_t end = std::min(rows, begin + kShotBlock);
  auto engine = block_engine(src.seed, src.stream, block);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(m), w(m);
  for (std::size_t r = begin; r < end; ++r) {
    for (Eigen::Index k = 0; k < m; ++k) z[k] = normal(engine);
    for (Eigen::Index k = 0; k < m; ++k) w[k] = normal(engine);
    out.row(static_cast<Eigen::Index>(r)) =
        (src.mean + src.sqrt_cov * z + src.extra_noise_sd * w).transpose();
  }
}

std::size_t block_count(std::size_t rows) { return (rows + kShotBlock - 1) / kShotBlock; }

}  // namespace

void sample_gaussian_serial(const GaussianSource& src, RowMatrix& out) {
  const std::size_t blocks = block_count(static_cast<std::size_t>(out.rows()));
  for (std::size_t b = 0; b < blocks; ++b) fill_block(src, out, b);
}

void sample_gaussian(const GaussianSource& src, RowMatrix& out) {
  const auto blocks = static_cast<std::int64_t>(block_count(static_cast<std::size_t>(out.rows())));
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) fill_block(src, out, static_cast<std::size_t>(b));
}

ColumnMoments column_moments_serial(const RowMatrix& rows) {
  const Eigen::Index n = rows.rows();
  ColumnMoments out;
  out.mean = rows.colwise().mean().transpose();
  out.cov = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::VectorXd d = rows.row(r).transpose() - out.mean;
    out.cov.noalias() += d * d.transpose();
  }
  if (n > 1) out.cov /= static_cast<double>(n - 1);
  return out;
}

ColumnMoments column_moments(const RowMatrix& rows) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index m = rows.cols();
  const auto blocks = static_cast<std::int64_t>(block_count(static_cast<std::size_t>(n)));
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(blocks));
  std::vector<Eigen::MatrixXd> scatters(static_cast<std::size_t>(blocks));
  std::vector<double> counts(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * static_cast<Eigen::Index>(kShotBlock);
    const Eigen::Index len = std::min<Eigen::Index>(kShotBlock, n - begin);
    const auto block = rows.middleRows(begin, len);
    Eigen::VectorXd mu = block.colwise().mean().transpose();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index r = 0; r < len; ++r) {
      const Eigen::VectorXd d = block.row(r).transpose() - mu;
      s.noalias() += d * d.transpose();
    }
    const auto i = static_cast<std::size_t>(b);
    means[i] = std::move(mu);
    scatters[i] = std::move(s);
    counts[i] = static_cast<double>(len);
  }

  // Chan et al. pairwise combination, in block order.
  ColumnMoments out;
  out.mean = Eigen::VectorXd::Zero(m);
  out.cov = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double nb = counts[i];
    const Eigen::VectorXd delta = means[i] - out.mean;
    const double combined = total + nb;
    out.cov += scatters[i] + delta * delta.transpose() * (total * nb / combined);
    out.mean += delta * (nb / combined);
    total = combined;
  }
  if (n > 1) out.cov /= static_cast<double>(n - 1);
  return out;
}

namespace {

inline std::complex<double> spin_sum_entry(const SpinOp& op, std::span<const int> spins,
                                           const cvec& in, std::size_t x) {
  std::complex<double> acc = 0.0;
  for (const int i : spins) {
    const std::size_t mask = std::size_t{1} << i;
    const std::size_t b = (x & mask) ? 1 : 0;
    acc += op[2 * b + b] * in[x] + op[2 * b + (1 - b)] * in[x ^ mask];
  }
  return acc;
}

}  // namespace

void apply_spin_sum_serial(const SpinOp& op, std::span<const int> spins, const cvec& in, cvec& out) {
  out.assign(in.size(), 0.0);
  for (std::size_t x = 0; x < in.size(); ++x) out[x] = spin_sum_entry(op, spins, in, x);
}

void apply_spin_sum(const SpinOp& op, std::span<const int> spins, const cvec& in, cvec& out) {
  out.assign(in.size(), 0.0);
  const auto dim = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static) if (dim >= 1024)
  for (std::int64_t x = 0; x < dim; ++x) {
    out[static_cast<std::size_t>(x)] = spin_sum_entry(op, spins, in, static_cast<std::size_t>(x));
  }
}

void apply_product_rotation(const SpinOp& op, int n_spins, cvec& state) {
  const auto dim = static_cast<std::int64_t>(state.size());
  for (int i = 0; i < n_spins; ++i) {
    const std::int64_t mask = std::int64_t{1} << i;
#pragma omp parallel for schedule(static) if (dim >= 1024)
    for (std::int64_t x = 0; x < dim; ++x) {
      if (x & mask) continue;
      const auto lo = static_cast<std::size_t>(x);
      const auto hi = static_cast<std::size_t>(x | mask);
      const std::complex<double> up = state[lo];
      const std::complex<double> down = state[hi];
      state[lo] = op[0] * up + op[1] * down;
      state[hi] = op[2] * up + op[3] * down;
    }
  }
}

}  // namespace spinarray::kernels
