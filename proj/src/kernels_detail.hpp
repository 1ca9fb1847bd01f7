#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "das/rng.hpp"

namespace das::kernels::detail {

inline double mse_after_one(const Eigen::MatrixXd& c, double trace, int k, double var_floor) {
  const double ckk = c(k, k);
  if (ckk <= var_floor) return trace;
  return trace - c.col(k).squaredNorm() / ckk;
}

// Folds (b_k . b_j)^2 into max_corr2 for rows [begin, end). Sweeps columns so
// memory access stays contiguous; the per-row summation order does not depend
// on the range, which keeps serial and parallel results identical.
inline void absorb_rows(const Eigen::MatrixXd& B, int j, Eigen::Index begin, Eigen::Index end,
                        std::span<double> max_corr2) {
  if (begin >= end) return;
  Eigen::VectorXd dot = Eigen::VectorXd::Zero(end - begin);
  for (Eigen::Index m = 0; m < B.cols(); ++m) {
    const double bj = B(j, m);
    const double* col = B.col(m).data() + begin;
    for (Eigen::Index i = 0; i < end - begin; ++i) dot[i] += col[i] * bj;
  }
  for (Eigen::Index i = 0; i < end - begin; ++i) {
    const double c2 = dot[i] * dot[i];
    if (c2 > max_corr2[static_cast<std::size_t>(begin + i)]) max_corr2[static_cast<std::size_t>(begin + i)] = c2;
  }
}

// One block of ALOHA slots; adds to `counts`. `occupancy` and `channel` are
// scratch buffers sized L and p.size().
inline void aloha_block(std::span<const double> p, int L, std::uint64_t slots, std::uint64_t seed,
                        std::vector<std::uint64_t>& counts, std::vector<int>& occupancy,
                        std::vector<int>& channel) {
  Rng rng = make_rng(seed);
  const std::size_t K = p.size();
  for (std::uint64_t s = 0; s < slots; ++s) {
    std::fill(occupancy.begin(), occupancy.end(), 0);
    for (std::size_t k = 0; k < K; ++k) {
      channel[k] = -1;
      if (uniform01(rng) < p[k]) {
        channel[k] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(L)));
        ++occupancy[static_cast<std::size_t>(channel[k])];
      }
    }
    for (std::size_t k = 0; k < K; ++k)
      if (channel[k] >= 0 && occupancy[static_cast<std::size_t>(channel[k])] == 1) ++counts[k];
  }
}

inline std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) {
  return derive_seed(seed, Stream::Access, block);
}

}  // namespace das::kernels::detail
