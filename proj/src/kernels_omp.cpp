#include <omp.h>

#include <stdexcept>

#include "das/kernels.hpp"
#include "kernels_detail.hpp"

namespace das::kernels::parallel {

void mse_after_observation(const Eigen::MatrixXd& cond_cov, std::span<const int> candidates,
                           double var_floor, std::span<double> out) {
  const double trace = cond_cov.trace();
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (n * cond_cov.rows() > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[i] = detail::mse_after_one(cond_cov, trace, candidates[i], var_floor);
}

void correlation_normalized_scores(std::span<const double> numerators, std::span<const double> max_corr2,
                                   std::span<const int> candidates, double den_floor, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(candidates[i]);
    out[i] = numerators[k] / std::max(max_corr2[k], den_floor);
  }
}

void absorb_row_correlation(const Eigen::MatrixXd& B, int j, std::span<double> max_corr2) {
  if (j < 0 || j >= B.rows()) throw std::invalid_argument("row index out of range");
  if (static_cast<Eigen::Index>(max_corr2.size()) != B.rows()) throw std::invalid_argument("correlation buffer size mismatch");
  const Eigen::Index rows = B.rows();
  constexpr Eigen::Index chunk = 256;
  const Eigen::Index chunks = (rows + chunk - 1) / chunk;
#pragma omp parallel for schedule(static) if (rows * B.cols() > 65536)
  for (Eigen::Index c = 0; c < chunks; ++c)
    detail::absorb_rows(B, j, c * chunk, std::min(rows, (c + 1) * chunk), max_corr2);
}

std::vector<std::uint64_t> aloha_success_counts(std::span<const double> p, int L, std::uint64_t rounds,
                                                std::uint64_t seed) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  const std::size_t K = p.size();
  std::vector<std::uint64_t> counts(K, 0);
  const auto blocks = static_cast<std::int64_t>((rounds + kAlohaBlock - 1) / kAlohaBlock);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(K, 0);
    std::vector<int> occupancy(static_cast<std::size_t>(L));
    std::vector<int> channel(K);
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const auto ub = static_cast<std::uint64_t>(b);
      const std::uint64_t slots = std::min(kAlohaBlock, rounds - ub * kAlohaBlock);
      detail::aloha_block(p, L, slots, detail::block_seed(seed, ub), local, occupancy, channel);
    }
#pragma omp critical
    for (std::size_t k = 0; k < K; ++k) counts[k] += local[k];
  }
  return counts;
}

}  // namespace das::kernels::parallel
