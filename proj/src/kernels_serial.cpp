#include "das/kernels.hpp"

#include <stdexcept>

#include "kernels_detail.hpp"

namespace das::kernels::serial {

void mse_after_observation(const Eigen::MatrixXd& cond_cov, std::span<const int> candidates,
                           double var_floor, std::span<double> out) {
  const double trace = cond_cov.trace();
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out[i] = detail::mse_after_one(cond_cov, trace, candidates[i], var_floor);
}

void correlation_normalized_scores(std::span<const double> numerators, std::span<const double> max_corr2,
                                   std::span<const int> candidates, double den_floor, std::span<double> out) {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto k = static_cast<std::size_t>(candidates[i]);
    out[i] = numerators[k] / std::max(max_corr2[k], den_floor);
  }
}

void absorb_row_correlation(const Eigen::MatrixXd& B, int j, std::span<double> max_corr2) {
  if (j < 0 || j >= B.rows()) throw std::invalid_argument("row index out of range");
  if (static_cast<Eigen::Index>(max_corr2.size()) != B.rows()) throw std::invalid_argument("correlation buffer size mismatch");
  detail::absorb_rows(B, j, 0, B.rows(), max_corr2);
}

std::vector<std::uint64_t> aloha_success_counts(std::span<const double> p, int L, std::uint64_t rounds,
                                                std::uint64_t seed) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  std::vector<std::uint64_t> counts(p.size(), 0);
  std::vector<int> occupancy(static_cast<std::size_t>(L));
  std::vector<int> channel(p.size());
  const std::uint64_t blocks = (rounds + kAlohaBlock - 1) / kAlohaBlock;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const std::uint64_t slots = std::min(kAlohaBlock, rounds - b * kAlohaBlock);
    detail::aloha_block(p, L, slots, detail::block_seed(seed, b), counts, occupancy, channel);
  }
  return counts;
}

}  // namespace das::kernels::serial
