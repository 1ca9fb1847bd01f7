#pragma once

// Data-parallel inner loops. Each kernel exists twice with the same
// signature: `serial` is the reference implementation kept for testing,
// `parallel` is the OpenMP version used by the runners. Both produce
// bit-identical results.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace das::kernels {

// Slots per independently seeded ALOHA block.
inline constexpr std::uint64_t kAlohaBlock = 4096;

namespace serial {

// Expected squared reconstruction error after additionally observing each
// candidate: trace(C) - ||C[:,k]||^2 / C[k][k]. Candidates with
// C[k][k] <= var_floor leave the trace unchanged.
void mse_after_observation(const Eigen::MatrixXd& cond_cov, std::span<const int> candidates,
                           double var_floor, std::span<double> out);

// num[k] / max(max_corr2[k], den_floor) for each candidate k.
void correlation_normalized_scores(std::span<const double> numerators, std::span<const double> max_corr2,
                                   std::span<const int> candidates, double den_floor, std::span<double> out);

// max_corr2[k] = max(max_corr2[k], (b_k . b_j)^2) over all rows k of B.
void absorb_row_correlation(const Eigen::MatrixXd& B, int j, std::span<double> max_corr2);

// Per-node success counts over `rounds` multichannel ALOHA slots. Slots are
// grouped in blocks of kAlohaBlock, each with its own stream derived from
// `seed`, so counts do not depend on the thread count.
std::vector<std::uint64_t> aloha_success_counts(std::span<const double> p, int L, std::uint64_t rounds,
                                                std::uint64_t seed);

}  // namespace serial

namespace parallel {

void mse_after_observation(const Eigen::MatrixXd& cond_cov, std::span<const int> candidates,
                           double var_floor, std::span<double> out);

void correlation_normalized_scores(std::span<const double> numerators, std::span<const double> max_corr2,
                                   std::span<const int> candidates, double den_floor, std::span<double> out);

void absorb_row_correlation(const Eigen::MatrixXd& B, int j, std::span<double> max_corr2);

std::vector<std::uint64_t> aloha_success_counts(std::span<const double> p, int L, std::uint64_t rounds,
                                                std::uint64_t seed);

}  // namespace parallel

}  // namespace das::kernels
