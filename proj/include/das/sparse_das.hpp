#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "das/csv.hpp"
#include "das/rng.hpp"
#include "das/scenario.hpp"

namespace das {

inline constexpr double kCorrelationFloor = 1e-12;
inline constexpr double kRelativeRecoveryTolerance = 1e-9;

struct RecoveryOptions {
  // Forced-first-atom restarts tried when the plain greedy pass plus atom
  // exchange leaves a residual above tolerance. Negative means every column.
  int restart_budget = -1;
  bool exchange = true;
};

struct RecoveryState {
  Eigen::VectorXd s_hat;  // zeros off the support
  Eigen::VectorXd v;      // B s_hat; filled by callers that know B
  std::vector<int> support;
  double residual_norm = 0.0;
  // Best residual after each accepted step; non-increasing.
  std::vector<double> residual_history;
};

/// Greedy sparse recovery of s from w = Psi s with at most S_max atoms.
///
/// Orthogonal matching first: add the column most correlated with the
/// residual and re-solve least squares on the support until the residual is
/// at most `tol` or the support holds min(S_max, N) atoms. If that stalls
/// above tolerance, single-atom exchanges are applied while they lower the
/// residual, then the same two passes are restarted with each column forced
/// first. When N >= M and Psi has full column rank, the full least-squares
/// solution pruned to its S_max largest entries is the last resort. Least
/// squares is minimum-norm throughout, so rank-deficient supports are safe.
RecoveryState sparse_recover(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& w, int S_max, double tol,
                             const RecoveryOptions& options = {});

enum class SparsePolicy { Das, Rrs };
std::string to_string(SparsePolicy p);
SparsePolicy sparse_policy_from_string(const std::string& s);

// argmax over uncollected k of (b_k . s_hat)^2; ties to the lowest index.
int select_next_sparse_naive(const SparseScene& scene, const RecoveryState& state,
                             const std::vector<int>& collected);

// L greedy picks maximising min_{i in collected} (b_k . s_hat)^2 / max((b_k . b_i)^2, 1e-12);
// each pick joins the collected set for the following picks. With nothing
// collected the first pick falls back to select_next_sparse_naive.
std::vector<int> select_next_sparse(const SparseScene& scene, const RecoveryState& state,
                                    const std::vector<int>& collected, int L);

// Each selected slot survives with probability 1 - error_prob; an errored slot
// is replaced by a uniform draw among nodes that are neither selected nor
// collected nor already used as a replacement this round, or dropped when no
// such node is left.
std::vector<int> apply_downlink_errors(const std::vector<int>& selected, const std::vector<int>& collected, int K,
                                       double error_prob, Rng& rng);

struct SparseRound {
  std::vector<int> requested;
  std::vector<int> delivered;
  double mse = 0.0;  // ||x - B s_hat||^2
  int cumulative_uploads = 0;
};

struct SparseTrajectory {
  SparsePolicy policy = SparsePolicy::Das;
  double error_prob = 0.0;
  double signal_energy = 0.0;  // ||x||^2
  std::vector<SparseRound> rounds;
  RecoveryState final_state;
};

// Round 1 polls L uniformly random nodes under either policy. Later rounds use
// the policy. The last round may be partial, so rounds <= ceil(K / L).
SparseTrajectory run_sparse_das(const SparseScene& scene, int L, int rounds, SparsePolicy policy,
                                double error_prob, std::uint64_t seed, const RecoveryOptions& options = {});

// First round (1-based) with mse <= rel * ||x||^2, or rounds + 1 if none.
int rounds_to_threshold(const SparseTrajectory& traj, double rel);

// Columns: trial, round, policy, error_prob, mse, cumulative_uploads.
CsvTable sparse_table();
void append_sparse_rows(CsvTable& table, const SparseTrajectory& traj, int trial);

}  // namespace das
