#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "das/csv.hpp"
#include "das/scenario.hpp"

namespace das {

// Pivots at or below this are treated as linearly determined by the nodes
// already conditioned on.
inline constexpr double kPivotFloor = 1e-12;
inline constexpr double kEntropyVarianceFloor = 1e-300;

/// Incremental conditioning of a zero-mean Gaussian vector on observed
/// coordinates.
///
/// Keeps W = L^{-1} cov[C, :] where L L^T = cov[C, C] is built one pivot at a
/// time, so the conditional covariance is cov - W^T W and adding a node costs
/// O(|C| K). A node whose pivot falls below kPivotFloor is marked observed but
/// kept out of the factor: it carries no information beyond the current basis.
class GaussianConditioner {
 public:
  explicit GaussianConditioner(const Eigen::MatrixXd& cov);

  int size() const { return static_cast<int>(cov_.rows()); }
  bool observed(int k) const { return observed_[static_cast<std::size_t>(k)] != 0; }
  const std::vector<int>& basis() const { return basis_; }

  // Conditions on node k (value optional). Returns false when k was
  // redundant. Throws std::invalid_argument if k is already observed.
  bool observe(int k);
  bool observe(int k, double value);

  // Conditional variance of node k, clamped below at 0; 0 for observed nodes.
  double variance(int k) const;

  // Full K x K conditional covariance with observed rows/columns zeroed.
  Eigen::MatrixXd covariance() const;

  // Conditional mean given the values passed to observe(k, value); observed
  // entries are returned exactly as given.
  Eigen::VectorXd mean() const;

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd W_;       // basis_.size() x K, rows beyond rank_ unused
  Eigen::VectorXd alpha_;   // L^{-1} x_basis
  std::vector<int> basis_;
  std::vector<char> observed_;
  std::vector<double> observed_value_;
  bool values_known_ = true;
};

// Conditional moments over the uncollected indices.
struct ConditionalStats {
  std::vector<int> base;         // collected indices conditioned on
  std::vector<int> uncollected;  // order of the rows below
  Eigen::VectorXd cond_mean;
  Eigen::MatrixXd cond_cov;
};

ConditionalStats conditional_stats(const GaussianField& field, const std::vector<int>& collected,
                                   const std::vector<double>& values);

double conditional_variance(const GaussianField& field, const std::vector<int>& collected, int k);

// 0.5 ln(2 pi e sigma^2) with sigma^2 floored at kEntropyVarianceFloor.
double gaussian_entropy(double variance);
double conditional_entropy(const GaussianField& field, const std::vector<int>& collected, int k);

// Joint entropy of all uncollected nodes given the collected ones, by the
// chain rule over a pivoted factorization; variances floored as above.
double remaining_entropy(const GaussianConditioner& cond);

int select_next_entropy(const GaussianField& field, const std::vector<int>& collected);
int select_next_mse(const GaussianField& field, const std::vector<int>& collected);

Eigen::VectorXd mmse_estimate(const GaussianField& field, const std::vector<int>& collected,
                              const std::vector<double>& values);

enum class Selector { Entropy, Mse };
std::string to_string(Selector s);
Selector selector_from_string(const std::string& s);

struct RoundTrace {
  std::vector<int> selected;
  std::vector<double> criterion;  // entropy gap (Entropy) or expected MSE after the pick (Mse)
  double mse = 0.0;               // ||x - x_hat||^2 after the round's uploads
  double expected_mse = 0.0;      // trace of the conditional covariance after the round
};

struct SelectionTrace {
  Selector selector = Selector::Entropy;
  int L = 1;
  double initial_mse = 0.0;  // ||x||^2, nothing collected
  double initial_expected_mse = 0.0;
  std::vector<RoundTrace> rounds;

  std::vector<int> order() const;
};

SelectionTrace run_centralized_das(const GaussianField& field, Selector selector, int rounds, int L);

// Mean Euclidean distance between consecutively uploaded nodes.
double mean_hop_distance(const GaussianField& field, const std::vector<int>& order);

// Columns: round, selected_indices, criterion_value, mse (trial prepended when
// trial >= 0).
CsvTable trace_table(bool with_trial);
void append_trace_rows(CsvTable& table, const SelectionTrace& trace, int trial = -1);

// Columns: t, k, x, y.
CsvTable path_table(const GaussianField& field, const std::vector<int>& order);

}  // namespace das
