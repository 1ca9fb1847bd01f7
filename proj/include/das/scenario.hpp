#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace das {

using Point = std::array<double, 2>;
using IndexList = std::vector<int>;

// Diagonal loading applied only when drawing samples from a field covariance.
inline constexpr double kSamplingJitter = 1e-10;

// Nodes in the unit square with exp(-distance) correlation and one draw of
// the field.
struct GaussianField {
  int K = 0;
  std::vector<Point> positions;
  Eigen::MatrixXd cov;  // unjittered kernel values
  Eigen::VectorXd x;
  std::uint64_t seed = 0;
};

// x = B s with s exactly S-sparse.
struct SparseScene {
  int K = 0;
  int M = 0;
  int S = 0;
  Eigen::MatrixXd B;  // K x M, unit-norm rows
  Eigen::VectorXd s;
  Eigen::VectorXd x;
  std::uint64_t seed = 0;
};

// Bernoulli-Gaussian measurements combined by a Gaussian matrix, y = G x.
struct QueryScene {
  int K = 0;
  int m = 0;
  double p_s = 0.0;
  double significance_threshold = 0.0;
  Eigen::MatrixXd G;  // m x K
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;

  // ||g_k x_k||, or 0 when |x_k| <= significance_threshold.
  Eigen::VectorXd contribution_norms() const;
};

struct RoundRecord {
  int round = 0;
  IndexList selected;   // requested by the base station (empty for random access)
  IndexList delivered;  // actually uploaded this round
};

// Append-only record of which node values have reached the base station.
class CollectionState {
 public:
  explicit CollectionState(int K = 0);

  int node_count() const { return K_; }
  int round() const { return round_; }
  const IndexList& collected() const { return collected_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<RoundRecord>& history() const { return history_; }
  std::size_t size() const { return collected_.size(); }

  bool contains(int k) const;
  bool complete() const { return static_cast<int>(collected_.size()) == K_; }
  IndexList uncollected() const;
  const std::vector<char>& mask() const { return in_set_; }

  // Appends one round. Throws std::invalid_argument on duplicates or
  // out-of-range indices; the state is unchanged in that case.
  void record_round(const IndexList& selected, const IndexList& delivered,
                    const std::vector<double>& delivered_values);

 private:
  int K_;
  int round_ = 0;
  IndexList collected_;
  std::vector<double> values_;
  std::vector<char> in_set_;
  std::vector<RoundRecord> history_;
};

Eigen::MatrixXd exp_distance_kernel(const std::vector<Point>& positions);

// Builds a field on the given positions and samples x with `seed`.
GaussianField field_from_positions(std::vector<Point> positions, std::uint64_t seed);

GaussianField gen_gaussian_field(int K, std::uint64_t seed);

// B[k][m] = exp(-|k/K - c_m| / (2/M)), c_m equally spaced in [0,1], rows
// scaled to unit norm.
Eigen::MatrixXd exp_dictionary(int K, int M);

SparseScene gen_sparse_scene(int K, int M, int S, std::uint64_t seed);

QueryScene gen_query_scene(int K, int m, double p_s, std::uint64_t seed,
                           double significance_threshold = 0.0);

void to_json(nlohmann::json& j, const GaussianField& f);
void from_json(const nlohmann::json& j, GaussianField& f);
void to_json(nlohmann::json& j, const SparseScene& s);
void from_json(const nlohmann::json& j, SparseScene& s);
void to_json(nlohmann::json& j, const QueryScene& q);
void from_json(const nlohmann::json& j, QueryScene& q);

}  // namespace das
