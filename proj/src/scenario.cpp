#include "das/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "das/rng.hpp"

namespace das {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index j = 0; j < a.cols(); ++j) row[j] = a(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument("matrix row count mismatch");
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(i);
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) a(i, c) = row.at(c).get<double>();
  }
  return a;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index n) {
  auto vals = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(vals.size()) != n) throw std::invalid_argument("vector length mismatch");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), n);
}

}  // namespace

Eigen::VectorXd QueryScene::contribution_norms() const {
  Eigen::VectorXd out(K);
  for (int k = 0; k < K; ++k) {
    out[k] = std::abs(x[k]) <= significance_threshold ? 0.0 : G.col(k).norm() * std::abs(x[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

CollectionState::CollectionState(int K) : K_(K), in_set_(static_cast<std::size_t>(std::max(K, 0)), 0) {
  if (K < 0) throw std::invalid_argument("node count must be non-negative");
}

bool CollectionState::contains(int k) const {
  return k >= 0 && k < K_ && in_set_[static_cast<std::size_t>(k)] != 0;
}

IndexList CollectionState::uncollected() const {
  IndexList out;
  out.reserve(static_cast<std::size_t>(K_) - collected_.size());
  for (int k = 0; k < K_; ++k)
    if (!in_set_[static_cast<std::size_t>(k)]) out.push_back(k);
  return out;
}

void CollectionState::record_round(const IndexList& selected, const IndexList& delivered,
                                   const std::vector<double>& delivered_values) {
  if (delivered.size() != delivered_values.size())
    throw std::invalid_argument("delivered indices and values differ in length");
  std::vector<char> seen(in_set_);
  for (int k : delivered) {
    if (k < 0 || k >= K_) throw std::invalid_argument("node index " + std::to_string(k) + " out of range");
    if (seen[static_cast<std::size_t>(k)]) throw std::invalid_argument("node " + std::to_string(k) + " already collected");
    seen[static_cast<std::size_t>(k)] = 1;
  }
  in_set_ = std::move(seen);
  collected_.insert(collected_.end(), delivered.begin(), delivered.end());
  values_.insert(values_.end(), delivered_values.begin(), delivered_values.end());
  ++round_;
  history_.push_back({round_, selected, delivered});
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd exp_distance_kernel(const std::vector<Point>& positions) {
  const auto K = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXd cov(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    cov(i, i) = 1.0;
    for (Eigen::Index k = i + 1; k < K; ++k) {
      const double dx = positions[i][0] - positions[k][0];
      const double dy = positions[i][1] - positions[k][1];
      cov(i, k) = cov(k, i) = std::exp(-std::hypot(dx, dy));
    }
  }
  return cov;
}

GaussianField field_from_positions(std::vector<Point> positions, std::uint64_t seed) {
  if (positions.empty()) throw std::invalid_argument("field needs at least one node");
  GaussianField f;
  f.K = static_cast<int>(positions.size());
  f.positions = std::move(positions);
  f.cov = exp_distance_kernel(f.positions);
  f.seed = seed;

  Eigen::MatrixXd jittered = f.cov;
  jittered.diagonal().array() += kSamplingJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance factorization failed");

  Rng rng = make_rng(derive_seed(seed, Stream::Scene, 1));
  Eigen::VectorXd z(f.K);
  for (int k = 0; k < f.K; ++k) z[k] = standard_normal(rng);
  f.x = llt.matrixL() * z;
  return f;
}

GaussianField gen_gaussian_field(int K, std::uint64_t seed) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  Rng rng = make_rng(derive_seed(seed, Stream::Scene, 0));
  std::vector<Point> pos(static_cast<std::size_t>(K));
  for (auto& p : pos) {
    p[0] = uniform01(rng);
    p[1] = uniform01(rng);
  }
  return field_from_positions(std::move(pos), seed);
}

Eigen::MatrixXd exp_dictionary(int K, int M) {
  if (K < 1 || M < 1) throw std::invalid_argument("dictionary dimensions must be positive");
  const double length_scale = 2.0 / M;
  Eigen::MatrixXd B(K, M);
  for (int k = 0; k < K; ++k) {
    const double pos = static_cast<double>(k) / K;
    for (int m = 0; m < M; ++m) {
      const double center = M > 1 ? static_cast<double>(m) / (M - 1) : 0.0;
      B(k, m) = std::exp(-std::abs(pos - center) / length_scale);
    }
    B.row(k) /= B.row(k).norm();
  }
  return B;
}

SparseScene gen_sparse_scene(int K, int M, int S, std::uint64_t seed) {
  if (S < 1) throw std::invalid_argument("S must be >= 1");
  if (S > M) throw std::invalid_argument("S must not exceed M");
  if (M > K) throw std::invalid_argument("M must not exceed K");
  SparseScene sc;
  sc.K = K;
  sc.M = M;
  sc.S = S;
  sc.seed = seed;
  sc.B = exp_dictionary(K, M);

  Rng rng = make_rng(derive_seed(seed, Stream::Scene, 0));
  std::vector<int> atoms(static_cast<std::size_t>(M));
  std::iota(atoms.begin(), atoms.end(), 0);
  for (int i = 0; i < S; ++i) {
    const auto j = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(M - i)));
    std::swap(atoms[i], atoms[j]);
  }
  sc.s = Eigen::VectorXd::Zero(M);
  for (int i = 0; i < S; ++i) {
    double v = 0.0;
    while (v == 0.0) v = standard_normal(rng);
    sc.s[atoms[i]] = v;
  }
  sc.x = sc.B * sc.s;
  return sc;
}

QueryScene gen_query_scene(int K, int m, double p_s, std::uint64_t seed, double significance_threshold) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (!(p_s >= 0.0 && p_s <= 1.0)) throw std::invalid_argument("p_s must lie in [0, 1]");
  if (!(significance_threshold >= 0.0)) throw std::invalid_argument("significance threshold must be >= 0");
  QueryScene q;
  q.K = K;
  q.m = m;
  q.p_s = p_s;
  q.significance_threshold = significance_threshold;
  q.seed = seed;

  Rng rng = make_rng(derive_seed(seed, Stream::Scene, 0));
  q.G.resize(m, K);
  for (int k = 0; k < K; ++k)
    for (int r = 0; r < m; ++r) q.G(r, k) = standard_normal(rng);
  q.x = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    if (uniform01(rng) < p_s) q.x[k] = standard_normal(rng);
  }
  q.y = q.G * q.x;
  return q;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const GaussianField& f) {
  std::vector<std::vector<double>> pos;
  for (const auto& p : f.positions) pos.push_back({p[0], p[1]});
  j = {{"kind", "gaussian_field"}, {"K", f.K}, {"seed", f.seed}, {"positions", pos},
       {"cov", matrix_to_json(f.cov)}, {"x", vector_to_json(f.x)}};
}

void from_json(const nlohmann::json& j, GaussianField& f) {
  f.K = j.at("K").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.positions.clear();
  for (const auto& p : j.at("positions")) f.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  if (static_cast<int>(f.positions.size()) != f.K) throw std::invalid_argument("positions length mismatch");
  f.cov = matrix_from_json(j.at("cov"), f.K, f.K);
  f.x = vector_from_json(j.at("x"), f.K);
}

void to_json(nlohmann::json& j, const SparseScene& s) {
  j = {{"kind", "sparse_scene"}, {"K", s.K}, {"M", s.M}, {"S", s.S}, {"seed", s.seed},
       {"B", matrix_to_json(s.B)}, {"s", vector_to_json(s.s)}, {"x", vector_to_json(s.x)}};
}

void from_json(const nlohmann::json& j, SparseScene& s) {
  s.K = j.at("K").get<int>();
  s.M = j.at("M").get<int>();
  s.S = j.at("S").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.B = matrix_from_json(j.at("B"), s.K, s.M);
  s.s = vector_from_json(j.at("s"), s.M);
  s.x = vector_from_json(j.at("x"), s.K);
}

void to_json(nlohmann::json& j, const QueryScene& q) {
  j = {{"kind", "query_scene"}, {"K", q.K}, {"m", q.m}, {"p_s", q.p_s},
       {"significance_threshold", q.significance_threshold}, {"seed", q.seed},
       {"G", matrix_to_json(q.G)}, {"x", vector_to_json(q.x)}, {"y", vector_to_json(q.y)}};
}

void from_json(const nlohmann::json& j, QueryScene& q) {
  q.K = j.at("K").get<int>();
  q.m = j.at("m").get<int>();
  q.p_s = j.at("p_s").get<double>();
  q.significance_threshold = j.value("significance_threshold", 0.0);
  q.seed = j.at("seed").get<std::uint64_t>();
  q.G = matrix_from_json(j.at("G"), q.m, q.K);
  q.x = vector_from_json(j.at("x"), q.K);
  q.y = vector_from_json(j.at("y"), q.m);
}

}  // namespace das
