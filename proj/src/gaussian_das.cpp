#include "das/gaussian_das.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "das/kernels.hpp"

namespace das {

GaussianConditioner::GaussianConditioner(const Eigen::MatrixXd& cov)
    : cov_(cov),
      W_(0, cov.cols()),
      alpha_(0),
      observed_(static_cast<std::size_t>(cov.rows()), 0),
      observed_value_(static_cast<std::size_t>(cov.rows()), 0.0) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
}

bool GaussianConditioner::observe(int k) {
  const bool informative = observe(k, 0.0);
  values_known_ = false;
  return informative;
}

bool GaussianConditioner::observe(int k, double value) {
  if (k < 0 || k >= size()) throw std::invalid_argument("node index " + std::to_string(k) + " out of range");
  if (observed(k)) throw std::invalid_argument("node " + std::to_string(k) + " already observed");
  observed_[static_cast<std::size_t>(k)] = 1;
  observed_value_[static_cast<std::size_t>(k)] = value;

  const Eigen::Index r = static_cast<Eigen::Index>(basis_.size());
  const Eigen::VectorXd wk = W_.col(k);
  const double pivot = cov_(k, k) - wk.squaredNorm();
  if (pivot <= kPivotFloor) return false;

  const double root = std::sqrt(pivot);
  Eigen::RowVectorXd row = (cov_.row(k) - wk.transpose() * W_) / root;
  W_.conservativeResize(r + 1, Eigen::NoChange);
  W_.row(r) = row;
  alpha_.conservativeResize(r + 1);
  alpha_[r] = (value - wk.dot(alpha_.head(r))) / root;
  basis_.push_back(k);
  return true;
}

double GaussianConditioner::variance(int k) const {
  if (observed(k)) return 0.0;
  return std::max(0.0, cov_(k, k) - W_.col(k).squaredNorm());
}

Eigen::MatrixXd GaussianConditioner::covariance() const {
  Eigen::MatrixXd c = cov_;
  if (W_.rows() > 0) c.noalias() -= W_.transpose() * W_;
  for (int k = 0; k < size(); ++k) {
    if (observed(k)) {
      c.row(k).setZero();
      c.col(k).setZero();
    } else if (c(k, k) < 0.0) {
      c(k, k) = 0.0;
    }
  }
  return c;
}

Eigen::VectorXd GaussianConditioner::mean() const {
  if (!values_known_) throw std::logic_error("conditional mean requested after index-only observations");
  Eigen::VectorXd m = W_.rows() > 0 ? Eigen::VectorXd(W_.transpose() * alpha_) : Eigen::VectorXd::Zero(size());
  for (int k = 0; k < size(); ++k)
    if (observed(k)) m[k] = observed_value_[static_cast<std::size_t>(k)];
  return m;
}

// ---------------------------------------------------------------------------

namespace {

GaussianConditioner condition_on(const GaussianField& field, const std::vector<int>& collected) {
  GaussianConditioner cond(field.cov);
  for (int c : collected) cond.observe(c);
  return cond;
}

std::vector<int> candidates_of(const GaussianConditioner& cond) {
  std::vector<int> out;
  for (int k = 0; k < cond.size(); ++k)
    if (!cond.observed(k)) out.push_back(k);
  if (out.empty()) throw std::invalid_argument("every node is already collected");
  return out;
}

// Ties keep the lowest index: candidates are ascending and only a strictly
// better score replaces the incumbent.
int pick_entropy(const GaussianConditioner& cond, const std::vector<int>& candidates, double* best_entropy) {
  int best = -1;
  double best_h = -std::numeric_limits<double>::infinity();
  for (int k : candidates) {
    const double h = gaussian_entropy(cond.variance(k));
    if (best < 0 || h > best_h) {
      best = k;
      best_h = h;
    }
  }
  if (best_entropy) *best_entropy = best_h;
  return best;
}

int pick_mse(const GaussianConditioner& cond, const std::vector<int>& candidates, double* best_mse) {
  const Eigen::MatrixXd c = cond.covariance();
  std::vector<double> scores(candidates.size());
  kernels::parallel::mse_after_observation(c, candidates, kPivotFloor, scores);
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  if (best_mse) *best_mse = scores[best];
  return candidates[best];
}

}  // namespace

ConditionalStats conditional_stats(const GaussianField& field, const std::vector<int>& collected,
                                   const std::vector<double>& values) {
  if (collected.size() != values.size()) throw std::invalid_argument("collected indices and values differ in length");
  GaussianConditioner cond(field.cov);
  for (std::size_t i = 0; i < collected.size(); ++i) cond.observe(collected[i], values[i]);
  ConditionalStats st;
  st.base = collected;
  for (int k = 0; k < cond.size(); ++k)
    if (!cond.observed(k)) st.uncollected.push_back(k);
  const Eigen::VectorXd m = cond.mean();
  const Eigen::MatrixXd c = cond.covariance();
  const auto n = static_cast<Eigen::Index>(st.uncollected.size());
  st.cond_mean.resize(n);
  st.cond_cov.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.cond_mean[i] = m[st.uncollected[i]];
    for (Eigen::Index j = 0; j < n; ++j) st.cond_cov(i, j) = c(st.uncollected[i], st.uncollected[j]);
  }
  return st;
}

double conditional_variance(const GaussianField& field, const std::vector<int>& collected, int k) {
  if (k < 0 || k >= field.K) throw std::invalid_argument("node index out of range");
  for (int c : collected)
    if (c == k) throw std::invalid_argument("node " + std::to_string(k) + " is already collected");
  return condition_on(field, collected).variance(k);
}

double gaussian_entropy(double variance) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * std::max(variance, kEntropyVarianceFloor));
}

double conditional_entropy(const GaussianField& field, const std::vector<int>& collected, int k) {
  return gaussian_entropy(conditional_variance(field, collected, k));
}

double remaining_entropy(const GaussianConditioner& cond) {
  GaussianConditioner chain(cond.covariance());
  double h = 0.0;
  for (int k = 0; k < cond.size(); ++k) {
    if (cond.observed(k)) continue;
    h += gaussian_entropy(chain.variance(k));
    chain.observe(k);
  }
  return h;
}

int select_next_entropy(const GaussianField& field, const std::vector<int>& collected) {
  const auto cond = condition_on(field, collected);
  return pick_entropy(cond, candidates_of(cond), nullptr);
}

int select_next_mse(const GaussianField& field, const std::vector<int>& collected) {
  const auto cond = condition_on(field, collected);
  return pick_mse(cond, candidates_of(cond), nullptr);
}

Eigen::VectorXd mmse_estimate(const GaussianField& field, const std::vector<int>& collected,
                              const std::vector<double>& values) {
  if (collected.size() != values.size()) throw std::invalid_argument("collected indices and values differ in length");
  GaussianConditioner cond(field.cov);
  for (std::size_t i = 0; i < collected.size(); ++i) cond.observe(collected[i], values[i]);
  return cond.mean();
}

std::string to_string(Selector s) { return s == Selector::Entropy ? "entropy" : "mse"; }

Selector selector_from_string(const std::string& s) {
  if (s == "entropy") return Selector::Entropy;
  if (s == "mse") return Selector::Mse;
  throw std::invalid_argument("unknown selector '" + s + "'");
}

std::vector<int> SelectionTrace::order() const {
  std::vector<int> out;
  for (const auto& r : rounds) out.insert(out.end(), r.selected.begin(), r.selected.end());
  return out;
}

SelectionTrace run_centralized_das(const GaussianField& field, Selector selector, int rounds, int L) {
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (static_cast<long>(rounds) * L > field.K)
    throw std::invalid_argument("rounds * L exceeds the number of nodes");

  SelectionTrace trace;
  trace.selector = selector;
  trace.L = L;
  trace.initial_mse = field.x.squaredNorm();
  trace.initial_expected_mse = field.cov.trace();

  // Conditional covariances do not depend on observed values, so picks within
  // a round can condition on the value as soon as the index is chosen.
  GaussianConditioner cond(field.cov);
  for (int t = 0; t < rounds; ++t) {
    RoundTrace rt;
    for (int l = 0; l < L; ++l) {
      const auto candidates = candidates_of(cond);
      int k = -1;
      double value = 0.0;
      if (selector == Selector::Entropy) {
        const double remaining = remaining_entropy(cond);
        double h = 0.0;
        k = pick_entropy(cond, candidates, &h);
        value = remaining - h;
      } else {
        k = pick_mse(cond, candidates, &value);
      }
      cond.observe(k, field.x[k]);
      rt.selected.push_back(k);
      rt.criterion.push_back(value);
    }
    rt.mse = (field.x - cond.mean()).squaredNorm();
    rt.expected_mse = cond.covariance().trace();
    trace.rounds.push_back(std::move(rt));
  }
  return trace;
}

double mean_hop_distance(const GaussianField& field, const std::vector<int>& order) {
  if (order.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& a = field.positions[static_cast<std::size_t>(order[i - 1])];
    const auto& b = field.positions[static_cast<std::size_t>(order[i])];
    total += std::hypot(a[0] - b[0], a[1] - b[1]);
  }
  return total / static_cast<double>(order.size() - 1);
}

CsvTable trace_table(bool with_trial) {
  std::vector<std::string> h{"round", "selected_indices", "criterion_value", "mse"};
  if (with_trial) h.insert(h.begin(), "trial");
  return CsvTable(std::move(h));
}

void append_trace_rows(CsvTable& table, const SelectionTrace& trace, int trial) {
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const auto& r = trace.rounds[t];
    std::vector<std::string> row{std::to_string(t + 1), join_indices(r.selected), join_doubles(r.criterion),
                                 format_double(r.mse)};
    if (trial >= 0) row.insert(row.begin(), std::to_string(trial));
    table.add_row(std::move(row));
  }
}

CsvTable path_table(const GaussianField& field, const std::vector<int>& order) {
  CsvTable table({"t", "k", "x", "y"});
  for (std::size_t t = 0; t < order.size(); ++t) {
    const auto& p = field.positions[static_cast<std::size_t>(order[t])];
    table.add_row({std::to_string(t + 1), std::to_string(order[t]), format_double(p[0]), format_double(p[1])});
  }
  return table;
}

}  // namespace das
