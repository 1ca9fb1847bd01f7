#include "das/sparse_das.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "das/kernels.hpp"

namespace das {

namespace {

struct Fit {
  std::vector<int> support;
  Eigen::VectorXd coef;
  double residual = 0.0;
};

Fit fit_support(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& w, std::vector<int> support) {
  Fit f;
  f.support = std::move(support);
  if (f.support.empty()) {
    f.coef.resize(0);
    f.residual = w.norm();
    return f;
  }
  Eigen::MatrixXd A(Psi.rows(), static_cast<Eigen::Index>(f.support.size()));
  for (std::size_t i = 0; i < f.support.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = Psi.col(f.support[i]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  f.coef = cod.solve(w);
  f.residual = (w - A * f.coef).norm();
  return f;
}

class Recoverer {
 public:
  Recoverer(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& w, int budget, double tol)
      : Psi_(Psi), w_(w), budget_(budget), tol_(tol), gram_(Psi.transpose() * Psi), b_(Psi.transpose() * w) {}

  // Orthogonal matching, optionally starting from a forced atom.
  Fit greedy(int forced_first, std::vector<double>* history) const {
    Fit f = fit_support(Psi_, w_, {});
    std::vector<char> used(static_cast<std::size_t>(Psi_.cols()), 0);
    Eigen::VectorXd r = w_;
    while (static_cast<int>(f.support.size()) < budget_ && f.residual > tol_) {
      int pick = -1;
      if (f.support.empty() && forced_first >= 0) {
        pick = forced_first;
      } else {
        const Eigen::VectorXd corr = Psi_.transpose() * r;
        double best = 0.0;
        for (Eigen::Index j = 0; j < corr.size(); ++j) {
          if (used[static_cast<std::size_t>(j)]) continue;
          const double a = std::abs(corr[j]);
          if (a > best) {
            best = a;
            pick = static_cast<int>(j);
          }
        }
        if (pick < 0) break;  // residual orthogonal to every unused column
      }
      used[static_cast<std::size_t>(pick)] = 1;
      auto support = f.support;
      support.push_back(pick);
      Fit next = fit_support(Psi_, w_, std::move(support));
      if (next.residual > f.residual) next.residual = f.residual;  // rounding only; LS cannot get worse
      f = std::move(next);
      r = w_;
      for (std::size_t i = 0; i < f.support.size(); ++i) r -= f.coef[static_cast<Eigen::Index>(i)] * Psi_.col(f.support[i]);
      if (history) history->push_back(f.residual);
    }
    return f;
  }

  // Best-improvement single-atom exchange. Candidates are ranked with the
  // Gram matrix and the winner is confirmed by a direct least-squares fit.
  void exchange(Fit& f, std::vector<double>* history) const {
    const auto M = static_cast<int>(Psi_.cols());
    const int max_steps = 4 * M + 16;
    for (int step = 0; step < max_steps && f.residual > tol_ && !f.support.empty(); ++step) {
      std::vector<char> in_support(static_cast<std::size_t>(M), 0);
      for (int s : f.support) in_support[static_cast<std::size_t>(s)] = 1;

      double best_explained = -1.0;
      std::size_t best_slot = 0;
      int best_atom = -1;
      const auto n = f.support.size();
      for (std::size_t slot = 0; slot < n; ++slot) {
        std::vector<int> rest;
        for (std::size_t i = 0; i < n; ++i)
          if (i != slot) rest.push_back(f.support[i]);
        const auto r = static_cast<Eigen::Index>(rest.size());

        Eigen::VectorXd z(r);
        Eigen::MatrixXd Q(r, M);
        double base = 0.0;
        if (r > 0) {
          Eigen::MatrixXd Grr(r, r);
          Eigen::MatrixXd rhs(r, M + 1);
          for (Eigen::Index a = 0; a < r; ++a) {
            for (Eigen::Index c = 0; c < r; ++c) Grr(a, c) = gram_(rest[a], rest[c]);
            rhs(a, 0) = b_[rest[a]];
            rhs.row(a).tail(M) = gram_.row(rest[a]);
          }
          const Eigen::MatrixXd sol = Grr.completeOrthogonalDecomposition().solve(rhs);
          z = sol.col(0);
          Q = sol.rightCols(M);
          for (Eigen::Index a = 0; a < r; ++a) base += b_[rest[a]] * z[a];
        }
        for (int j = 0; j < M; ++j) {
          if (in_support[static_cast<std::size_t>(j)]) continue;
          double num = b_[j];
          double schur = gram_(j, j);
          for (Eigen::Index a = 0; a < r; ++a) {
            const double g = gram_(rest[a], j);
            num -= g * z[a];
            schur -= g * Q(a, j);
          }
          if (schur <= 1e-12 * std::max(gram_(j, j), 1e-300)) continue;
          const double explained = base + num * num / schur;
          if (explained > best_explained) {
            best_explained = explained;
            best_slot = slot;
            best_atom = j;
          }
        }
      }
      if (best_atom < 0) return;
      auto support = f.support;
      support[best_slot] = best_atom;
      Fit next = fit_support(Psi_, w_, std::move(support));
      if (!(next.residual < f.residual * (1.0 - 1e-12))) return;
      f = std::move(next);
      if (history) history->push_back(f.residual);
    }
  }

  Fit full_rank_fallback() const {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Psi_);
    Fit f;
    f.residual = std::numeric_limits<double>::infinity();
    if (cod.rank() < Psi_.cols()) return f;
    const Eigen::VectorXd full = cod.solve(w_);
    std::vector<int> idx(static_cast<std::size_t>(Psi_.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(full[a]) > std::abs(full[b]); });
    idx.resize(static_cast<std::size_t>(budget_));
    std::sort(idx.begin(), idx.end());
    return fit_support(Psi_, w_, std::move(idx));
  }

  const Eigen::VectorXd& correlations() const { return b_; }

 private:
  const Eigen::MatrixXd& Psi_;
  const Eigen::VectorXd& w_;
  int budget_;
  double tol_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd b_;
};

void record_if_better(std::vector<double>& history, double residual) {
  if (history.empty() || residual < history.back()) history.push_back(residual);
}

}  // namespace

RecoveryState sparse_recover(const Eigen::MatrixXd& Psi, const Eigen::VectorXd& w, int S_max, double tol,
                             const RecoveryOptions& options) {
  if (Psi.rows() != w.size()) throw std::invalid_argument("Psi rows and w length differ");
  if (S_max < 1) throw std::invalid_argument("S_max must be >= 1");
  if (S_max > Psi.cols()) throw std::invalid_argument("S_max must not exceed the number of columns");
  if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");

  const auto M = Psi.cols();
  RecoveryState st;
  st.s_hat = Eigen::VectorXd::Zero(M);
  st.residual_norm = w.norm();
  st.residual_history.push_back(st.residual_norm);
  if (Psi.rows() == 0 || st.residual_norm <= tol) return st;

  const int budget = static_cast<int>(std::min<Eigen::Index>(S_max, Psi.rows()));
  Recoverer rec(Psi, w, budget, tol);

  std::vector<double> trail;
  Fit best = rec.greedy(-1, &trail);
  for (double r : trail) record_if_better(st.residual_history, r);
  trail.clear();
  if (options.exchange) {
    rec.exchange(best, &trail);
    for (double r : trail) record_if_better(st.residual_history, r);
  }

  if (best.residual > tol) {
    const Eigen::VectorXd& corr = rec.correlations();
    std::vector<int> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return std::abs(corr[a]) > std::abs(corr[b]); });
    const int first = best.support.empty() ? -1 : best.support.front();
    const int restarts = options.restart_budget < 0 ? static_cast<int>(M)
                                                    : std::min(options.restart_budget, static_cast<int>(M));
    int tried = 0;
    for (std::size_t i = 0; i < order.size() && tried < restarts && best.residual > tol; ++i) {
      if (order[i] == first) continue;
      ++tried;
      Fit cand = rec.greedy(order[i], nullptr);
      if (options.exchange) rec.exchange(cand, nullptr);
      if (cand.residual < best.residual) {
        best = std::move(cand);
        record_if_better(st.residual_history, best.residual);
      }
    }
  }

  if (best.residual > tol && Psi.rows() >= M) {
    Fit cand = rec.full_rank_fallback();
    if (cand.residual < best.residual) {
      best = std::move(cand);
      record_if_better(st.residual_history, best.residual);
    }
  }

  for (std::size_t i = 0; i < best.support.size(); ++i) st.s_hat[best.support[i]] = best.coef[static_cast<Eigen::Index>(i)];
  st.support = best.support;
  std::sort(st.support.begin(), st.support.end());
  st.residual_norm = std::min(best.residual, st.residual_history.back());
  return st;
}

std::string to_string(SparsePolicy p) { return p == SparsePolicy::Das ? "DAS" : "RRS"; }

SparsePolicy sparse_policy_from_string(const std::string& s) {
  if (s == "DAS" || s == "das") return SparsePolicy::Das;
  if (s == "RRS" || s == "rrs") return SparsePolicy::Rrs;
  throw std::invalid_argument("unknown sparse policy '" + s + "'");
}

namespace {

std::vector<char> collected_mask(int K, const std::vector<int>& collected) {
  std::vector<char> mask(static_cast<std::size_t>(K), 0);
  for (int c : collected) {
    if (c < 0 || c >= K) throw std::invalid_argument("collected index out of range");
    mask[static_cast<std::size_t>(c)] = 1;
  }
  return mask;
}

Eigen::VectorXd estimate_of(const SparseScene& scene, const RecoveryState& state) {
  if (state.v.size() == scene.K) return state.v;
  if (state.s_hat.size() != scene.M) throw std::invalid_argument("estimate dimension does not match the dictionary");
  return scene.B * state.s_hat;
}

}  // namespace

int select_next_sparse_naive(const SparseScene& scene, const RecoveryState& state,
                             const std::vector<int>& collected) {
  const auto mask = collected_mask(scene.K, collected);
  const Eigen::VectorXd v = estimate_of(scene, state);
  int best = -1;
  double best_score = -1.0;
  for (int k = 0; k < scene.K; ++k) {
    if (mask[static_cast<std::size_t>(k)]) continue;
    const double score = v[k] * v[k];
    if (score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (best < 0) throw std::invalid_argument("every node is already collected");
  return best;
}

std::vector<int> select_next_sparse(const SparseScene& scene, const RecoveryState& state,
                                    const std::vector<int>& collected, int L) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  auto mask = collected_mask(scene.K, collected);
  std::vector<int> candidates;
  for (int k = 0; k < scene.K; ++k)
    if (!mask[static_cast<std::size_t>(k)]) candidates.push_back(k);
  if (static_cast<int>(candidates.size()) < L) throw std::invalid_argument("fewer uncollected nodes than picks");

  const Eigen::VectorXd v = estimate_of(scene, state);
  std::vector<double> numerators(static_cast<std::size_t>(scene.K));
  for (int k = 0; k < scene.K; ++k) numerators[static_cast<std::size_t>(k)] = v[k] * v[k];

  std::vector<double> max_corr2(static_cast<std::size_t>(scene.K), 0.0);
  for (int c : collected) kernels::parallel::absorb_row_correlation(scene.B, c, max_corr2);

  std::vector<int> picks;
  std::vector<double> scores;
  bool have_inner_set = !collected.empty();
  for (int l = 0; l < L; ++l) {
    int pick = -1;
    if (!have_inner_set) {
      pick = select_next_sparse_naive(scene, state, collected);
    } else {
      scores.resize(candidates.size());
      kernels::parallel::correlation_normalized_scores(numerators, max_corr2, candidates, kCorrelationFloor, scores);
      std::size_t best = 0;
      for (std::size_t i = 1; i < candidates.size(); ++i)
        if (scores[i] > scores[best]) best = i;
      pick = candidates[best];
    }
    picks.push_back(pick);
    candidates.erase(std::find(candidates.begin(), candidates.end(), pick));
    kernels::parallel::absorb_row_correlation(scene.B, pick, max_corr2);
    have_inner_set = true;
  }
  return picks;
}

std::vector<int> apply_downlink_errors(const std::vector<int>& selected, const std::vector<int>& collected, int K,
                                       double error_prob, Rng& rng) {
  if (!(error_prob >= 0.0 && error_prob <= 1.0)) throw std::invalid_argument("error_prob must lie in [0, 1]");
  auto excluded = collected_mask(K, collected);
  for (int s : selected) {
    if (s < 0 || s >= K) throw std::invalid_argument("selected index out of range");
    excluded[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<int> pool;
  for (int k = 0; k < K; ++k)
    if (!excluded[static_cast<std::size_t>(k)]) pool.push_back(k);

  std::vector<int> out;
  out.reserve(selected.size());
  for (int s : selected) {
    if (uniform01(rng) >= error_prob) {
      out.push_back(s);
      continue;
    }
    if (pool.empty()) continue;
    const auto j = static_cast<std::size_t>(uniform_index(rng, pool.size()));
    out.push_back(pool[j]);
    pool[j] = pool.back();
    pool.pop_back();
  }
  return out;
}

namespace {

std::vector<int> random_subset(std::vector<int> pool, int n, Rng& rng) {
  n = std::min(n, static_cast<int>(pool.size()));
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i) + uniform_index(rng, pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

}  // namespace

SparseTrajectory run_sparse_das(const SparseScene& scene, int L, int rounds, SparsePolicy policy,
                                double error_prob, std::uint64_t seed, const RecoveryOptions& options) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (rounds > (scene.K + L - 1) / L) throw std::invalid_argument("rounds * L exceeds the number of nodes");
  if (!(error_prob >= 0.0 && error_prob <= 1.0)) throw std::invalid_argument("error_prob must lie in [0, 1]");

  SparseTrajectory traj;
  traj.policy = policy;
  traj.error_prob = error_prob;
  traj.signal_energy = scene.x.squaredNorm();
  traj.final_state.s_hat = Eigen::VectorXd::Zero(scene.M);
  traj.final_state.v = Eigen::VectorXd::Zero(scene.K);
  traj.final_state.residual_norm = 0.0;

  CollectionState collection(scene.K);
  for (int t = 0; t < rounds; ++t) {
    const auto uncollected = collection.uncollected();
    if (uncollected.empty()) break;
    const int picks = std::min(L, static_cast<int>(uncollected.size()));

    std::vector<int> requested;
    if (t == 0 || policy == SparsePolicy::Rrs) {
      Rng rng = make_rng(derive_seed(seed, Stream::Selection, static_cast<std::uint64_t>(t)));
      requested = random_subset(uncollected, picks, rng);
    } else {
      requested = select_next_sparse(scene, traj.final_state, collection.collected(), picks);
    }
    Rng downlink = make_rng(derive_seed(seed, Stream::Downlink, static_cast<std::uint64_t>(t)));
    std::vector<int> delivered = apply_downlink_errors(requested, collection.collected(), scene.K, error_prob, downlink);

    std::vector<double> values;
    for (int k : delivered) values.push_back(scene.x[k]);
    collection.record_round(requested, delivered, values);

    const auto& idx = collection.collected();
    Eigen::MatrixXd Psi(static_cast<Eigen::Index>(idx.size()), scene.M);
    Eigen::VectorXd w(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Psi.row(static_cast<Eigen::Index>(i)) = scene.B.row(idx[i]);
      w[static_cast<Eigen::Index>(i)] = scene.x[idx[i]];
    }
    RecoveryState st = sparse_recover(Psi, w, scene.S, kRelativeRecoveryTolerance * w.norm(), options);
    st.v = scene.B * st.s_hat;

    SparseRound round;
    round.requested = std::move(requested);
    round.delivered = std::move(delivered);
    round.mse = (scene.x - st.v).squaredNorm();
    round.cumulative_uploads = static_cast<int>(idx.size());
    traj.rounds.push_back(std::move(round));
    traj.final_state = std::move(st);
  }
  return traj;
}

int rounds_to_threshold(const SparseTrajectory& traj, double rel) {
  const double limit = rel * traj.signal_energy;
  for (std::size_t t = 0; t < traj.rounds.size(); ++t)
    if (traj.rounds[t].mse <= limit) return static_cast<int>(t) + 1;
  return static_cast<int>(traj.rounds.size()) + 1;
}

CsvTable sparse_table() {
  return CsvTable({"trial", "round", "policy", "error_prob", "mse", "cumulative_uploads"});
}

void append_sparse_rows(CsvTable& table, const SparseTrajectory& traj, int trial) {
  for (std::size_t t = 0; t < traj.rounds.size(); ++t) {
    const auto& r = traj.rounds[t];
    table.add_row({std::to_string(trial), std::to_string(t + 1), to_string(traj.policy), format_double(traj.error_prob),
                   format_double(r.mse), std::to_string(r.cumulative_uploads)});
  }
}

}  // namespace das
