#include "das/ra_das.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace das {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
}

}  // namespace

double success_prob(const std::vector<double>& p, int L, int k) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (k < 0 || k >= static_cast<int>(p.size())) throw std::invalid_argument("node index out of range");
  double q = p[static_cast<std::size_t>(k)];
  check_probability(q);
  for (std::size_t l = 0; l < p.size(); ++l) {
    check_probability(p[l]);
    if (static_cast<int>(l) != k) q *= 1.0 - p[l] / L;
  }
  return q;
}

std::vector<double> access_probs_ra2(const std::vector<double>& w_norms, double psi) {
  std::vector<double> p(w_norms.size());
  for (std::size_t k = 0; k < w_norms.size(); ++k) {
    const double w = w_norms[k];
    if (!(w >= 0.0)) throw std::invalid_argument("measurement norms must be nonnegative");
    p[k] = w == 0.0 ? 0.0 : std::clamp(std::numbers::e * std::log(w) - psi, 0.0, 1.0);
  }
  return p;
}

double access_probs_ra1(int uncollected_count, int L) {
  if (uncollected_count < 1) throw std::invalid_argument("no uncollected nodes");
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  return std::min(static_cast<double>(L) / uncollected_count, 1.0);
}

double dual_ascent_update(double psi, int P_hat, int L, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  return psi + mu * (P_hat - L);
}

double bisect_psi(const std::vector<double>& w_norms, double target) {
  if (!(target > 0.0)) throw std::invalid_argument("target must be > 0");
  double lo_log = std::numeric_limits<double>::infinity();
  double hi_log = -std::numeric_limits<double>::infinity();
  int positive = 0;
  for (double w : w_norms) {
    if (!(w >= 0.0)) throw std::invalid_argument("measurement norms must be nonnegative");
    if (w == 0.0) continue;
    ++positive;
    const double a = std::numbers::e * std::log(w);
    lo_log = std::min(lo_log, a);
    hi_log = std::max(hi_log, a);
  }
  if (positive == 0) throw std::invalid_argument("no node has a positive measurement norm");
  // Sum of p is non-increasing in psi: psi <= lo_log - 1 gives every positive
  // node p = 1, psi >= hi_log gives 0.
  double lo = lo_log - 1.0;
  double hi = hi_log;
  if (positive <= target) return lo;
  auto total = [&](double psi) {
    double s = 0.0;
    for (double p : access_probs_ra2(w_norms, psi)) s += p;
    return s;
  };
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

RoundOutcome simulate_round(const std::vector<int>& active, const std::vector<double>& p, int L, Rng& rng) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  RoundOutcome out;
  std::vector<int> occupancy(static_cast<std::size_t>(L), 0);
  for (int k : active) {
    if (k < 0 || k >= static_cast<int>(p.size())) throw std::invalid_argument("no access probability for node");
    const double pk = p[static_cast<std::size_t>(k)];
    check_probability(pk);
    if (uniform01(rng) >= pk) continue;
    const int ch = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(L)));
    out.transmitters.push_back(k);
    out.channel_assignment.push_back(ch + 1);
    ++occupancy[static_cast<std::size_t>(ch)];
  }
  for (std::size_t i = 0; i < out.transmitters.size(); ++i)
    if (occupancy[static_cast<std::size_t>(out.channel_assignment[i] - 1)] == 1) out.successes.push_back(out.transmitters[i]);
  for (int c = 0; c < L; ++c)
    if (occupancy[static_cast<std::size_t>(c)] >= 2) out.collisions.push_back(c + 1);
  return out;
}

std::string to_string(AccessPolicy p) { return p == AccessPolicy::Ra1 ? "RA1" : "RA2"; }

AccessPolicy access_policy_from_string(const std::string& s) {
  if (s == "RA1" || s == "ra1") return AccessPolicy::Ra1;
  if (s == "RA2" || s == "ra2") return AccessPolicy::Ra2;
  throw std::invalid_argument("unknown access policy '" + s + "'");
}

DistributedTrajectory run_distributed_das(const QueryScene& scene, int L, int T, AccessPolicy policy, double mu,
                                          double psi0, std::uint64_t seed) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");

  const int K = scene.K;
  const Eigen::VectorXd norms_vec = scene.contribution_norms();
  const std::vector<double> norms(norms_vec.data(), norms_vec.data() + norms_vec.size());

  DistributedTrajectory traj;
  traj.policy = policy;
  AccessState& st = traj.final_state;
  st.psi = psi0;
  st.mu = mu;
  st.p.assign(static_cast<std::size_t>(K), 0.0);

  std::vector<char> delivered(static_cast<std::size_t>(K), 0);
  Eigen::VectorXd y_t = Eigen::VectorXd::Zero(scene.m);
  traj.steps.push_back({0, st.psi, 0, 0, scene.y.norm(), 0.0});

  for (int t = 1; t <= T; ++t) {
    std::vector<int> active;
    for (int k = 0; k < K; ++k)
      if (!delivered[static_cast<std::size_t>(k)]) active.push_back(k);

    std::fill(st.p.begin(), st.p.end(), 0.0);
    if (!active.empty()) {
      if (policy == AccessPolicy::Ra1) {
        const double p = access_probs_ra1(static_cast<int>(active.size()), L);
        for (int k : active) st.p[static_cast<std::size_t>(k)] = p;
      } else {
        const auto p = access_probs_ra2(norms, st.psi);
        for (int k : active) st.p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)];
      }
    }
    double sum_p = 0.0;
    for (double p : st.p) sum_p += p;

    Rng rng = make_rng(derive_seed(seed, Stream::Access, static_cast<std::uint64_t>(t)));
    const RoundOutcome out = simulate_round(active, st.p, L, rng);
    st.P_hat = static_cast<int>(out.transmitters.size());
    for (int k : out.successes) {
      delivered[static_cast<std::size_t>(k)] = 1;
      st.delivered.push_back(k);
      y_t += scene.G.col(k) * scene.x[k];
    }

    AccessStep step;
    step.t = t;
    step.psi = st.psi;
    step.P_hat = st.P_hat;
    step.num_success = static_cast<int>(out.successes.size());
    step.error_norm = (scene.y - y_t).norm();
    step.sum_p = sum_p;
    traj.steps.push_back(step);

    if (policy == AccessPolicy::Ra2) st.psi = dual_ascent_update(st.psi, st.P_hat, L, mu);
  }
  for (int k : st.delivered) st.p[static_cast<std::size_t>(k)] = 0.0;
  return traj;
}

std::vector<RegulationStep> regulate_static_population(const std::vector<double>& w_norms, int L, double mu,
                                                       double psi0, int iterations, std::uint64_t seed) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  std::vector<int> everyone(w_norms.size());
  for (std::size_t k = 0; k < everyone.size(); ++k) everyone[k] = static_cast<int>(k);

  std::vector<RegulationStep> trace;
  double psi = psi0;
  for (int t = 1; t <= iterations; ++t) {
    const auto p = access_probs_ra2(w_norms, psi);
    double sum_p = 0.0;
    for (double v : p) sum_p += v;
    Rng rng = make_rng(derive_seed(seed, Stream::Access, static_cast<std::uint64_t>(t)));
    const int P_hat = static_cast<int>(simulate_round(everyone, p, L, rng).transmitters.size());
    trace.push_back({t, psi, sum_p, P_hat});
    psi = dual_ascent_update(psi, P_hat, L, mu);
  }
  return trace;
}

CsvTable access_table() {
  return CsvTable({"trial", "t", "policy", "psi", "P_hat", "num_success", "error_norm"});
}

void append_access_rows(CsvTable& table, const DistributedTrajectory& traj, int trial) {
  for (const auto& s : traj.steps)
    table.add_row({std::to_string(trial), std::to_string(s.t), to_string(traj.policy), format_double(s.psi),
                   std::to_string(s.P_hat), std::to_string(s.num_success), format_double(s.error_norm)});
}

CsvTable regulation_table(const std::vector<RegulationStep>& trace) {
  CsvTable table({"t", "psi", "sum_p", "P_hat"});
  for (const auto& s : trace)
    table.add_row({std::to_string(s.t), format_double(s.psi), format_double(s.sum_p), std::to_string(s.P_hat)});
  return table;
}

}  // namespace das
