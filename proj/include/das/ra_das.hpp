#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "das/csv.hpp"
#include "das/rng.hpp"
#include "das/scenario.hpp"

namespace das {

struct AccessState {
  double psi = 0.0;
  double mu = 0.1;
  std::vector<double> p;      // per node; 0 for delivered nodes
  std::vector<int> delivered; // in delivery order
  int P_hat = 0;
};

struct RoundOutcome {
  std::vector<int> transmitters;
  std::vector<int> channel_assignment;  // channel in 1..L, parallel to transmitters
  std::vector<int> successes;
  std::vector<int> collisions;          // channels with two or more occupants
};

// p_k * prod_{l != k} (1 - p_l / L)
double success_prob(const std::vector<double>& p, int L, int k);

// clamp(e ln ||w_k|| - psi, 0, 1), with ||w_k|| = 0 mapped to 0.
std::vector<double> access_probs_ra2(const std::vector<double>& w_norms, double psi);

// min(L / uncollected_count, 1)
double access_probs_ra1(int uncollected_count, int L);

double dual_ascent_update(double psi, int P_hat, int L, double mu);

// psi with sum access_probs_ra2(w_norms, psi) = target. When fewer than
// `target` nodes have a positive norm no psi reaches it; the largest psi that
// still gives every such node p = 1 is returned instead.
double bisect_psi(const std::vector<double>& w_norms, double target);

// Active nodes transmit independently with probability p[k] (p is indexed by
// node id) and pick one of L channels uniformly; sole occupants succeed.
RoundOutcome simulate_round(const std::vector<int>& active, const std::vector<double>& p, int L, Rng& rng);

enum class AccessPolicy { Ra1, Ra2 };
std::string to_string(AccessPolicy p);
AccessPolicy access_policy_from_string(const std::string& s);

struct AccessStep {
  int t = 0;
  double psi = 0.0;     // multiplier in effect during the round
  int P_hat = 0;
  int num_success = 0;
  double error_norm = 0.0;  // ||y - y(t)||
  double sum_p = 0.0;
};

struct DistributedTrajectory {
  AccessPolicy policy = AccessPolicy::Ra2;
  std::vector<AccessStep> steps;  // t = 0 (nothing delivered) through T
  AccessState final_state;
};

DistributedTrajectory run_distributed_das(const QueryScene& scene, int L, int T, AccessPolicy policy, double mu,
                                          double psi0, std::uint64_t seed);

// Closed loop on a population that never leaves: every round all nodes redraw
// from access_probs_ra2 and psi follows dual ascent on the transmit count.
struct RegulationStep {
  int t = 0;
  double psi = 0.0;
  double sum_p = 0.0;
  int P_hat = 0;
};

std::vector<RegulationStep> regulate_static_population(const std::vector<double>& w_norms, int L, double mu,
                                                       double psi0, int iterations, std::uint64_t seed);

// Columns: trial, t, policy, psi, P_hat, num_success, error_norm.
CsvTable access_table();
void append_access_rows(CsvTable& table, const DistributedTrajectory& traj, int trial);

// Columns: t, psi, sum_p, P_hat.
CsvTable regulation_table(const std::vector<RegulationStep>& trace);

}  // namespace das
