#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "das/kernels.hpp"
#include "das/ra_das.hpp"
#include "oracles.hpp"

using namespace das;

TEST_SUITE("access_probabilities") {
  TEST_CASE("success probability examples") {
    CHECK(success_prob({0.5}, 3, 0) == 0.5);
    CHECK(success_prob({1.0, 1.0}, 1, 0) == 0.0);
    CHECK(success_prob({0.2, 0.4, 0.6}, 2, 1) == doctest::Approx(0.4 * 0.9 * 0.7));
    CHECK_THROWS_AS(success_prob({1.2}, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(success_prob({0.2}, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(success_prob({0.2}, 1, 1), std::invalid_argument);
  }

  TEST_CASE("per-node success frequency matches the formula") {
    Rng rng = make_rng(9);
    std::vector<double> p(20);
    for (double& v : p) v = 0.6 * uniform01(rng);
    const std::uint64_t rounds = 200000;
    const auto counts = kernels::parallel::aloha_success_counts(p, 10, rounds, 21);
    for (int k = 0; k < 20; ++k) {
      const double q = success_prob(p, 10, k);
      const double se = std::sqrt(rounds * q * (1 - q));
      CHECK(std::abs(static_cast<double>(counts[k]) - rounds * q) <= 3 * se);
    }
  }

  TEST_CASE("RA2 probabilities") {
    CHECK(access_probs_ra2({0.0}, -5.0)[0] == 0.0);
    const double psi = 0.7;
    CHECK(access_probs_ra2({std::exp(psi / std::numbers::e)}, psi)[0] == doctest::Approx(0.0).epsilon(1e-12));
    const auto p = access_probs_ra2({0.1, 1.0, 2.0, 10.0}, 1.0);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == doctest::Approx(std::numbers::e * std::log(2.0) - 1.0));
    CHECK(p[3] == 1.0);
    CHECK_THROWS_AS(access_probs_ra2({-1.0}, 0.0), std::invalid_argument);
  }

  TEST_CASE("RA2 probabilities preserve the norm ordering") {
    Rng rng = make_rng(3);
    std::vector<double> w(60);
    for (double& v : w) v = std::exp(standard_normal(rng));
    for (double psi : {-2.0, 0.0, 1.5}) {
      const auto p = access_probs_ra2(w, psi);
      for (int a = 0; a < 60; ++a)
        for (int b = 0; b < 60; ++b)
          if (w[a] <= w[b]) CHECK(p[a] <= p[b]);
    }
  }

  TEST_CASE("RA1 probabilities") {
    CHECK(access_probs_ra1(400, 10) == doctest::Approx(0.025));
    CHECK(access_probs_ra1(10, 10) == 1.0);
    CHECK(access_probs_ra1(5, 10) == 1.0);
    CHECK_THROWS_AS(access_probs_ra1(0, 10), std::invalid_argument);
  }

  TEST_CASE("dual ascent update") {
    CHECK(dual_ascent_update(0.3, 10, 10, 0.1) == 0.3);
    CHECK(dual_ascent_update(0.0, 20, 10, 0.1) == doctest::Approx(1.0));
    CHECK(dual_ascent_update(1.0, 0, 10, 0.05) == doctest::Approx(0.5));
    CHECK_THROWS_AS(dual_ascent_update(0.0, 1, 1, 0.0), std::invalid_argument);
  }

  TEST_CASE("bisected multiplier solves the constrained problem") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng = make_rng(seed);
      std::vector<double> w(50);
      for (double& v : w) v = 0.2 + 4.8 * uniform01(rng);
      const double psi = bisect_psi(w, 10.0);
      const auto p = access_probs_ra2(w, psi);
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(10.0).epsilon(1e-9));
      const Eigen::VectorXd ref = oracle::fista_access(Eigen::Map<const Eigen::VectorXd>(w.data(), 50), 10.0);
      for (int k = 0; k < 50; ++k) CHECK(std::abs(p[k] - ref[k]) <= 1e-6);
    }
  }

  TEST_CASE("bisection with too few candidates saturates them") {
    const std::vector<double> w{0.0, 2.0, 3.0};
    const auto p = access_probs_ra2(w, bisect_psi(w, 10.0));
    CHECK(p == std::vector<double>{0.0, 1.0, 1.0});
    CHECK_THROWS_AS(bisect_psi({0.0, 0.0}, 1.0), std::invalid_argument);
  }

  TEST_CASE("throughput ceiling") {
    Rng rng = make_rng(12);
    for (int K : {20, 50, 400}) {
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> w(K);
        for (double& v : w) v = std::exp(standard_normal(rng));
        const auto p = access_probs_ra2(w, bisect_psi(w, 10.0));
        double total = 0.0;
        for (int k = 0; k < K; ++k) total += success_prob(p, 10, k);
        CHECK(total <= 10.0 / std::numbers::e + 0.05 * 10.0);
      }
      std::vector<double> uniform(K, 10.0 / K);
      double total = 0.0;
      for (int k = 0; k < K; ++k) total += success_prob(uniform, 10, k);
      CHECK(total <= 10.0 / std::numbers::e + 0.05 * 10.0);
    }
  }
}

TEST_SUITE("aloha_round") {
  TEST_CASE("silence") {
    Rng rng = make_rng(1);
    const auto out = simulate_round({0, 1, 2}, {0.0, 0.0, 0.0}, 4, rng);
    CHECK(out.transmitters.empty());
    CHECK(out.successes.empty());
    CHECK(out.collisions.empty());
  }

  TEST_CASE("lone transmitter succeeds") {
    Rng rng = make_rng(1);
    const auto out = simulate_round({1}, {0.0, 1.0}, 3, rng);
    CHECK(out.transmitters == std::vector<int>{1});
    CHECK(out.successes == std::vector<int>{1});
  }

  TEST_CASE("outcome invariants") {
    Rng rng = make_rng(2);
    std::vector<int> active(60);
    std::iota(active.begin(), active.end(), 0);
    const std::vector<double> p(60, 0.3);
    for (int r = 0; r < 500; ++r) {
      const auto out = simulate_round(active, p, 5, rng);
      CHECK(out.successes.size() <= 5);
      CHECK(out.channel_assignment.size() == out.transmitters.size());
      std::vector<int> occ(6, 0);
      for (int c : out.channel_assignment) {
        REQUIRE(c >= 1);
        REQUIRE(c <= 5);
        ++occ[c];
      }
      for (std::size_t i = 0; i < out.transmitters.size(); ++i) {
        const bool sole = occ[out.channel_assignment[i]] == 1;
        const bool listed = std::find(out.successes.begin(), out.successes.end(), out.transmitters[i]) != out.successes.end();
        CHECK(sole == listed);
      }
      int collided = 0;
      for (int c = 1; c <= 5; ++c) collided += occ[c] >= 2;
      CHECK(static_cast<int>(out.collisions.size()) == collided);
    }
  }

  TEST_CASE("mean successes match the formula") {
    Rng rng = make_rng(5);
    std::vector<int> active(400);
    std::iota(active.begin(), active.end(), 0);
    const std::vector<double> p(400, 0.025);
    const int rounds = 100000;
    double sum = 0.0, sq = 0.0;
    for (int r = 0; r < rounds; ++r) {
      const double s = static_cast<double>(simulate_round(active, p, 10, rng).successes.size());
      sum += s;
      sq += s * s;
    }
    const double mean = sum / rounds;
    const double se = std::sqrt((sq / rounds - mean * mean) / rounds);
    const double expect = 400 * success_prob(p, 10, 0);
    CHECK(std::abs(mean - expect) <= 3 * se);
  }
}

TEST_SUITE("distributed_runner") {
  TEST_CASE("nothing to collect") {
    const QueryScene sc = gen_query_scene(50, 5, 0.0, 1);
    for (AccessPolicy p : {AccessPolicy::Ra1, AccessPolicy::Ra2}) {
      const auto tr = run_distributed_das(sc, 5, 10, p, 0.1, 0.0, 3);
      REQUIRE(tr.steps.size() == 11);
      for (const auto& s : tr.steps) CHECK(s.error_norm == 0.0);
    }
    const auto ra2 = run_distributed_das(sc, 5, 10, AccessPolicy::Ra2, 0.1, 0.0, 3);
    for (const auto& s : ra2.steps) CHECK(s.P_hat == 0);
  }

  TEST_CASE("complete delivery leaves no error") {
    const QueryScene sc = gen_query_scene(8, 4, 1.0, 2);
    const auto tr = run_distributed_das(sc, 50, 200, AccessPolicy::Ra1, 0.1, 0.0, 4);
    CHECK(tr.final_state.delivered.size() == 8);
    CHECK(tr.steps.back().error_norm <= 1e-10);
    for (double p : tr.final_state.p) CHECK(p == 0.0);
  }

  TEST_CASE("zero-measurement nodes stay silent") {
    const QueryScene sc = gen_query_scene(200, 6, 0.3, 7);
    const Eigen::VectorXd norms = sc.contribution_norms();
    const auto tr = run_distributed_das(sc, 10, 40, AccessPolicy::Ra2, 0.1, -3.0, 9);
    for (int k : tr.final_state.delivered) CHECK(norms[k] > 0.0);
  }

  TEST_CASE("delivered set only grows and the trajectory is reproducible") {
    const QueryScene sc = gen_query_scene(400, 10, 0.25, 1);
    for (AccessPolicy p : {AccessPolicy::Ra1, AccessPolicy::Ra2}) {
      const auto a = run_distributed_das(sc, 10, 50, p, 0.1, 0.0, 2);
      const auto b = run_distributed_das(sc, 10, 50, p, 0.1, 0.0, 2);
      CHECK(a.final_state.delivered == b.final_state.delivered);
      int cumulative = 0;
      for (std::size_t t = 0; t < a.steps.size(); ++t) {
        CHECK(a.steps[t].error_norm == b.steps[t].error_norm);
        CHECK(a.steps[t].psi == b.steps[t].psi);
        cumulative += a.steps[t].num_success;
        CHECK(a.steps[t].num_success <= 10);
      }
      CHECK(cumulative == static_cast<int>(a.final_state.delivered.size()));
    }
  }

  TEST_CASE("orthogonal columns give a non-increasing error") {
    QueryScene sc;
    sc.K = 30;
    sc.m = 30;
    sc.p_s = 0.5;
    sc.G = Eigen::MatrixXd::Identity(30, 30) * 2.0;
    Rng rng = make_rng(3);
    sc.x = Eigen::VectorXd::Zero(30);
    for (int k = 0; k < 30; ++k)
      if (uniform01(rng) < 0.5) sc.x[k] = standard_normal(rng);
    sc.y = sc.G * sc.x;
    for (AccessPolicy p : {AccessPolicy::Ra1, AccessPolicy::Ra2}) {
      const auto tr = run_distributed_das(sc, 4, 30, p, 0.1, 0.0, 5);
      for (std::size_t t = 1; t < tr.steps.size(); ++t) CHECK(tr.steps[t].error_norm <= tr.steps[t - 1].error_norm + 1e-12);
    }
  }

  TEST_CASE("RA2 multiplier follows dual ascent") {
    const QueryScene sc = gen_query_scene(100, 10, 0.5, 4);
    const auto tr = run_distributed_das(sc, 10, 20, AccessPolicy::Ra2, 0.1, 0.5, 6);
    CHECK(tr.steps[1].psi == 0.5);
    for (std::size_t t = 2; t < tr.steps.size(); ++t)
      CHECK(tr.steps[t].psi == doctest::Approx(dual_ascent_update(tr.steps[t - 1].psi, tr.steps[t - 1].P_hat, 10, 0.1)));
    const auto ra1 = run_distributed_das(sc, 10, 20, AccessPolicy::Ra1, 0.1, 0.5, 6);
    for (const auto& s : ra1.steps) CHECK(s.psi == 0.5);
  }

  TEST_CASE("argument validation") {
    const QueryScene sc = gen_query_scene(10, 2, 0.5, 1);
    CHECK_THROWS_AS(run_distributed_das(sc, 2, 0, AccessPolicy::Ra1, 0.1, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_distributed_das(sc, 0, 3, AccessPolicy::Ra1, 0.1, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_distributed_das(sc, 2, 3, AccessPolicy::Ra2, 0.0, 0.0, 1), std::invalid_argument);
  }

  TEST_CASE("static population regulation") {
    const QueryScene sc = gen_query_scene(100, 10, 1.0, 3);
    const Eigen::VectorXd n = sc.contribution_norms();
    const std::vector<double> w(n.data(), n.data() + n.size());
    const auto trace = regulate_static_population(w, 10, 0.1, 0.0, 120, 8);
    REQUIRE(trace.size() == 120);
    int inside = 0;
    for (std::size_t t = 20; t < trace.size(); ++t)
      inside += std::abs(trace[t].sum_p - 10.0) <= 2 * std::sqrt(10.0);
    CHECK(inside >= 90);
    const CsvTable t = regulation_table(trace);
    CHECK(t.rows() == 120);
  }

  TEST_CASE("CSV rows include the initial state") {
    const QueryScene sc = gen_query_scene(40, 3, 0.5, 1);
    CsvTable t = access_table();
    append_access_rows(t, run_distributed_das(sc, 4, 5, AccessPolicy::Ra2, 0.1, 0.0, 2), 3);
    CHECK(t.rows() == 6);
    CHECK(t.str().rfind("trial,t,policy,psi,P_hat,num_success,error_norm\n3,0,RA2,0,0,0,", 0) == 0);
  }
}
