#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "das/gaussian_das.hpp"
#include "oracles.hpp"

using namespace das;

namespace {

std::vector<double> values_at(const GaussianField& f, const std::vector<int>& idx) {
  std::vector<double> v;
  for (int k : idx) v.push_back(f.x[k]);
  return v;
}

}  // namespace

TEST_SUITE("gaussian_das") {
  TEST_CASE("unconditioned variance is the prior") {
    const GaussianField f = gen_gaussian_field(6, 2);
    for (int k = 0; k < 6; ++k) CHECK(conditional_variance(f, {}, k) == doctest::Approx(1.0));
  }

  TEST_CASE("coincident nodes carry no extra information") {
    const GaussianField f = field_from_positions({{0.3, 0.3}, {0.3, 0.3}, {0.9, 0.1}}, 4);
    CHECK(conditional_variance(f, {0}, 1) <= 1e-12);
    CHECK(conditional_entropy(f, {0}, 1) == doctest::Approx(gaussian_entropy(kEntropyVarianceFloor)));
    CHECK(select_next_entropy(f, {0}) == 2);
    // Conditioning on both copies must not fail.
    CHECK(conditional_variance(f, {0, 1}, 2) == doctest::Approx(oracle::conditional_variance(f.cov, {0}, 2)));
  }

  TEST_CASE("conditional variance matches a dense Schur complement") {
    const GaussianField f3 = gen_gaussian_field(3, 7);
    CHECK(conditional_variance(f3, {0}, 2) == doctest::Approx(oracle::conditional_variance(f3.cov, {0}, 2)).epsilon(1e-10));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const GaussianField f = gen_gaussian_field(10, seed);
      const std::vector<int> C{static_cast<int>(seed % 10), static_cast<int>((seed * 3 + 1) % 10)};
      for (int k : oracle::all_but(10, C))
        CHECK(std::abs(conditional_variance(f, C, k) - oracle::conditional_variance(f.cov, C, k)) <= 1e-10);
    }
    CHECK_THROWS_AS(conditional_variance(f3, {0}, 0), std::invalid_argument);
  }

  TEST_CASE("unit variance entropy") {
    CHECK(gaussian_entropy(1.0) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)));
    CHECK(gaussian_entropy(1.0) == doctest::Approx(1.41894).epsilon(1e-5));
  }

  TEST_CASE("entropy ordering follows variance ordering") {
    const GaussianField f = gen_gaussian_field(5, 3);
    const std::vector<int> C{1};
    for (int a : {0, 2, 3, 4})
      for (int b : {0, 2, 3, 4})
        CHECK((conditional_variance(f, C, a) < conditional_variance(f, C, b)) ==
              (conditional_entropy(f, C, a) < conditional_entropy(f, C, b)));
  }

  TEST_CASE("one conditioning node: farthest node has the largest entropy") {
    const GaussianField f = gen_gaussian_field(15, 21);
    for (int i = 0; i < 15; ++i) {
      int far = -1;
      double best = -1.0;
      for (int k = 0; k < 15; ++k) {
        if (k == i) continue;
        const double d = std::hypot(f.positions[i][0] - f.positions[k][0], f.positions[i][1] - f.positions[k][1]);
        if (d > best) {
          best = d;
          far = k;
        }
      }
      CHECK(select_next_entropy(f, {i}) == far);
    }
  }

  TEST_CASE("first pick from nothing is the lowest index") {
    const GaussianField f = gen_gaussian_field(20, 1);
    CHECK(select_next_entropy(f, {}) == 0);
  }

  TEST_CASE("selectors match exhaustive sweeps") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const GaussianField f = gen_gaussian_field(10, seed);
      const std::vector<int> C{int(seed % 10), int((seed + 4) % 10), int((seed + 7) % 10)};
      CHECK(select_next_entropy(f, C) == oracle::brute_entropy_pick(f.cov, C));
      CHECK(select_next_mse(f, C) == oracle::brute_mse_pick(f.cov, C));
    }
  }

  TEST_CASE("mse selector with one candidate left") {
    const GaussianField f = gen_gaussian_field(2, 5);
    CHECK(select_next_mse(f, {0}) == 1);
    CHECK(select_next_mse(f, {1}) == 0);
    CHECK_THROWS_AS(select_next_mse(f, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(select_next_entropy(f, {0, 1}), std::invalid_argument);
  }

  TEST_CASE("mmse estimate") {
    const GaussianField f = gen_gaussian_field(4, 11);
    const std::vector<int> C{1, 3};
    const Eigen::VectorXd est = mmse_estimate(f, C, values_at(f, C));
    const Eigen::MatrixXd inv = oracle::submatrix(f.cov, C, C).inverse();
    Eigen::VectorXd xc(2);
    xc << f.x[1], f.x[3];
    for (int k : {0, 2}) {
      const double expect = (oracle::submatrix(f.cov, {k}, C) * inv * xc)(0, 0);
      CHECK(std::abs(est[k] - expect) <= 1e-10);
    }
    CHECK(est[1] == f.x[1]);
    CHECK(est[3] == f.x[3]);
    CHECK(mmse_estimate(f, {}, {}).isZero(0.0));
    std::vector<int> all{0, 1, 2, 3};
    CHECK((mmse_estimate(f, all, values_at(f, all)) - f.x).norm() <= 1e-12);
    CHECK_THROWS_AS(mmse_estimate(f, C, {1.0}), std::invalid_argument);
  }

  TEST_CASE("conditional stats over the uncollected set") {
    const GaussianField f = gen_gaussian_field(7, 13);
    const ConditionalStats prior = conditional_stats(f, {}, {});
    CHECK(prior.cond_cov.isApprox(f.cov, 1e-15));
    CHECK(prior.cond_mean.isZero(0.0));

    const std::vector<int> C{2, 5};
    const ConditionalStats st = conditional_stats(f, C, values_at(f, C));
    CHECK(st.uncollected == std::vector<int>{0, 1, 3, 4, 6});
    const Eigen::MatrixXd expect = oracle::schur(f.cov, C, st.uncollected);
    CHECK((st.cond_cov - expect).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((st.cond_cov - st.cond_cov.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    for (Eigen::Index i = 0; i < st.cond_cov.rows(); ++i) CHECK(st.cond_cov(i, i) >= 0.0);
  }

  TEST_CASE("conditioning never increases variance") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GaussianField f = gen_gaussian_field(12, seed);
      std::vector<int> C;
      for (int j = 0; j < 11; ++j) {
        const int k = 11;
        const double before = conditional_variance(f, C, k);
        C.push_back(j);
        CHECK(conditional_variance(f, C, k) <= before + 1e-9);
      }
    }
  }

  TEST_CASE("entropy argmax is scale invariant") {
    GaussianField f = gen_gaussian_field(9, 4);
    GaussianField g = f;
    g.cov *= 3.7;
    for (std::vector<int> C : {std::vector<int>{}, {0}, {3, 8}}) CHECK(select_next_entropy(f, C) == select_next_entropy(g, C));
  }

  TEST_CASE("full centralized run is a permutation with non-increasing expected error") {
    for (Selector sel : {Selector::Entropy, Selector::Mse}) {
      const GaussianField f = gen_gaussian_field(20, 1);
      const SelectionTrace tr = run_centralized_das(f, sel, 20, 1);
      const auto order = tr.order();
      CHECK(order.size() == 20);
      CHECK(std::set<int>(order.begin(), order.end()).size() == 20);
      double prev = tr.initial_expected_mse;
      for (const auto& r : tr.rounds) {
        CHECK(r.expected_mse <= prev + 1e-9);
        CHECK(r.criterion.size() == 1);
        prev = r.expected_mse;
      }
      CHECK(tr.rounds.back().mse <= 1e-18);
      CHECK(tr.rounds.back().expected_mse == 0.0);
    }
  }

  TEST_CASE("zero rounds leaves the prior error") {
    const GaussianField f = gen_gaussian_field(5, 2);
    const SelectionTrace tr = run_centralized_das(f, Selector::Entropy, 0, 1);
    CHECK(tr.rounds.empty());
    CHECK(tr.initial_mse == doctest::Approx(f.x.squaredNorm()));
  }

  TEST_CASE("budget overrun is rejected") {
    const GaussianField f = gen_gaussian_field(5, 2);
    CHECK_THROWS_AS(run_centralized_das(f, Selector::Entropy, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(run_centralized_das(f, Selector::Mse, 1, 0), std::invalid_argument);
  }

  TEST_CASE("multi-pick rounds replay the greedy oracle") {
    for (Selector sel : {Selector::Entropy, Selector::Mse}) {
      const GaussianField f = gen_gaussian_field(8, 3);
      const SelectionTrace tr = run_centralized_das(f, sel, 2, 2);
      std::vector<int> C;
      for (const auto& r : tr.rounds) {
        REQUIRE(r.selected.size() == 2);
        for (int k : r.selected) {
          const int expect = sel == Selector::Entropy ? oracle::brute_entropy_pick(f.cov, C) : oracle::brute_mse_pick(f.cov, C);
          CHECK(k == expect);
          C.push_back(k);
        }
        const Eigen::VectorXd est = mmse_estimate(f, C, values_at(f, C));
        CHECK(r.mse == doctest::Approx((f.x - est).squaredNorm()).epsilon(1e-9));
        CHECK(std::abs(r.expected_mse - oracle::trace_given(f.cov, C)) <= 1e-10);
      }
    }
  }

  TEST_CASE("criterion values") {
    const GaussianField f = gen_gaussian_field(6, 8);
    const SelectionTrace mse = run_centralized_das(f, Selector::Mse, 1, 1);
    const int k = mse.rounds[0].selected[0];
    CHECK(mse.rounds[0].criterion[0] == doctest::Approx(oracle::trace_given(f.cov, {k})).epsilon(1e-10));

    const SelectionTrace ent = run_centralized_das(f, Selector::Entropy, 1, 1);
    // Joint entropy of all nodes minus the entropy of the picked node.
    const double joint = 0.5 * std::log(std::pow(2 * std::numbers::pi * std::numbers::e, 6) * f.cov.determinant());
    CHECK(ent.rounds[0].criterion[0] == doctest::Approx(joint - gaussian_entropy(1.0)).epsilon(1e-9));
  }

  TEST_CASE("conditioner tracks a dense recomputation") {
    const GaussianField f = gen_gaussian_field(15, 6);
    GaussianConditioner cond(f.cov);
    std::vector<int> C;
    for (int k : {4, 0, 9, 13, 2}) {
      CHECK(cond.observe(k, f.x[k]));
      C.push_back(k);
      const auto U = oracle::all_but(15, C);
      const Eigen::MatrixXd full = cond.covariance();
      CHECK((oracle::submatrix(full, U, U) - oracle::schur(f.cov, C, U)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    CHECK_THROWS_AS(cond.observe(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cond.observe(15, 0.0), std::invalid_argument);
    GaussianConditioner idx_only(f.cov);
    idx_only.observe(3);
    CHECK_THROWS_AS(idx_only.mean(), std::logic_error);
  }

  TEST_CASE("CSV exports") {
    const GaussianField f = gen_gaussian_field(4, 1);
    const SelectionTrace tr = run_centralized_das(f, Selector::Entropy, 2, 2);
    CsvTable t = trace_table(false);
    append_trace_rows(t, tr);
    const std::string s = t.str();
    CHECK(s.rfind("round,selected_indices,criterion_value,mse\n", 0) == 0);
    CHECK(t.rows() == 2);
    CHECK(s.find(std::to_string(tr.rounds[0].selected[0]) + ";" + std::to_string(tr.rounds[0].selected[1])) != std::string::npos);
    const CsvTable p = path_table(f, tr.order());
    CHECK(p.header() == std::vector<std::string>{"t", "k", "x", "y"});
    CHECK(p.rows() == 4);
    CHECK(mean_hop_distance(f, {0}) == 0.0);
    CHECK(mean_hop_distance(f, {0, 1}) ==
          doctest::Approx(std::hypot(f.positions[0][0] - f.positions[1][0], f.positions[0][1] - f.positions[1][1])));
  }
}
