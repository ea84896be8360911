#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "twostage/errors.hpp"
#include "twostage/riskmc.hpp"

using namespace twostage;

namespace {

const std::vector<PriorSpec> kNormal2 = {PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0),
                                         PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0)};

}  // namespace

TEST_CASE("summarize") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const RiskEstimate e = summarize(xs);
  CHECK(e.mean == 2.5);
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.replications == 4);
}

TEST_CASE("risk with no data equals the prior variance of the estimand") {
  // n=1 standard normal prior, m=0: E[(0 - theta)^2] = 1.
  const std::vector<PriorSpec> one = {PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0)};
  const RiskEstimate e = estimate_risk(one, CostVector({1e-3}), FixedVectorPolicy{{0}}, 20000, 4);
  CHECK(std::abs(e.mean - 1.0) < 3 * e.std_error);
}

TEST_CASE("fixed-size risk and approximate risk for a single normal population") {
  const std::vector<PriorSpec> one = {PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0)};
  const CostVector costs({1e-3});
  for (std::uint64_t m : {1, 5, 20}) {
    const RiskEstimate risk = estimate_risk(one, costs, FixedVectorPolicy{{m}}, 20000, 8);
    const double expected = 1.0 / (1.0 + m) + 1e-3 * m;
    CAPTURE(m);
    CHECK(std::abs(risk.mean - expected) < 3 * risk.std_error);
    const RiskEstimate approx = estimate_approx_risk(one, costs, FixedVectorPolicy{{m}}, 100, 8);
    CHECK(approx.mean == doctest::Approx(expected).epsilon(1e-12));
    CHECK(approx.std_error == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("Bernoulli risk lies strictly inside (0, 1)") {
  const std::vector<PriorSpec> bern = {PriorSpec(FamilyKind::Bernoulli, 2.0, 0.5),
                                       PriorSpec(FamilyKind::Bernoulli, 2.0, 0.5)};
  const RiskEstimate e = estimate_risk(bern, CostVector({1e-3, 1e-3}), TwoStagePolicy{}, 2000, 3);
  CHECK(e.mean > 0.0);
  CHECK(e.mean < 1.0);
}

TEST_CASE("replications below two are rejected") {
  CHECK_THROWS_AS(estimate_risk(kNormal2, CostVector({1e-3, 1e-3}), TwoStagePolicy{}, 1, 1),
                  InvalidInput);
  CHECK_THROWS_AS(estimate_approx_risk(kNormal2, CostVector({1e-3, 1e-3}), TwoStagePolicy{}, 0, 1),
                  InvalidInput);
}

TEST_CASE("determinism") {
  const CostVector costs({1e-3, 2e-3});
  SUBCASE("same seed, same results") {
    CHECK(run_replicates(kNormal2, costs, TwoStagePolicy{}, 300, 42, 1) ==
          run_replicates(kNormal2, costs, TwoStagePolicy{}, 300, 42, 1));
  }
  SUBCASE("thread count does not matter") {
    const auto one = run_replicates(kNormal2, costs, TwoStagePolicy{}, 301, 42, 1);
    for (unsigned threads : {2u, 3u, 8u}) {
      CHECK(run_replicates(kNormal2, costs, TwoStagePolicy{}, 301, 42, threads) == one);
    }
    const RiskEstimate a = estimate_risk(kNormal2, costs, TwoStagePolicy{}, 301, 42, 1);
    const RiskEstimate b = estimate_risk(kNormal2, costs, TwoStagePolicy{}, 301, 42, 7);
    CHECK(a == b);
    CHECK(lower_bound(kNormal2, std::vector<double>{0.5, 0.5}, 1001, 5, 1) ==
          lower_bound(kNormal2, std::vector<double>{0.5, 0.5}, 1001, 5, 4));
  }
  SUBCASE("different seeds differ") {
    CHECK_FALSE(estimate_risk(kNormal2, costs, TwoStagePolicy{}, 100, 1) ==
                estimate_risk(kNormal2, costs, TwoStagePolicy{}, 100, 2));
  }
}

TEST_CASE("lower bound") {
  const std::vector<double> lambdas = {0.5, 0.5};
  const RiskEstimate lb = lower_bound(kNormal2, lambdas, 100000, 17);
  // V_i = theta_j^2 with theta_j ~ N(0,1): E|theta| = sqrt(2/pi).
  const double analytic = 4.0 * std::sqrt(0.5) * std::sqrt(2.0 / std::numbers::pi);
  CHECK(std::abs(lb.mean - analytic) < 3 * lb.std_error);
  CHECK_THROWS_AS(lower_bound(kNormal2, std::vector<double>{0.6, 0.6}, 100, 1), InvalidInput);
  CHECK_THROWS_AS(lower_bound(kNormal2, std::vector<double>{1.0}, 100, 1), InvalidInput);
  CHECK_THROWS_AS(lower_bound(kNormal2, std::vector<double>{0.0, 1.0}, 100, 1), InvalidInput);
}

TEST_CASE("scaled risk") {
  const RiskEstimate r{0.1, 0.01, 10};
  const RiskEstimate s = scaled_risk(r, CostVector({5e-5, 5e-5}));
  CHECK(s.mean == doctest::Approx(10.0));
  CHECK(s.std_error == doctest::Approx(1.0));
  CHECK(s.replications == 10);
}

TEST_CASE("AM-GM decomposition") {
  CHECK(approx_risk_term(1.0, 3.0, 1.0, 0.0625) == doctest::Approx(0.4375));
  CHECK(amgm_bound(1.0, 1.0, 0.0625) == doctest::Approx(0.4375));
  CHECK(std::abs(amgm_identity_residual(1.0, 3.0, 1.0, 0.0625)) < 1e-15);
  CHECK_THROWS_AS(amgm_identity_residual(1.0, 0.0, 0.0, 0.1), InvalidInput);

  RandomStream rng(8);
  for (int trial = 0; trial < 10000; ++trial) {
    const double u = std::exp(-6.0 + 12.0 * rng.uniform());
    const double m = std::floor(1e4 * rng.uniform());
    const double r = std::exp(-3.0 + 6.0 * rng.uniform());
    const double c = std::exp(-14.0 + 12.0 * rng.uniform());
    const double lhs = approx_risk_term(u, m, r, c);
    CHECK(std::abs(amgm_identity_residual(u, m, r, c)) < 1e-10 * std::max(1.0, lhs));
    CHECK(lhs >= amgm_bound(u, r, c) - 1e-12 * std::max(1.0, lhs));
  }
}

TEST_CASE("per-replicate invariants") {
  const auto trials = run_replicates(kNormal2, CostVector({1e-3, 1e-3}), TwoStagePolicy{}, 200, 3);
  for (const TrialResult& t : trials) {
    CHECK(t.sq_loss >= 0.0);
    CHECK(t.budget == doctest::Approx(1e-3 * (t.m[0] + t.m[1])));
    CHECK(t.loss() == doctest::Approx(t.sq_loss + t.budget));
    CHECK(t.m[0] >= t.k[0]);
  }
}

TEST_CASE("oracle risk does not exceed two-stage risk on the normal benchmark") {
  const CostVector costs({5e-5, 5e-5});
  const RiskEstimate oracle = estimate_risk(kNormal2, costs, OraclePolicy{}, 4000, 1);
  const RiskEstimate two = estimate_risk(kNormal2, costs, TwoStagePolicy{}, 4000, 1);
  CHECK(oracle.mean <= two.mean + 3 * std::hypot(oracle.std_error, two.std_error));
}

TEST_CASE("risk and approximate risk agree more closely as costs fall") {
  double previous = INFINITY;
  double previous_se = 0.0;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const CostVector costs({0.5 * t, 0.5 * t});
    const auto trials = run_replicates(kNormal2, costs, TwoStagePolicy{}, 4000, 1);
    std::vector<double> diff(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
      diff[i] = (trials[i].loss() - trials[i].approx_loss()) / std::sqrt(costs.total());
    }
    const RiskEstimate d = summarize(diff);
    CAPTURE(t);
    CHECK(std::abs(d.mean) <= previous + 2 * std::hypot(d.std_error, previous_se));
    previous = std::abs(d.mean);
    previous_se = d.std_error;
  }
}
