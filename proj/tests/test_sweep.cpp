#include <cmath>
#include <vector>

#include "doctest.h"
#include "twostage/errors.hpp"
#include "twostage/sweep.hpp"

using namespace twostage;

namespace {

const std::vector<PriorSpec> kNormal2 = {PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0),
                                         PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0)};

std::vector<SweepRow> rows_with_ratios(const std::vector<double>& ratios) {
  std::vector<SweepRow> rows;
  for (double ratio : ratios) {
    SweepRow row;
    row.lower_bound = {2.0, 0.001, 1000};
    row.scaled_risk = {2.0 * ratio, 0.001, 1000};
    row.ratio = ratio;
    row.ratio_std_error = 0.001;
    rows.push_back(row);
  }
  return rows;
}

SweepOptions small(std::uint64_t reps) {
  SweepOptions o;
  o.replications = reps;
  o.lower_bound_draws = 2000;
  return o;
}

}  // namespace

TEST_CASE("cost schedule validation") {
  CHECK_THROWS_AS(CostSchedule({0.5, 0.5}, {1e-3, 1e-2}), InvalidInput);
  CHECK_THROWS_AS(CostSchedule({0.5, 0.5}, {}), InvalidInput);
  CHECK_THROWS_AS(CostSchedule({0.6, 0.6}, {1e-2}), InvalidInput);
  const CostSchedule s({0.25, 0.75}, {1e-2});
  CHECK(s.costs_at(1e-2)[1] == doctest::Approx(7.5e-3));
}

TEST_CASE("check_convergence") {
  CHECK(check_convergence(rows_with_ratios({1.8, 1.3, 1.12, 1.06}), 0.10) == Verdict::Optimal);
  CHECK(check_convergence(rows_with_ratios({5.2, 7.9, 12.4}), 0.10) == Verdict::NotConverged);
  CHECK(check_convergence(rows_with_ratios({1.8, 1.3, 1.2}), 0.10) == Verdict::NotConverged);
  auto zero = rows_with_ratios({1.5, 1.2, 1.05});
  zero[1].scaled_risk.mean = 0.0;
  zero[1].ratio = 0.0;
  CHECK(check_convergence(zero, 0.10) == Verdict::ViolatedLowerBound);
  CHECK_THROWS_AS(check_convergence(rows_with_ratios({1.1, 1.0}), 0.10), InvalidInput);
  CHECK(to_string(Verdict::NotConverged) == "not-converged");
}

TEST_CASE("is_non_increasing tolerates noise") {
  const std::vector<double> v = {1.0, 1.02, 0.9};
  const std::vector<double> se = {0.01, 0.01, 0.01};
  CHECK(is_non_increasing(v, se, 2.0));
  const std::vector<double> tight = {0.001, 0.001, 0.001};
  CHECK_FALSE(is_non_increasing(v, tight, 2.0));
}

TEST_CASE("run_sweep shape and row invariants") {
  const CostSchedule schedule({0.5, 0.5}, {1e-2, 1e-3, 1e-4});
  const auto rows = run_sweep(kNormal2, schedule, TwoStagePolicy{}, small(500));
  REQUIRE(rows.size() == 3);
  for (const SweepRow& row : rows) {
    CHECK(row.lower_bound == rows.front().lower_bound);
    CHECK(row.ratio == doctest::Approx(row.scaled_risk.mean / row.lower_bound.mean));
    CHECK(row.expansion_residual < 1e-9);
    CHECK(row.mean_m[0] >= row.mean_k[0]);
  }
  CHECK(rows[0].t == 1e-2);
  CHECK(rows[2].mean_m[0] > rows[0].mean_m[0]);
}

TEST_CASE("single scale gives one row") {
  const CostSchedule schedule({0.5, 0.5}, {1e-3});
  CHECK(cs1_diagnostic(kNormal2, schedule, TwoStagePolicy{}, small(100)).size() == 1);
  CHECK(cs2_diagnostic(kNormal2, schedule, TwoStagePolicy{}, small(100)).size() == 1);
}

TEST_CASE("cs2 for a single normal population under the oracle") {
  // U = V = 1 exactly, so the diagnostic is deterministic.
  const std::vector<PriorSpec> one = {PriorSpec(FamilyKind::NormalKnownVar, 1.0, 0.0)};
  const CostSchedule schedule({1.0}, {2e-4});
  const auto cs2 = cs2_diagnostic(one, schedule, OraclePolicy{}, small(10));
  const double root_c = std::sqrt(2e-4);
  const double m = std::round(1.0 / root_c - 1.0);  // 70
  const double w = m + 1.0;
  const double expected = (1.0 - w * root_c) * (1.0 - w * root_c) / (w * root_c);
  CHECK(m == 70.0);
  CHECK(cs2[0].mean == doctest::Approx(expected).epsilon(1e-9));
  CHECK(cs2[0].std_error == doctest::Approx(0.0));
}

TEST_CASE("fixed allocation is the negative control") {
  const CostSchedule schedule({0.5, 0.5}, {1e-2, 1e-3, 1e-4, 1e-5});
  const auto rows = run_sweep(kNormal2, schedule, FixedVectorPolicy{{1, 1}}, small(2000));
  CHECK(check_convergence(rows, 0.10) == Verdict::NotConverged);
  CHECK(rows.back().ratio > 10.0);
  // cs1 stays away from zero when the sizes never grow.
  CHECK(std::abs(rows.back().cs1.mean) > 10 * rows.back().cs1.std_error);
}

TEST_CASE("budget-matched balanced spends the two-stage budget") {
  const CostSchedule schedule({0.5, 0.5}, {1e-2, 1e-3});
  const auto two = run_sweep(kNormal2, schedule, TwoStagePolicy{}, small(500));
  const auto bal = run_sweep(kNormal2, schedule, BudgetMatchedBalanced{}, small(500));
  for (std::size_t s = 0; s < two.size(); ++s) {
    const double c_total = schedule.costs_at(two[s].t).total();
    CHECK(bal[s].mean_budget <= two[s].mean_budget);
    CHECK(bal[s].mean_budget > two[s].mean_budget - c_total);
    CHECK(bal[s].mean_m[0] == bal[s].mean_m[1]);
  }
}

TEST_CASE("independent draws per scale change results but not the bound") {
  const CostSchedule schedule({0.5, 0.5}, {1e-2, 1e-3});
  SweepOptions crn = small(300);
  SweepOptions indep = small(300);
  indep.common_random_numbers = false;
  const auto a = run_sweep(kNormal2, schedule, TwoStagePolicy{}, crn);
  const auto b = run_sweep(kNormal2, schedule, TwoStagePolicy{}, indep);
  CHECK(a[0].lower_bound == b[0].lower_bound);
  CHECK(a[1].scaled_risk.mean != b[1].scaled_risk.mean);
}
