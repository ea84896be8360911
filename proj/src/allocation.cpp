#include "twostage/allocation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "twostage/errors.hpp"

namespace twostage {

namespace {

// Values within this relative distance of an integer are treated as that
// integer, so that e.g. (1e-4)^(-1/4) counts as exactly 10.
constexpr double kIntegerSnap = 1e-9;

double snap(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= kIntegerSnap * std::max(1.0, std::abs(x))) return nearest;
  return x;
}

std::uint64_t clamp_to_count(double x, std::uint64_t floor_value) {
  if (!(x > static_cast<double>(floor_value))) return floor_value;
  if (x >= 9.0e18) throw InvalidInput("allocation size overflows");
  return static_cast<std::uint64_t>(x);
}

// Observation path shared by all policies: extends `state` to `target`
// observations drawn from `theta`.
PosteriorState draw_until(PosteriorState state, std::uint64_t target,
                          const ThetaDraw& theta, RandomStream& rng) {
  const FamilyKind family = state.prior().family();
  while (state.m() < target) state = update(state, sample_obs(theta, family, rng));
  return state;
}

void check_lengths(std::span<const PriorSpec> priors, const CostVector& costs,
                   std::span<const ThetaDraw> thetas) {
  if (priors.size() != costs.size() || priors.size() != thetas.size()) {
    throw InvalidInput("priors, costs and thetas must have the same length");
  }
}

}  // namespace

CostVector::CostVector(std::vector<double> c) : c_(std::move(c)) {
  if (c_.empty()) throw InvalidInput("cost vector must not be empty");
  for (double ci : c_) {
    if (!(std::isfinite(ci) && ci > 0.0)) throw InvalidInput("costs must be positive and finite");
  }
}

double CostVector::total() const noexcept {
  return std::accumulate(c_.begin(), c_.end(), 0.0);
}

StageOneRule::StageOneRule(double gamma, std::uint64_t k_min) : gamma_(gamma), k_min_(k_min) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw InvalidInput("stage-one gamma must lie in (0, 1/2)");
  if (k_min < 2) throw InvalidInput("stage-one k_min must be at least 2");
}

std::string_view policy_name(const Policy& policy) {
  struct Visitor {
    std::string_view operator()(const TwoStagePolicy&) const { return "two-stage"; }
    std::string_view operator()(const BalancedPolicy&) const { return "balanced"; }
    std::string_view operator()(const PriorOnlyPolicy&) const { return "prior-only"; }
    std::string_view operator()(const OraclePolicy&) const { return "oracle"; }
    std::string_view operator()(const FixedVectorPolicy&) const { return "fixed"; }
  };
  return std::visit(Visitor{}, policy);
}

std::vector<std::uint64_t> stage_one_sizes(const CostVector& costs, const StageOneRule& rule) {
  std::vector<std::uint64_t> k(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const double pilot = std::ceil(snap(std::pow(costs[i], -rule.gamma())));
    k[i] = clamp_to_count(pilot, rule.k_min());
  }
  return k;
}

std::uint64_t stage_two_size(double u, double c, double r, std::uint64_t k) {
  if (!(u >= 0.0) || !(c > 0.0) || !(r > 0.0)) {
    throw InvalidInput("stage_two_size needs U >= 0, c > 0, r > 0");
  }
  return clamp_to_count(std::floor(snap(std::sqrt(u / c) - r)), k);
}

std::vector<std::uint64_t> oracle_sizes(std::span<const double> true_vs, const CostVector& costs,
                                        std::span<const double> rs) {
  if (true_vs.size() != costs.size() || rs.size() != costs.size()) {
    throw InvalidInput("oracle_sizes inputs must have equal lengths");
  }
  std::vector<std::uint64_t> m(costs.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = clamp_to_count(std::round(std::sqrt(true_vs[i] / costs[i]) - rs[i]), 1);
  }
  return m;
}

std::uint64_t balanced_size(const CostVector& costs, double total_budget) {
  if (!(total_budget > 0.0)) throw InvalidInput("balanced budget must be positive");
  const double per_round = costs.total();
  double m = std::floor(total_budget / per_round);
  while ((m + 1.0) * per_round <= total_budget) m += 1.0;
  while (m > 0.0 && m * per_round > total_budget) m -= 1.0;
  if (m < 1.0) {
    std::ostringstream os;
    os << "balanced budget " << total_budget << " cannot buy one observation per population"
       << " (needs " << per_round << ")";
    throw InvalidInput(os.str());
  }
  return static_cast<std::uint64_t>(m);
}

PolicyOutcome run_policy(const Policy& policy, std::span<const PriorSpec> priors,
                         const CostVector& costs, std::span<const ThetaDraw> thetas,
                         RandomStream& rng) {
  check_lengths(priors, costs, thetas);
  const std::size_t n = priors.size();
  PolicyOutcome out;
  out.k.assign(n, 0);
  out.states.reserve(n);
  for (const PriorSpec& prior : priors) out.states.emplace_back(prior);

  if (const auto* two_stage = std::get_if<TwoStagePolicy>(&policy)) {
    out.k = stage_one_sizes(costs, two_stage->rule);
    for (std::size_t i = 0; i < n; ++i) {
      out.states[i] = draw_until(out.states[i], out.k[i], thetas[i], rng);
    }
    out.m.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = u_from_states(i, out.states);
      out.m[i] = stage_two_size(u, costs[i], priors[i].r(), out.k[i]);
    }
  } else if (std::holds_alternative<PriorOnlyPolicy>(policy)) {
    out.m.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.m[i] = stage_two_size(u_from_states(i, out.states), costs[i], priors[i].r(), 1);
    }
  } else if (std::holds_alternative<OraclePolicy>(policy)) {
    std::vector<double> vs(n);
    std::vector<double> rs(n);
    for (std::size_t i = 0; i < n; ++i) {
      vs[i] = true_v(i, thetas);
      rs[i] = priors[i].r();
    }
    out.m = oracle_sizes(vs, costs, rs);
  } else if (const auto* balanced = std::get_if<BalancedPolicy>(&policy)) {
    out.m.assign(n, balanced_size(costs, balanced->total_budget));
  } else {
    const auto& fixed = std::get<FixedVectorPolicy>(policy);
    if (fixed.m.size() != n) throw InvalidInput("fixed allocation length must equal n");
    out.m = fixed.m;
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.states[i] = draw_until(out.states[i], out.m[i], thetas[i], rng);
  }
  return out;
}

}  // namespace twostage
