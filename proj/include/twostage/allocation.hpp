#pragma once

// Allocation policies: the two-stage rule and the baselines it is compared to.

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "twostage/expfam.hpp"
#include "twostage/random.hpp"

namespace twostage {

/// Per-unit observation costs, one strictly positive entry per population.
class CostVector {
 public:
  explicit CostVector(std::vector<double> c);

  std::size_t size() const noexcept { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  std::span<const double> values() const noexcept { return c_; }
  double total() const noexcept;

 private:
  std::vector<double> c_;
};

/// Pilot sizes k_i = max(k_min, ceil(c_i^-gamma)), 0 < gamma < 1/2.
class StageOneRule {
 public:
  StageOneRule() = default;
  StageOneRule(double gamma, std::uint64_t k_min);

  double gamma() const noexcept { return gamma_; }
  std::uint64_t k_min() const noexcept { return k_min_; }

  friend bool operator==(const StageOneRule&, const StageOneRule&) = default;

 private:
  double gamma_ = 0.25;
  std::uint64_t k_min_ = 2;
};

struct TwoStagePolicy {
  StageOneRule rule;
};
/// Equal sizes, as large as the budget allows.
struct BalancedPolicy {
  double total_budget = 0.0;
};
/// Stage-two formula fed with prior-only U (no pilot data).
struct PriorOnlyPolicy {};
/// Clairvoyant sizes computed from the true V_i.
struct OraclePolicy {};
struct FixedVectorPolicy {
  std::vector<std::uint64_t> m;
};

using Policy = std::variant<TwoStagePolicy, BalancedPolicy, PriorOnlyPolicy,
                            OraclePolicy, FixedVectorPolicy>;

std::string_view policy_name(const Policy& policy);

std::vector<std::uint64_t> stage_one_sizes(const CostVector& costs,
                                           const StageOneRule& rule);

/// m_i = max{k_i, floor(sqrt(U/c) - r)}.
std::uint64_t stage_two_size(double u, double c, double r, std::uint64_t k);

/// m_i = max(1, round(sqrt(V_i / c_i) - r_i)).
std::vector<std::uint64_t> oracle_sizes(std::span<const double> true_vs,
                                        const CostVector& costs,
                                        std::span<const double> rs);

/// Largest common size m with m * sum(c) <= budget. Throws when it is zero.
std::uint64_t balanced_size(const CostVector& costs, double total_budget);

struct PolicyOutcome {
  std::vector<PosteriorState> states;  // final posteriors, m_i observations each
  std::vector<std::uint64_t> m;
  std::vector<std::uint64_t> k;        // pilot sizes; zero for non-adaptive policies
};

/// Runs one allocation given the latent draws. Observations are drawn from
/// `rng` population by population, pilots first.
PolicyOutcome run_policy(const Policy& policy, std::span<const PriorSpec> priors,
                         const CostVector& costs, std::span<const ThetaDraw> thetas,
                         RandomStream& rng);

}  // namespace twostage
