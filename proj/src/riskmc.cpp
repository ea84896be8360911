#include "twostage/riskmc.hpp"

#include <cmath>
#include <numeric>

#include "twostage/errors.hpp"
#include "twostage/parallel.hpp"
#include "twostage/random.hpp"

namespace twostage {

namespace {

constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kObservationStream = 1;

void require_replications(std::uint64_t replications) {
  if (replications < 2) throw InvalidInput("replications must be at least 2");
}

}  // namespace

double TrialResult::approx_loss() const noexcept {
  return std::accumulate(approx_risk_terms.begin(), approx_risk_terms.end(), 0.0) + budget;
}

RiskEstimate summarize(std::span<const double> values) {
  RiskEstimate out;
  out.replications = values.size();
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  out.mean = pairwise_sum(values) / n;
  if (values.size() < 2) return out;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - out.mean;
    sq[i] = d * d;
  }
  out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  return out;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed, index);
}

TrialResult replicate_once(std::span<const PriorSpec> priors, const CostVector& costs,
                           const Policy& policy, std::uint64_t rep_seed) {
  const std::size_t n = priors.size();
  RandomStream theta_rng(derive_seed(rep_seed, kThetaStream));
  std::vector<ThetaDraw> thetas;
  thetas.reserve(n);
  for (const PriorSpec& prior : priors) thetas.push_back(sample_theta(prior, theta_rng));

  RandomStream obs_rng(derive_seed(rep_seed, kObservationStream));
  PolicyOutcome outcome = run_policy(policy, priors, costs, thetas, obs_rng);

  TrialResult t;
  t.m = std::move(outcome.m);
  t.k = std::move(outcome.k);
  t.estimate = 1.0;
  t.target = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.estimate *= posterior_mean_psi_prime(outcome.states[i]);
    t.target *= thetas[i].mean;
    t.budget += costs[i] * static_cast<double>(t.m[i]);
  }
  t.sq_loss = (t.estimate - t.target) * (t.estimate - t.target);
  t.approx_risk_terms.resize(n);
  t.u.resize(n);
  t.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.u[i] = u_from_states(i, outcome.states);
    t.v[i] = true_v(i, thetas);
    t.approx_risk_terms[i] = t.u[i] / outcome.states[i].weight();
  }
  return t;
}

std::vector<TrialResult> run_replicates(std::span<const PriorSpec> priors,
                                        const CostVector& costs, const Policy& policy,
                                        std::uint64_t replications, std::uint64_t seed,
                                        unsigned threads) {
  if (priors.size() != costs.size()) throw InvalidInput("priors and costs differ in length");
  std::vector<TrialResult> results(replications);
  parallel_for(replications, threads, [&](std::size_t rep) {
    results[rep] = replicate_once(priors, costs, policy, replicate_seed(seed, rep));
  });
  return results;
}

RiskEstimate estimate_risk(std::span<const PriorSpec> priors, const CostVector& costs,
                           const Policy& policy, std::uint64_t replications,
                           std::uint64_t seed, unsigned threads) {
  require_replications(replications);
  const auto trials = run_replicates(priors, costs, policy, replications, seed, threads);
  std::vector<double> losses(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) losses[i] = trials[i].loss();
  return summarize(losses);
}

RiskEstimate estimate_approx_risk(std::span<const PriorSpec> priors, const CostVector& costs,
                                  const Policy& policy, std::uint64_t replications,
                                  std::uint64_t seed, unsigned threads) {
  require_replications(replications);
  const auto trials = run_replicates(priors, costs, policy, replications, seed, threads);
  std::vector<double> losses(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) losses[i] = trials[i].approx_loss();
  return summarize(losses);
}

void validate_lambdas(std::span<const double> lambdas, std::size_t n) {
  if (lambdas.size() != n) throw InvalidInput("lambdas must have one entry per population");
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l > 0.0 && l <= 1.0)) throw InvalidInput("each lambda must lie in (0, 1]");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("lambdas must sum to 1");
}

RiskEstimate lower_bound(std::span<const PriorSpec> priors, std::span<const double> lambdas,
                         std::uint64_t draws, std::uint64_t seed, unsigned threads) {
  validate_lambdas(lambdas, priors.size());
  require_replications(draws);
  std::vector<double> values(draws);
  parallel_for(draws, threads, [&](std::size_t d) {
    RandomStream rng(derive_seed(replicate_seed(seed, d), kThetaStream));
    std::vector<ThetaDraw> thetas;
    thetas.reserve(priors.size());
    for (const PriorSpec& prior : priors) thetas.push_back(sample_theta(prior, rng));
    double s = 0.0;
    for (std::size_t i = 0; i < priors.size(); ++i) {
      s += std::sqrt(lambdas[i]) * std::sqrt(true_v(i, thetas));
    }
    values[d] = 2.0 * s;
  });
  return summarize(values);
}

RiskEstimate scaled_risk(const RiskEstimate& risk, const CostVector& costs) {
  const double scale = std::sqrt(costs.total());
  return {risk.mean / scale, risk.std_error / scale, risk.replications};
}

double approx_risk_term(double u, double m, double r, double c) {
  return u / (m + r) + c * m;
}

double amgm_bound(double u, double r, double c) {
  return 2.0 * std::sqrt(c * u) - c * r;
}

double amgm_identity_residual(double u, double m, double r, double c) {
  if (!(m + r > 0.0)) throw InvalidInput("amgm identity needs m + r > 0");
  const double w = m + r;
  const double gap = std::sqrt(u / w) - std::sqrt(c * w);
  return approx_risk_term(u, m, r, c) - (gap * gap + amgm_bound(u, r, c));
}

}  // namespace twostage
