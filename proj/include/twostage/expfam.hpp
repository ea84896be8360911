#pragma once

// Conjugate one-parameter exponential families.
//
// Each population has density proportional to exp(theta*x - psi(theta)) and a
// conjugate prior proportional to exp(r*(mu*theta - psi(theta))). Latent
// draws are stored in moment form: mean = psi'(theta), var = psi''(theta).
//
// Concrete prior/posterior mappings:
//   Bernoulli        p      ~ Beta(r*mu, r*(1-mu))
//   Poisson          lambda ~ Gamma(shape r*mu, rate r)
//   ExponentialRate  lambda ~ Gamma(shape r+1, rate r*mu), mean = 1/lambda
//   NormalKnownVar   theta  ~ Normal(mu, 1/r), unit observation variance

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "twostage/random.hpp"

namespace twostage {

enum class FamilyKind { Bernoulli, Poisson, ExponentialRate, NormalKnownVar };

inline constexpr FamilyKind kAllFamilies[] = {
    FamilyKind::Bernoulli, FamilyKind::Poisson, FamilyKind::ExponentialRate,
    FamilyKind::NormalKnownVar};

std::string_view to_string(FamilyKind family);
std::optional<FamilyKind> family_from_string(std::string_view name);

/// Conjugate prior hyperparameters. Construction validates r > 0 and that mu
/// lies strictly inside the family's mean domain.
class PriorSpec {
 public:
  PriorSpec(FamilyKind family, double r, double mu);

  FamilyKind family() const noexcept { return family_; }
  double r() const noexcept { return r_; }
  double mu() const noexcept { return mu_; }

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  FamilyKind family_;
  double r_;
  double mu_;
};

/// Prior plus sufficient statistics (count, sum) of the observations seen.
class PosteriorState {
 public:
  explicit PosteriorState(PriorSpec prior) : prior_(prior) {}
  /// Validates that (m, sum_x) is reachable for the family.
  PosteriorState(PriorSpec prior, std::uint64_t m, double sum_x);

  const PriorSpec& prior() const noexcept { return prior_; }
  std::uint64_t m() const noexcept { return m_; }
  double sum_x() const noexcept { return sum_x_; }

  /// Effective sample size m + r.
  double weight() const noexcept { return static_cast<double>(m_) + prior_.r(); }

  friend bool operator==(const PosteriorState&, const PosteriorState&) = default;

 private:
  PriorSpec prior_;
  std::uint64_t m_ = 0;
  double sum_x_ = 0.0;
};

/// One realization of a latent parameter: (psi'(theta), psi''(theta)).
struct ThetaDraw {
  double mean = 0.0;
  double var = 0.0;

  friend bool operator==(const ThetaDraw&, const ThetaDraw&) = default;
};

struct BetaParams {
  double a;
  double b;
};
struct GammaParams {
  double shape;
  double rate;
};
struct NormalParams {
  double mean;
  double variance;
};
using ConjugateDistribution = std::variant<BetaParams, GammaParams, NormalParams>;

/// Distribution of the natural latent quantity (p, lambda or theta) under the
/// current posterior.
ConjugateDistribution conjugate_posterior(const PosteriorState& state);

/// psi''(theta) as a function of psi'(theta) for the family.
double variance_of_mean(FamilyKind family, double mean);

ThetaDraw sample_theta(const PriorSpec& prior, RandomStream& rng);

/// Draws one observation given the latent parameter and counts it on `rng`.
double sample_obs(const ThetaDraw& theta, FamilyKind family, RandomStream& rng);

/// Throws InvalidInput when x lies outside the family's observation support.
PosteriorState update(const PosteriorState& state, double x);

/// E[psi'(theta) | data] = (r*mu + sum_x) / (m + r).
double posterior_mean_psi_prime(const PosteriorState& state);

/// E[psi''(theta) | data]. Throws MomentError for ExponentialRate when m + r <= 1.
double posterior_mean_psi_second(const PosteriorState& state);

/// E[psi'(theta)^2 | data]. Same existence condition as above.
double posterior_mean_psi_prime_sq(const PosteriorState& state);

struct MomentCheck {
  bool validated = true;
  std::string violation;  // empty when validated

  explicit operator bool() const noexcept { return validated; }
};

/// Checks E[psi''^p] < inf and E[psi'^(2p)] < inf under the prior.
MomentCheck check_moment_condition(const PriorSpec& prior, int p);

enum class MomentTag { PsiPrime, PsiSecond, PsiPrimeSq };

/// Posterior expectation of the tagged function computed by adaptive
/// quadrature against the posterior density. Validation oracle for the closed
/// forms; throws OracleFailure when the integrator misses its tolerance.
double oracle_posterior_moment(const PosteriorState& state, MomentTag tag);

/// V_i = psi''(theta_i) * prod_{j != i} psi'(theta_j)^2, 0-based i.
double true_v(std::size_t i, std::span<const ThetaDraw> thetas);

/// U_i = E[V_i | data] for a-priori independent populations, 0-based i.
double u_from_states(std::size_t i, std::span<const PosteriorState> states);

}  // namespace twostage
