#include "twostage/expfam.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "twostage/errors.hpp"

namespace twostage {

namespace {

bool is_nonneg_integer(double x) {
  return std::isfinite(x) && x >= 0.0 && std::floor(x) == x;
}

double gamma_draw(double shape, double rate, RandomStream& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng.engine());
}

double beta_draw(double a, double b, RandomStream& rng) {
  for (;;) {
    const double x = gamma_draw(a, 1.0, rng);
    const double y = gamma_draw(b, 1.0, rng);
    if (x + y > 0.0) return x / (x + y);
  }
}

// Inverse Gamma moments E[lambda^-2] need shape > 2.
void require_inverse_square_moment(const PosteriorState& state) {
  if (state.weight() <= 1.0) {
    std::ostringstream os;
    os << "ExponentialRate posterior E[1/lambda^2] needs m + r > 1 (got "
       << state.weight() << ")";
    throw MomentError(os.str());
  }
}

}  // namespace

std::string_view to_string(FamilyKind family) {
  switch (family) {
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::ExponentialRate: return "exponential";
    case FamilyKind::NormalKnownVar: return "normal";
  }
  return "unknown";
}

std::optional<FamilyKind> family_from_string(std::string_view name) {
  for (FamilyKind f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

PriorSpec::PriorSpec(FamilyKind family, double r, double mu)
    : family_(family), r_(r), mu_(mu) {
  if (!(std::isfinite(r) && r > 0.0)) {
    throw InvalidInput("prior pseudo-count r must be a positive finite number");
  }
  if (!std::isfinite(mu)) throw InvalidInput("prior mean mu must be finite");
  switch (family) {
    case FamilyKind::Bernoulli:
      if (!(mu > 0.0 && mu < 1.0)) {
        throw InvalidInput("Bernoulli prior mean mu must lie in (0, 1)");
      }
      break;
    case FamilyKind::Poisson:
    case FamilyKind::ExponentialRate:
      if (!(mu > 0.0)) {
        throw InvalidInput(std::string(to_string(family)) +
                           " prior mean mu must be positive");
      }
      break;
    case FamilyKind::NormalKnownVar:
      break;
  }
}

PosteriorState::PosteriorState(PriorSpec prior, std::uint64_t m, double sum_x)
    : prior_(prior), m_(m), sum_x_(sum_x) {
  if (!std::isfinite(sum_x)) throw InvalidInput("sum of observations must be finite");
  if (m == 0) {
    if (sum_x != 0.0) throw InvalidInput("empty sample must have zero sum");
    return;
  }
  const auto md = static_cast<double>(m);
  switch (prior.family()) {
    case FamilyKind::Bernoulli:
      if (!is_nonneg_integer(sum_x) || sum_x > md) {
        throw InvalidInput("Bernoulli sum must be an integer in [0, m]");
      }
      break;
    case FamilyKind::Poisson:
      if (!is_nonneg_integer(sum_x)) {
        throw InvalidInput("Poisson sum must be a nonnegative integer");
      }
      break;
    case FamilyKind::ExponentialRate:
      if (!(sum_x > 0.0)) throw InvalidInput("exponential sum must be positive");
      break;
    case FamilyKind::NormalKnownVar:
      break;
  }
}

ConjugateDistribution conjugate_posterior(const PosteriorState& state) {
  const PriorSpec& prior = state.prior();
  const double r = prior.r();
  const double mu = prior.mu();
  const auto m = static_cast<double>(state.m());
  const double s = state.sum_x();
  switch (prior.family()) {
    case FamilyKind::Bernoulli:
      return BetaParams{r * mu + s, r * (1.0 - mu) + m - s};
    case FamilyKind::Poisson:
      return GammaParams{r * mu + s, r + m};
    case FamilyKind::ExponentialRate:
      return GammaParams{r + m + 1.0, r * mu + s};
    case FamilyKind::NormalKnownVar:
      return NormalParams{(r * mu + s) / (r + m), 1.0 / (r + m)};
  }
  throw InvalidInput("unknown family");
}

double variance_of_mean(FamilyKind family, double mean) {
  switch (family) {
    case FamilyKind::Bernoulli: return mean * (1.0 - mean);
    case FamilyKind::Poisson: return mean;
    case FamilyKind::ExponentialRate: return mean * mean;
    case FamilyKind::NormalKnownVar: return 1.0;
  }
  return 0.0;
}

ThetaDraw sample_theta(const PriorSpec& prior, RandomStream& rng) {
  const double r = prior.r();
  const double mu = prior.mu();
  double mean = 0.0;
  switch (prior.family()) {
    case FamilyKind::Bernoulli:
      mean = beta_draw(r * mu, r * (1.0 - mu), rng);
      break;
    case FamilyKind::Poisson:
      mean = gamma_draw(r * mu, r, rng);
      break;
    case FamilyKind::ExponentialRate:
      mean = 1.0 / gamma_draw(r + 1.0, r * mu, rng);
      break;
    case FamilyKind::NormalKnownVar:
      mean = std::normal_distribution<double>(mu, 1.0 / std::sqrt(r))(rng.engine());
      break;
  }
  return ThetaDraw{mean, variance_of_mean(prior.family(), mean)};
}

double sample_obs(const ThetaDraw& theta, FamilyKind family, RandomStream& rng) {
  rng.count_observation();
  auto& eng = rng.engine();
  switch (family) {
    case FamilyKind::Bernoulli:
      return std::bernoulli_distribution(theta.mean)(eng) ? 1.0 : 0.0;
    case FamilyKind::Poisson:
      return static_cast<double>(std::poisson_distribution<std::int64_t>(theta.mean)(eng));
    case FamilyKind::ExponentialRate:
      return std::exponential_distribution<double>(1.0 / theta.mean)(eng);
    case FamilyKind::NormalKnownVar:
      return std::normal_distribution<double>(theta.mean, 1.0)(eng);
  }
  return 0.0;
}

PosteriorState update(const PosteriorState& state, double x) {
  bool ok = std::isfinite(x);
  switch (state.prior().family()) {
    case FamilyKind::Bernoulli: ok = ok && (x == 0.0 || x == 1.0); break;
    case FamilyKind::Poisson: ok = ok && is_nonneg_integer(x); break;
    case FamilyKind::ExponentialRate: ok = ok && x > 0.0; break;
    case FamilyKind::NormalKnownVar: break;
  }
  if (!ok) {
    std::ostringstream os;
    os << "observation " << x << " is outside the "
       << to_string(state.prior().family()) << " support";
    throw InvalidInput(os.str());
  }
  return PosteriorState(state.prior(), state.m() + 1, state.sum_x() + x);
}

double posterior_mean_psi_prime(const PosteriorState& state) {
  const PriorSpec& prior = state.prior();
  return (prior.r() * prior.mu() + state.sum_x()) / state.weight();
}

double posterior_mean_psi_second(const PosteriorState& state) {
  const ConjugateDistribution dist = conjugate_posterior(state);
  switch (state.prior().family()) {
    case FamilyKind::Bernoulli: {
      const auto [a, b] = std::get<BetaParams>(dist);
      return a * b / ((a + b) * (a + b + 1.0));
    }
    case FamilyKind::Poisson: {
      const auto [shape, rate] = std::get<GammaParams>(dist);
      return shape / rate;
    }
    case FamilyKind::ExponentialRate: {
      require_inverse_square_moment(state);
      const auto [shape, rate] = std::get<GammaParams>(dist);
      return rate * rate / ((shape - 1.0) * (shape - 2.0));
    }
    case FamilyKind::NormalKnownVar:
      return 1.0;
  }
  return 0.0;
}

double posterior_mean_psi_prime_sq(const PosteriorState& state) {
  const ConjugateDistribution dist = conjugate_posterior(state);
  switch (state.prior().family()) {
    case FamilyKind::Bernoulli: {
      const auto [a, b] = std::get<BetaParams>(dist);
      return a * (a + 1.0) / ((a + b) * (a + b + 1.0));
    }
    case FamilyKind::Poisson: {
      const auto [shape, rate] = std::get<GammaParams>(dist);
      return shape * (shape + 1.0) / (rate * rate);
    }
    case FamilyKind::ExponentialRate: {
      // psi'^2 = psi'' = 1/lambda^2 for this family.
      require_inverse_square_moment(state);
      const auto [shape, rate] = std::get<GammaParams>(dist);
      return rate * rate / ((shape - 1.0) * (shape - 2.0));
    }
    case FamilyKind::NormalKnownVar: {
      const auto [mean, variance] = std::get<NormalParams>(dist);
      return mean * mean + variance;
    }
  }
  return 0.0;
}

MomentCheck check_moment_condition(const PriorSpec& prior, int p) {
  if (p < 1) return {false, "moment order p must be >= 1"};
  if (prior.family() != FamilyKind::ExponentialRate) return {};
  // Under Gamma(shape r+1) both psi''^p and psi'^(2p) are lambda^(-2p), which
  // is integrable iff shape > 2p.
  const double shape = prior.r() + 1.0;
  if (shape > 2.0 * p) return {};
  std::ostringstream os;
  os << "E[psi''(theta)^" << p << "] and E[psi'(theta)^" << 2 * p
     << "] are infinite: ExponentialRate prior Gamma shape r+1 = " << shape
     << " must exceed 2p = " << 2 * p;
  return {false, os.str()};
}

double true_v(std::size_t i, std::span<const ThetaDraw> thetas) {
  if (i >= thetas.size()) throw InvalidInput("population index out of range");
  double v = thetas[i].var;
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    if (j != i) v *= thetas[j].mean * thetas[j].mean;
  }
  return v;
}

double u_from_states(std::size_t i, std::span<const PosteriorState> states) {
  if (i >= states.size()) throw InvalidInput("population index out of range");
  double u = posterior_mean_psi_second(states[i]);
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j != i) u *= posterior_mean_psi_prime_sq(states[j]);
  }
  return u;
}

}  // namespace twostage
