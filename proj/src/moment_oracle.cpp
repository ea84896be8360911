// Quadrature oracle for posterior moments. Integrates against the posterior
// density directly and never touches the closed-form moment code.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "twostage/errors.hpp"
#include "twostage/expfam.hpp"

namespace twostage {

namespace {

namespace bq = boost::math::quadrature;

constexpr double kRelTol = 1e-9;
constexpr double kAcceptRelError = 1e-7;

// g(psi'(theta)) for the families whose latent quantity is the mean itself.
double moment_integrand(FamilyKind family, MomentTag tag, double mean) {
  switch (tag) {
    case MomentTag::PsiPrime: return mean;
    case MomentTag::PsiSecond: return variance_of_mean(family, mean);
    case MomentTag::PsiPrimeSq: return mean * mean;
  }
  return 0.0;
}

void check(double value, double error, double l1, const char* what) {
  const double scale = std::max(std::abs(value), l1);
  if (!std::isfinite(value) || !(error <= kAcceptRelError * scale + 1e-300)) {
    std::ostringstream os;
    os << "quadrature for " << what << " did not converge (value " << value
       << ", error estimate " << error << ")";
    throw OracleFailure(os.str());
  }
}

template <class F>
double integrate_checked(F f, double lo, double hi, const char* what) {
  double err = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    if (std::isinf(hi)) {
      bq::exp_sinh<double> integrator;
      value = integrator.integrate(f, lo, hi, kRelTol, &err, &l1);
    } else {
      bq::tanh_sinh<double> integrator;
      value = integrator.integrate(f, lo, hi, kRelTol, &err, &l1);
    }
  } catch (const std::exception& e) {
    throw OracleFailure(std::string("quadrature for ") + what + " failed: " + e.what());
  }
  check(value, err, l1, what);
  return value;
}

// The upper half is integrated in y = 1 - x so that a singular endpoint at
// x = 1 keeps full precision.
double beta_moment(BetaParams p, FamilyKind family, MomentTag tag) {
  const double log_norm =
      std::lgamma(p.a + p.b) - std::lgamma(p.a) - std::lgamma(p.b);
  auto density = [&](double x, double log_x, double log_1mx) {
    return moment_integrand(family, tag, x) *
           std::exp(log_norm + (p.a - 1.0) * log_x + (p.b - 1.0) * log_1mx);
  };
  auto lower = [&](double x) {
    if (x <= 0.0) return 0.0;
    return density(x, std::log(x), std::log1p(-x));
  };
  auto upper = [&](double y) {
    if (y <= 0.0) return 0.0;
    return density(1.0 - y, std::log1p(-y), std::log(y));
  };
  const double split = p.a / (p.a + p.b);
  return integrate_checked(lower, 0.0, split, "Beta posterior") +
         integrate_checked(upper, 0.0, 1.0 - split, "Beta posterior");
}

// Substitutes lambda = scale * u so that the mass concentrates near u = 1.
// The integrand is assembled in log space; the moment functions are powers of
// lambda for both Gamma-mapped families.
double gamma_moment(GammaParams p, FamilyKind family, MomentTag tag) {
  const double scale = p.shape / p.rate;
  const double log_norm = p.shape * std::log(p.rate) - std::lgamma(p.shape);
  double power = tag == MomentTag::PsiPrime ? 1.0 : 2.0;
  if (family == FamilyKind::Poisson && tag == MomentTag::PsiSecond) power = 1.0;
  if (family == FamilyKind::ExponentialRate) power = -power;
  auto f = [&](double u) {
    if (u <= 0.0 || !std::isfinite(u)) return 0.0;
    const double lambda = scale * u;
    const double log_lambda = std::log(lambda);
    return std::exp(log_norm + (p.shape - 1.0 + power) * log_lambda - p.rate * lambda) * scale;
  };
  return integrate_checked(f, 0.0, 1.0, "Gamma posterior (0, mean)") +
         integrate_checked(f, 1.0, std::numeric_limits<double>::infinity(),
                           "Gamma posterior (mean, inf)");
}

double normal_moment(NormalParams p, FamilyKind family, MomentTag tag) {
  const double sd = std::sqrt(p.variance);
  auto f = [&](double z) {
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return moment_integrand(family, tag, p.mean + sd * z) * density;
  };
  double err = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    bq::sinh_sinh<double> integrator;
    value = integrator.integrate(f, kRelTol, &err, &l1);
  } catch (const std::exception& e) {
    throw OracleFailure(std::string("quadrature for Normal posterior failed: ") + e.what());
  }
  check(value, err, l1, "Normal posterior");
  return value;
}

}  // namespace

double oracle_posterior_moment(const PosteriorState& state, MomentTag tag) {
  const FamilyKind family = state.prior().family();
  const ConjugateDistribution dist = conjugate_posterior(state);
  if (const auto* beta = std::get_if<BetaParams>(&dist)) return beta_moment(*beta, family, tag);
  if (const auto* gamma = std::get_if<GammaParams>(&dist)) {
    return gamma_moment(*gamma, family, tag);
  }
  return normal_moment(std::get<NormalParams>(dist), family, tag);
}

}  // namespace twostage
