#include <cmath>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"

namespace wcw::ebox {

namespace {

// eps * coth(beta eps / 2), even in eps with limit 2 / beta at eps = 0.
double eps_coth(double eps, double beta) {
  const double x = 0.5 * beta * eps;
  if (std::abs(x) < 1e-6) return (2.0 / beta) * (1.0 + x * x / 3.0);
  return eps / std::tanh(x);
}

}  // namespace

void validate(const Params& params) {
  require(std::isfinite(params.gamma0) && params.gamma0 >= 0.0, "gamma0 must be finite and non-negative");
  require(std::isfinite(params.eps_c) && params.eps_c > 0.0, "eps_c must be finite and positive");
  require(std::isfinite(params.beta) && params.beta > 0.0, "beta must be finite and positive");
}

double tunneling_rate(double eps, const Params& params) {
  const double scale = params.gamma0 / params.eps_c;
  const double x = params.beta * eps;
  if (x == 0.0) return scale / params.beta;
  if (x > 0.0) return scale * eps * std::exp(-x) / -std::expm1(-x);
  return scale * eps / std::expm1(x);
}

double swap_probability(double eps, double dt, const Params& params) {
  require(dt >= 0.0, "time step must be non-negative");
  const double p = params.gamma0 * dt / params.eps_c * eps_coth(eps, params.beta);
  if (p > 1.0)
    fail(ErrorKind::StepSize, "swap probability " + std::to_string(p) + " exceeds 1 at eps = " +
                                  std::to_string(eps) + "; use a time step below " +
                                  std::to_string(dt / p));
  return p;
}

double excited_fraction(double eps, double beta) { return 1.0 / (1.0 + std::exp(beta * eps)); }

Matrix two_level_relaxation_probs(double omega, double dt, double gamma, double dos, double beta) {
  require(omega > 0.0 && beta > 0.0, "relaxation needs omega > 0 and beta > 0");
  require(dt >= 0.0 && gamma >= 0.0 && dos >= 0.0, "relaxation parameters must be non-negative");
  const double rate = 2.0 * dos * gamma / std::tanh(0.5 * beta * omega);
  const double decay = std::isfinite(rate) ? -std::expm1(-rate * dt) : 1.0;  // 1 - exp(-k dt)
  const double p0th = 1.0 / (std::exp(-beta * omega) + 1.0);
  Matrix m(2);
  m(0, 1) = p0th * decay;
  m(1, 0) = (1.0 - p0th) * decay;
  m(0, 0) = 1.0 - m(1, 0);
  m(1, 1) = 1.0 - m(0, 1);
  return m;
}

}  // namespace wcw::ebox
