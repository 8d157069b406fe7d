#include <array>
#include <cmath>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"

namespace wcw::ebox {

namespace {

constexpr std::size_t kMaxSteps = std::size_t{1} << 26;

using Vec2 = std::array<double, 2>;

// Tilted forward generator on a fixed knot-aligned grid:
//   phi' = M(t) phi + xi * d(eps)/dt * diag(0, 1) phi,   Z = phi_0 + phi_1.
double tilted_z(double xi, const Ramp& ramp, const DiagonalState& rho0, std::size_t n, const Params& params) {
  const RampGrid g = make_grid(ramp, n);
  Vec2 phi{rho0[0], rho0[1]};
  for (std::size_t k = 0; k < g.steps(); ++k) {
    const double dt = g.t[k + 1] - g.t[k];
    const double e0 = g.eps[k];
    const double de = g.eps[k + 1] - e0;
    if (dt == 0.0) {
      phi[1] *= std::exp(xi * de);
      continue;
    }
    const double slope = de / dt;
    auto f = [&](double s, const Vec2& y) {
      const double e = e0 + slope * s;
      const double up = tunneling_rate(e, params);
      const double down = tunneling_rate(-e, params);
      return Vec2{-up * y[0] + down * y[1], up * y[0] - down * y[1] + xi * slope * y[1]};
    };
    auto axpy = [](const Vec2& y, double a, const Vec2& k) { return Vec2{y[0] + a * k[0], y[1] + a * k[1]}; };
    const Vec2 k1 = f(0.0, phi);
    const Vec2 k2 = f(0.5 * dt, axpy(phi, 0.5 * dt, k1));
    const Vec2 k3 = f(0.5 * dt, axpy(phi, 0.5 * dt, k2));
    const Vec2 k4 = f(dt, axpy(phi, dt, k3));
    for (int i = 0; i < 2; ++i) phi[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  }
  return phi[0] + phi[1];  // may be non-finite on an unstable grid
}

struct Converged {
  double z;
  std::size_t steps;
};

Converged converge(double xi, const Ramp& ramp, const DiagonalState& rho0, std::size_t n, const Params& params) {
  double coarse = tilted_z(xi, ramp, rho0, n, params);
  for (;;) {
    if (2 * n > kMaxSteps)
      fail(ErrorKind::Numeric, "RK4 step halving did not reach tolerance " + std::to_string(kOdeTolerance) +
                                   " at xi = " + std::to_string(xi) + " with " + std::to_string(n) +
                                   " steps");
    const double fine = tilted_z(xi, ramp, rho0, 2 * n, params);
    const bool ok = std::isfinite(fine) && std::isfinite(coarse) && std::abs(fine - coarse) <= kOdeTolerance * std::max(1.0, std::abs(fine));
    n *= 2;
    if (ok) return {fine, n};
    coarse = fine;
  }
}

std::size_t initial_steps(const Ramp& ramp, std::size_t n_steps) {
  return std::max(n_steps, ramp.knots().size() - 1);
}

}  // namespace

double characteristic_function(double xi, const Ramp& ramp, const DiagonalState& rho0, std::size_t n_steps,
                               const Params& params) {
  validate(params);
  validate(rho0, 2);
  require(std::isfinite(xi), "xi must be finite");
  require(n_steps >= 1, "n_steps must be positive");
  return converge(xi, ramp, rho0, initial_steps(ramp, n_steps), params).z;
}

MeanWork mean_work(const Ramp& ramp, const DiagonalState& rho0, std::size_t n_steps, const Params& params,
                   std::optional<double> lambda_probe) {
  validate(params);
  validate(rho0, 2);
  require(n_steps >= 1, "n_steps must be positive");
  double scale = 0.0;
  for (const auto& k : ramp.knots()) scale = std::max(scale, std::abs(k.eps));
  double h = 0.05 / std::max(scale, 1.0 / params.beta);

  // Fix the grid at the widest probe, then shrink h on that same grid.
  const std::size_t n = std::max(converge(h, ramp, rho0, initial_steps(ramp, n_steps), params).steps,
                                 converge(-h, ramp, rho0, initial_steps(ramp, n_steps), params).steps);
  auto diff = [&](double hh) {
    return (tilted_z(hh, ramp, rho0, n, params) - tilted_z(-hh, ramp, rho0, n, params)) / (2.0 * hh);
  };
  MeanWork out;
  double prev = diff(h);
  for (int it = 0;; ++it) {
    const double next = diff(0.5 * h);
    h *= 0.5;
    if (std::abs(next - prev) <= 1e-6 * std::max(1.0, std::abs(next))) {
      out.mean = next;
      out.h = h;
      break;
    }
    if (it == 40) fail(ErrorKind::Convergence, "finite-difference mean work did not settle");
    prev = next;
  }
  if (lambda_probe) {
    require(*lambda_probe > 0.0 && std::isfinite(*lambda_probe), "lambda_probe must be finite and positive");
    const double z = characteristic_function(*lambda_probe, ramp, rho0, n_steps, params);
    out.upper_bound = std::log(z) / *lambda_probe;
  }
  return out;
}

}  // namespace wcw::ebox
