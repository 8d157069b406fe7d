#include <algorithm>
#include <cmath>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"

namespace wcw::ebox {

namespace {

constexpr double kOccupationSlack = 1e-14;

double check_occupation(double p1, double t) {
  if (!(p1 >= -kOccupationSlack && p1 <= 1.0 + kOccupationSlack))
    fail(ErrorKind::StepSize, "occupation left [0,1] at t = " + std::to_string(t) +
                                  "; increase n_steps");
  return std::clamp(p1, 0.0, 1.0);
}

}  // namespace

MasterSolution integrate_master(const Ramp& ramp, const DiagonalState& p0, std::size_t n_steps,
                                const Params& params) {
  validate(params);
  validate(p0, 2);
  require(n_steps >= 1, "n_steps must be positive");
  const RampGrid g = make_grid(ramp, n_steps);

  MasterSolution out;
  out.t = g.t;
  out.p.reserve(g.t.size());
  double p1 = p0[1];
  out.p.push_back(DiagonalState{{1.0 - p1, p1}});
  for (std::size_t k = 0; k < g.steps(); ++k) {
    const double dt = g.t[k + 1] - g.t[k];
    const double e0 = g.eps[k];
    const double de = g.eps[k + 1] - e0;
    if (dt == 0.0) {
      out.mean_work += p1 * de;
    } else {
      const double slope = de / dt;
      auto f = [&](double s, double y) {
        const double e = e0 + slope * s;
        return tunneling_rate(e, params) * (1.0 - y) - tunneling_rate(-e, params) * y;
      };
      const double k1 = f(0.0, p1);
      const double k2 = f(0.5 * dt, p1 + 0.5 * dt * k1);
      const double k3 = f(0.5 * dt, p1 + 0.5 * dt * k2);
      const double k4 = f(dt, p1 + dt * k3);
      const double y1 = p1 + 0.5 * dt * k1;
      const double y2 = p1 + 0.5 * dt * k2;
      const double y3 = p1 + dt * k3;
      out.mean_work += slope * dt * (p1 + 2.0 * y1 + 2.0 * y2 + y3) / 6.0;
      p1 = check_occupation(p1 + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, g.t[k + 1]);
    }
    out.p.push_back(DiagonalState{{1.0 - p1, p1}});
  }
  return out;
}

std::vector<DiagonalState> swap_chain_occupations(const Ramp& ramp, const DiagonalState& p0,
                                                  std::size_t n_steps, const Params& params) {
  validate(params);
  validate(p0, 2);
  const RampGrid g = make_grid(ramp, n_steps);
  std::vector<DiagonalState> out;
  out.reserve(g.t.size());
  double p1 = p0[1];
  for (std::size_t k = 0; k < g.t.size(); ++k) {
    const double ps = swap_probability(g.eps[k], g.node_weight(k), params);
    p1 = (1.0 - ps) * p1 + ps * excited_fraction(g.eps[k], params.beta);
    out.push_back(DiagonalState{{1.0 - p1, p1}});
  }
  return out;
}

}  // namespace wcw::ebox
