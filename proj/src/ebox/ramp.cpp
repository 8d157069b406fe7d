#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"

namespace wcw::ebox {

Ramp::Ramp(std::vector<Knot> knots) : knots_(std::move(knots)) {
  require(knots_.size() >= 2, "a ramp needs at least two knots");
  require(knots_.front().t == 0.0, "a ramp starts at t = 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    require(std::isfinite(knots_[i].t) && std::isfinite(knots_[i].eps), "ramp knots must be finite");
    if (i > 0) require(knots_[i].t >= knots_[i - 1].t, "ramp knot times must be non-decreasing");
  }
}

Ramp Ramp::constant(double eps, double tau) {
  require(tau >= 0.0, "ramp duration must be non-negative");
  return Ramp({{0.0, eps}, {tau, eps}});
}

Ramp Ramp::linear(double eps0, double eps1, double tau) {
  require(tau >= 0.0, "ramp duration must be non-negative");
  return Ramp({{0.0, eps0}, {tau, eps1}});
}

double Ramp::operator()(double t) const {
  require(t >= 0.0 && t <= tau(), "ramp evaluated outside [0, tau]");
  if (t >= tau()) return eps_f();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double x, const Knot& k) { return x < k.t; });
  const Knot& a = *(it - 1);
  const Knot& b = *it;
  return a.eps + (b.eps - a.eps) * (t - a.t) / (b.t - a.t);
}

Ramp Ramp::reversed() const {
  std::vector<Knot> out;
  out.reserve(knots_.size());
  const double T = tau();
  for (auto it = knots_.rbegin(); it != knots_.rend(); ++it) out.push_back({T - it->t, it->eps});
  out.front().t = 0.0;
  return Ramp(std::move(out));
}

Ramp szilard_ramp(double eps_max, double tau) {
  require(eps_max > 0.0 && tau > 0.0, "szilard ramp needs eps_max > 0 and tau > 0");
  return Ramp({{0.0, 0.0}, {0.5 * tau, eps_max}, {tau, 0.0}});
}

Ramp szilard_engine_ramp(double eps_max, double tau) {
  require(eps_max > 0.0 && tau > 0.0, "szilard ramp needs eps_max > 0 and tau > 0");
  return Ramp({{0.0, 0.0}, {0.0, eps_max}, {tau, 0.0}});
}

double RampGrid::node_weight(std::size_t k) const {
  const std::size_t n = steps();
  double h = 0.0;
  if (k > 0) h += 0.5 * (t[k] - t[k - 1]);
  if (k < n) h += 0.5 * (t[k + 1] - t[k]);
  return h;
}

RampGrid make_grid(const Ramp& ramp, std::size_t n_steps) {
  const auto& knots = ramp.knots();
  const std::size_t segs = knots.size() - 1;
  std::vector<double> dur(segs);
  std::size_t quenches = 0;
  for (std::size_t i = 0; i < segs; ++i) {
    dur[i] = knots[i + 1].t - knots[i].t;
    if (dur[i] == 0.0) ++quenches;
  }
  const std::size_t timed = segs - quenches;
  require(n_steps >= segs, "n_steps must be at least the number of ramp segments (" +
                               std::to_string(segs) + ")");

  // Largest-remainder split of the timed steps, at least one per segment.
  std::vector<std::size_t> alloc(segs, 1);
  if (timed > 0) {
    const std::size_t spare = n_steps - quenches - timed;
    const double tau = ramp.tau();
    std::vector<double> rem(segs, -1.0);
    std::size_t used = 0;
    for (std::size_t i = 0; i < segs; ++i) {
      if (dur[i] == 0.0) continue;
      const double ideal = static_cast<double>(spare) * dur[i] / tau;
      const auto whole = static_cast<std::size_t>(std::floor(ideal));
      alloc[i] += whole;
      used += whole;
      rem[i] = ideal - static_cast<double>(whole);
    }
    std::vector<std::size_t> order(segs);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < spare && k < segs; ++k) {
      if (dur[order[k]] == 0.0) continue;
      ++alloc[order[k]];
      ++used;
    }
  }

  RampGrid g;
  g.t.push_back(knots.front().t);
  g.eps.push_back(knots.front().eps);
  for (std::size_t i = 0; i < segs; ++i) {
    const Knot& a = knots[i];
    const Knot& b = knots[i + 1];
    const std::size_t n = alloc[i];
    for (std::size_t j = 1; j < n; ++j) {
      const double f = static_cast<double>(j) / static_cast<double>(n);
      g.t.push_back(a.t + f * (b.t - a.t));
      g.eps.push_back(a.eps + f * (b.eps - a.eps));
    }
    g.t.push_back(b.t);
    g.eps.push_back(b.eps);
  }
  return g;
}

}  // namespace wcw::ebox
