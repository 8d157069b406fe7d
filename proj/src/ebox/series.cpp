#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"

namespace wcw::ebox {

namespace {

constexpr std::size_t kActionIntervals = 4096;

// Cumulative escape integrals A_sigma(t) = int_0^t Gamma_sigma(s) ds, with
// Gamma_0 = Gamma(+eps) and Gamma_1 = Gamma(-eps). Tabulated with Simpson's
// rule on a knot-aligned grid and read back by cubic Hermite interpolation.
class ActionTable {
 public:
  ActionTable(const Ramp& ramp, const Params& params) : params_(params) {
    const double tau = ramp.tau();
    const auto& knots = ramp.knots();
    t_.push_back(0.0);
    eps_.push_back(ramp.eps0());
    push_rates(ramp.eps0());
    a_[0].push_back(0.0);
    a_[1].push_back(0.0);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const Knot& ka = knots[i];
      const Knot& kb = knots[i + 1];
      const double d = kb.t - ka.t;
      if (d == 0.0) continue;
      const auto m = std::max<std::size_t>(8, static_cast<std::size_t>(
                                                  std::ceil(kActionIntervals * d / tau)));
      // Join node carrying this segment's left-limit rates.
      t_.push_back(ka.t);
      eps_.push_back(ka.eps);
      push_rates(ka.eps);
      a_[0].push_back(a_[0].back());
      a_[1].push_back(a_[1].back());
      for (std::size_t j = 1; j <= m; ++j) {
        const double f0 = static_cast<double>(j - 1) / static_cast<double>(m);
        const double f1 = static_cast<double>(j) / static_cast<double>(m);
        const double e0 = ka.eps + f0 * (kb.eps - ka.eps);
        const double e1 = j == m ? kb.eps : ka.eps + f1 * (kb.eps - ka.eps);
        const double em = 0.5 * (e0 + e1);
        const double h = d / static_cast<double>(m);
        for (int s = 0; s < 2; ++s) {
          const double sign = s == 0 ? 1.0 : -1.0;
          const double integral = h / 6.0 *
                                  (tunneling_rate(sign * e0, params) + 4.0 * tunneling_rate(sign * em, params) +
                                   tunneling_rate(sign * e1, params));
          a_[s].push_back(a_[s].back() + integral);
        }
        t_.push_back(j == m ? kb.t : ka.t + f1 * d);
        eps_.push_back(e1);
        push_rates(e1);
      }
    }
  }

  double total(int sigma) const { return a_[sigma].back(); }

  struct Point {
    double eps;
    std::array<double, 2> rate;
    std::array<double, 2> action;
  };

  Point at(double t) const {
    std::size_t j;
    if (t >= t_.back()) {
      j = t_.size() - 2;
      while (j > 0 && t_[j + 1] == t_[j]) --j;
    } else {
      j = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    }
    const double h = t_[j + 1] - t_[j];
    const double s = (t - t_[j]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    Point p;
    p.eps = eps_[j] + s * (eps_[j + 1] - eps_[j]);
    p.rate = {tunneling_rate(p.eps, params_), tunneling_rate(-p.eps, params_)};
    for (int k = 0; k < 2; ++k)
      p.action[k] = h00 * a_[k][j] + h10 * h * r_[k][j] + h01 * a_[k][j + 1] + h11 * h * r_[k][j + 1];
    return p;
  }

 private:
  void push_rates(double e) {
    r_[0].push_back(tunneling_rate(e, params_));
    r_[1].push_back(tunneling_rate(-e, params_));
  }

  Params params_;
  std::vector<double> t_, eps_;
  std::array<std::vector<double>, 2> a_, r_;
};

struct Cell {
  double a, b, ea, eb;
};

std::vector<Cell> time_cells(const Ramp& ramp, std::size_t n) {
  std::size_t quenches = 0;
  std::size_t timed = 0;
  const auto& knots = ramp.knots();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) (knots[i + 1].t == knots[i].t ? quenches : timed)++;
  std::vector<Cell> cells;
  if (timed == 0) return cells;
  const RampGrid g = make_grid(ramp, std::max(n, timed) + quenches);
  for (std::size_t k = 0; k < g.steps(); ++k)
    if (g.t[k + 1] > g.t[k]) cells.push_back({g.t[k], g.t[k + 1], g.eps[k], g.eps[k + 1]});
  return cells;
}

class Binner {
 public:
  Binner(const WorkGrid& grid, AnalyticWorkDistribution& out)
      : lo_(grid.lo), hi_(grid.hi), width_((grid.hi - grid.lo) / static_cast<double>(grid.bins)), out_(out) {}

  // Cloud-in-cell deposit at a point.
  void point(double w, double m) {
    if (!(w >= lo_ && w <= hi_)) {
      out_.outside_mass += m;
      return;
    }
    const std::size_t n = out_.mass.size();
    const double x = (w - lo_) / width_ - 0.5;
    if (x <= 0.0) {
      out_.mass.front() += m;
      return;
    }
    const auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= n) {
      out_.mass.back() += m;
      return;
    }
    const double f = x - static_cast<double>(i);
    out_.mass[i] += (1.0 - f) * m;
    out_.mass[i + 1] += f * m;
  }

  // Mass spread uniformly over [w0, w1].
  void interval(double w0, double w1, double m) {
    if (w1 < w0) std::swap(w0, w1);
    if (w1 - w0 <= 1e-12 * std::max(1.0, std::abs(w0))) {
      point(0.5 * (w0 + w1), m);
      return;
    }
    const double density = m / (w1 - w0);
    double inside = 0.0;
    const double a = std::max(w0, lo_);
    const double b = std::min(w1, hi_);
    if (b > a) {
      const std::size_t n = out_.mass.size();
      auto i = static_cast<std::size_t>(std::floor((a - lo_) / width_));
      for (i = std::min(i, n - 1); i < n; ++i) {
        const double el = lo_ + static_cast<double>(i) * width_;
        const double er = i + 1 == n ? hi_ : el + width_;
        const double overlap = std::min(b, er) - std::max(a, el);
        if (overlap > 0.0) {
          out_.mass[i] += density * overlap;
          inside += density * overlap;
        }
        if (er >= b) break;
      }
    }
    out_.outside_mass += m - inside;
  }

 private:
  double lo_, hi_, width_;
  AnalyticWorkDistribution& out_;
};

}  // namespace

std::vector<double> WorkGrid::edges() const {
  require(hi > lo && bins >= 1, "work grid needs hi > lo and at least one bin");
  std::vector<double> e(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + static_cast<double>(i) * width;
  e.back() = hi;
  return e;
}

double AnalyticWorkDistribution::total_captured() const {
  double s = atoms.total_mass() + outside_mass;
  for (double m : mass) s += m;
  return s;
}

std::vector<double> AnalyticWorkDistribution::density() const {
  std::vector<double> d(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) d[i] = mass[i] / (edges[i + 1] - edges[i]);
  return d;
}

double survival_probability(const Ramp& ramp, int sigma, const Params& params) {
  validate(params);
  require(sigma == 0 || sigma == 1, "level must be 0 or 1");
  if (ramp.tau() == 0.0) return 1.0;
  return std::exp(-ActionTable(ramp, params).total(sigma));
}

AnalyticWorkDistribution analytic_work_distribution(const Ramp& ramp, const DiagonalState& rho0,
                                                    const SeriesOptions& opts, const Params& params) {
  validate(params);
  validate(rho0, 2);
  require(!opts.nodes.empty(), "quadrature node table is empty");
  AnalyticWorkDistribution out;
  out.edges = opts.grid.edges();
  out.mass.assign(opts.grid.bins, 0.0);
  out.j_mass.assign(opts.j_max + 1, 0.0);

  const double e0 = ramp.eps0();
  const double ef = ramp.eps_f();
  const double p[2] = {rho0[0], rho0[1]};
  const bool timed = ramp.tau() > 0.0;
  const std::optional<ActionTable> table =
      timed ? std::optional<ActionTable>(std::in_place, ramp, params) : std::nullopt;
  const double total[2] = {timed ? table->total(0) : 0.0, timed ? table->total(1) : 0.0};

  std::vector<WorkAtom> atoms;
  if (p[0] > 0.0) atoms.push_back({0.0, p[0] * std::exp(-total[0])});
  if (p[1] > 0.0) atoms.push_back({ef - e0, p[1] * std::exp(-total[1])});
  out.atoms = make_work_distribution(atoms, 0.0);
  out.j_mass[0] = out.atoms.total_mass();

  Binner binner(opts.grid, out);
  auto work_of = [&](int s0, std::span<const double> eps_at) {
    double w = -s0 * e0;
    const std::size_t J = eps_at.size();
    for (std::size_t j = 0; j < J; ++j) w += ((s0 + j + 1) % 2 == 0 ? 1.0 : -1.0) * eps_at[j];
    if ((s0 + J) % 2 == 1) w += ef;
    return w;
  };

  for (std::size_t J = 1; J <= opts.j_max && timed; ++J) {
    const std::size_t n = opts.nodes[std::min(J - 1, opts.nodes.size() - 1)];
    const auto cells = time_cells(ramp, n);
    std::vector<std::size_t> idx(J, 0);
    std::vector<ActionTable::Point> pts(J);
    std::vector<double> eps_at(J);
    double j_total = 0.0;

    // Visit every non-decreasing index tuple over the cells.
    auto leaf = [&] {
      double weight = 1.0;
      for (std::size_t r = 0; r < J;) {
        std::size_t g = 1;
        while (r + g < J && idx[r + g] == idx[r]) ++g;
        const Cell& c = cells[idx[r]];
        const double h = c.b - c.a;
        for (std::size_t q = 1; q <= g; ++q) {
          weight *= h / static_cast<double>(q);
          const double t = c.a + h * static_cast<double>(q) / static_cast<double>(g + 1);
          pts[r + q - 1] = table->at(t);
          eps_at[r + q - 1] = pts[r + q - 1].eps;
        }
        r += g;
      }
      for (int s0 = 0; s0 < 2; ++s0) {
        if (p[s0] <= 0.0) continue;
        int s = s0;
        double f = p[s0];
        double prev = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          f *= pts[j].rate[s] * std::exp(-(pts[j].action[s] - prev));
          s ^= 1;
          prev = pts[j].action[s];
        }
        f *= std::exp(-(total[s] - prev));
        const double m = weight * f;
        if (!(m > 0.0)) continue;
        j_total += m;
        if (J == 1) {
          const Cell& c = cells[idx[0]];
          const double wa = work_of(s0, std::span<const double>(&c.ea, 1));
          const double wb = work_of(s0, std::span<const double>(&c.eb, 1));
          binner.interval(wa, wb, m);
        } else {
          binner.point(work_of(s0, eps_at), m);
        }
      }
    };
    auto visit = [&](auto&& self, std::size_t pos, std::size_t from) -> void {
      if (pos == J) {
        leaf();
        return;
      }
      for (std::size_t i = from; i < cells.size(); ++i) {
        idx[pos] = i;
        self(self, pos + 1, i);
      }
    };
    visit(visit, 0, 0);
    out.j_mass[J] = j_total;
  }

  double captured = 0.0;
  for (double m : out.j_mass) captured += m;
  out.remainder = 1.0 - captured;
  if (std::abs(out.remainder) > opts.tolerance)
    fail(ErrorKind::Convergence,
         "jump series at j_max = " + std::to_string(opts.j_max) + " leaves remainder " +
             std::to_string(out.remainder) + " above tolerance " + std::to_string(opts.tolerance) +
             "; increase j_max or use the characteristic-function route");
  return out;
}

}  // namespace wcw::ebox
