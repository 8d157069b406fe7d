#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"
#include "wcw/rng.hpp"
#include "wcw/singleshot.hpp"

namespace wcw::ebox {

namespace {

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log(1 + exp(-beta eps)): partition function of levels {0, eps}.
double log_z2(double eps, double beta) { return log_add_exp(0.0, -beta * eps); }

DiagonalState gibbs2(double eps, double beta) {
  const double g1 = excited_fraction(eps, beta);
  return DiagonalState{{1.0 - g1, g1}};
}

}  // namespace

std::size_t steps_for(const Ramp& ramp, double max_swap, const Params& params, std::size_t min_steps) {
  require(max_swap > 0.0 && max_swap <= 1.0, "max_swap must lie in (0, 1]");
  validate(params);
  // p_sw / dt = Gamma(eps) + Gamma(-eps)
  auto swap_rate = [&](double e) { return tunneling_rate(e, params) + tunneling_rate(-e, params); };
  const std::size_t segs = ramp.knots().size() - 1;
  double rate = 0.0;
  for (const auto& k : ramp.knots()) rate = std::max(rate, swap_rate(k.eps));
  std::size_t n = std::max(min_steps, segs);
  if (rate > 0.0 && ramp.tau() > 0.0)
    n = std::max(n, static_cast<std::size_t>(std::ceil(ramp.tau() * rate / max_swap)) + 2 * segs);
  for (;;) {
    const RampGrid g = make_grid(ramp, n);
    bool ok = true;
    for (std::size_t k = 0; k < g.t.size() && ok; ++k) ok = g.node_weight(k) * swap_rate(g.eps[k]) <= max_swap;
    if (ok) return n;
    n += n / 8 + 1;
  }
}

Quantile guaranteed_work(std::span<const double> samples, double eps) {
  require(!samples.empty(), "guaranteed work of an empty sample");
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0,1)");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const auto allowed = static_cast<std::size_t>(std::floor(eps * static_cast<double>(n) * (1.0 + 1e-12)));
  const std::size_t j = n - 1 - std::min(allowed, n - 1);
  Quantile q;
  q.value = s[j];
  q.retained = static_cast<double>(std::upper_bound(s.begin(), s.end(), q.value) - s.begin()) /
               static_cast<double>(n);
  const auto spread = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) * eps * (1.0 - eps))));
  const std::size_t lo = j >= spread ? j - spread : 0;
  const std::size_t hi = std::min(n - 1, j + spread);
  q.stderr = 0.5 * (s[hi] - s[lo]);
  return q;
}

double log_z_ratio(const DiagonalState& rho0, double eps0, double eps_f, double beta) {
  validate(rho0, 2);
  double log_z_in = -std::numeric_limits<double>::infinity();
  double in_mass = 0.0;
  if (rho0[0] > 0.0) {
    log_z_in = 0.0;
    in_mass += rho0[0];
  }
  if (rho0[1] > 0.0) {
    log_z_in = log_add_exp(log_z_in, -beta * eps0);
    in_mass += rho0[1];
  }
  return log_z2(eps_f, beta) - (log_z_in - std::log(in_mass));
}

BoundPoint bound_point(const EmpiricalWorkDistribution& dist, double eps, double beta, double lzr) {
  require(eps > 0.0 && eps < 1.0, "bound point needs eps in (0,1)");
  const Quantile q = guaranteed_work(dist.samples, eps);
  BoundPoint b;
  b.eps = eps;
  b.w_eps = q.value;
  b.retained = q.retained;
  b.mean = dist.mean();
  b.d_infinity = beta * q.value - std::log(q.retained) + lzr;
  const double lowest = *std::min_element(dist.samples.begin(), dist.samples.end());
  b.applicable = lowest >= 0.0 && b.mean >= 0.0;
  if (b.applicable) b.bound = markov_d_infinity_bound(b.mean, eps, beta, lzr);
  return b;
}

std::vector<SweepPoint> ebox_sweep(const SweepOptions& opts, const Params& params) {
  validate(params);
  require(!opts.taus.empty() && !opts.eps_list.empty(), "sweep needs durations and eps values");
  for (double e : opts.eps_list) require(e >= 0.0 && e < 1.0, "sweep eps must lie in [0,1)");
  std::vector<SweepPoint> out;
  const DiagonalState ground{{1.0, 0.0}};
  for (std::size_t i = 0; i < opts.taus.size(); ++i) {
    const double tau = opts.taus[i];
    const Ramp ramp = szilard_engine_ramp(opts.eps_max, tau);
    McOptions mc;
    mc.n_traj = opts.n_traj;
    mc.n_steps = steps_for(ramp, opts.max_swap, params, 1000);
    mc.seed = mix64(opts.seed ^ mix64(i + 1));
    mc.threads = opts.threads;
    const auto dist = monte_carlo_work(ramp, ground, mc, params);
    for (double e : opts.eps_list) {
      const Quantile q = guaranteed_work(dist.samples, e);
      out.push_back({tau, params.eps_c / (params.gamma0 * tau), e, -q.value, q.stderr});
    }
  }
  return out;
}

CrooksReport ebox_crooks_check(const Ramp& ramp, const CrooksOptions& opts, const Params& params) {
  validate(params);
  require(opts.bins >= 1, "crooks check needs at least one bin");
  const double beta = params.beta;
  McOptions mc{opts.n_traj, opts.n_steps, opts.seed, opts.threads};
  const auto fwd = monte_carlo_work(ramp, gibbs2(ramp.eps0(), beta), mc, params);
  mc.seed = mix64(opts.seed ^ 0x5bd1e995ULL);
  const auto rev = monte_carlo_work(ramp.reversed(), gibbs2(ramp.eps_f(), beta), mc, params);
  const double log_ratio = log_z2(ramp.eps_f(), beta) - log_z2(ramp.eps0(), beta);

  // Reverse samples enter as w = -W' so both sides share one half-open binning.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double w : fwd.samples) lo = std::min(lo, w), hi = std::max(hi, w);
  for (double w : rev.samples) lo = std::min(lo, -w), hi = std::max(hi, -w);
  std::size_t nb = opts.bins;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
    nb = 1;
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(nb);
  // Works live on a lattice of splitting increments that can sit exactly on a
  // bin edge; the tolerance keeps w and -W' of equal value in the same bin.
  auto bin_of = [&](double w) {
    return std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, std::floor((w - lo) / width + 1e-9))));
  };
  std::vector<std::size_t> nf(nb, 0), nr(nb, 0);
  std::vector<double> sx(nb, 0.0), sxx(nb, 0.0);
  for (double w : fwd.samples) ++nf[bin_of(w)];
  for (double w : rev.samples) {
    const std::size_t b = bin_of(-w);
    const double x = std::exp(-beta * w);
    ++nr[b];
    sx[b] += x;
    sxx[b] += x * x;
  }

  CrooksReport rep;
  const double Nf = static_cast<double>(fwd.n());
  const double Nr = static_cast<double>(rev.n());
  for (std::size_t b = 0; b < nb; ++b) {
    CrooksBin cb;
    cb.w_lo = lo + static_cast<double>(b) * width;
    cb.w_hi = b + 1 == nb ? hi : cb.w_lo + width;
    cb.n_fwd = nf[b];
    cb.n_rev = nr[b];
    if (nf[b] < opts.min_count || nr[b] < opts.min_count) {
      if (nf[b] + nr[b] > 0) rep.skipped.push_back(cb);
      continue;
    }
    const double pf = static_cast<double>(nf[b]) / Nf;
    const double q = sx[b] / Nr;
    const double var_x = std::max(0.0, sxx[b] / Nr - q * q);
    cb.residual = std::log(pf) - std::log(q) - log_ratio;
    cb.stderr = std::sqrt((1.0 - pf) / static_cast<double>(nf[b]) + var_x / (Nr * q * q));
    rep.max_residual = std::max(rep.max_residual, std::abs(cb.residual));
    if (cb.stderr > 0.0) rep.max_z = std::max(rep.max_z, std::abs(cb.residual) / cb.stderr);
    else if (cb.residual != 0.0) rep.max_z = std::numeric_limits<double>::infinity();
    rep.bins.push_back(cb);
  }
  return rep;
}

}  // namespace wcw::ebox
