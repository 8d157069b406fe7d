#include "wcw/singleshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wcw/error.hpp"

namespace wcw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNormTol = 1e-9;

void require_normalized(std::span<const double> p, const char* name) {
  double s = 0.0;
  for (double x : p) {
    require(x >= 0.0 && std::isfinite(x), std::string(name) + " has a negative or non-finite entry");
    s += x;
  }
  require(std::abs(s - 1.0) <= kNormTol, std::string(name) + " is not normalized");
}

double log_sum_exp_neg(std::span<const double> energies, std::span<const std::size_t> idx, double beta) {
  double lo = kInf;
  for (std::size_t i : idx) lo = std::min(lo, energies[i]);
  if (!std::isfinite(lo)) return -kInf;
  double s = 0.0;
  for (std::size_t i : idx) s += std::exp(-beta * (energies[i] - lo));
  return std::log(s) - beta * lo;
}

struct TildeRun {
  TildeScenario scenario;
  WorkDistribution fwd;
  WorkDistribution rev;
  double log_zf = 0.0;
};

TildeRun run_tilde(const DiagonalState& rho0, const Protocol& protocol, const LevelPartition& partition,
                   double bin_tolerance, const EnumerationOptions& opts) {
  TildeRun run;
  run.scenario = build_tilde_scenario(rho0, protocol, partition, bin_tolerance, opts);
  const auto& sc = run.scenario;
  run.fwd = work_distribution(sc.tilde_protocol, sc.gamma_tilde, bin_tolerance, opts);
  const auto final_gibbs = make_thermal_state(protocol.final_landscape(), protocol.beta);
  run.log_zf = final_gibbs.log_z;
  run.rev = work_distribution(reverse_protocol(sc.tilde_protocol), final_gibbs.state, bin_tolerance, opts);
  return run;
}

double out_probability(const DiagonalState& rho0, const LevelPartition& partition) {
  double s = 0.0;
  for (std::size_t i : partition.out_levels()) s += rho0[i];
  return s;
}

void fill_common(EqualityReport& r, const TildeRun& run, const DiagonalState& rho0,
                 const LevelPartition& partition, double beta) {
  r.beta = beta;
  r.optimum_term = run.log_zf - run.scenario.log_z_tilde;
  r.mild_assumption_ok = run.scenario.mild_assumption_ok;
  r.mean_work_tilde = run.fwd.mean();
  r.nonnegative_work_support =
      std::all_of(run.fwd.atoms.begin(), run.fwd.atoms.end(), [](const WorkAtom& a) { return a.w >= 0.0; });
  r.tail_bound = out_probability(rho0, partition) +
                 variation_distance(rho0.probs, run.scenario.gamma_tilde.probs) + r.eps;
}

}  // namespace

double d_infinity(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "D_inf needs distributions of equal length");
  require_normalized(p, "P");
  require_normalized(q, "Q");
  double out = -kInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    out = std::max(out, std::log(p[i]) - std::log(q[i]));
  }
  return out;
}

double d_infinity_work(const WorkDistribution& fwd, const WorkDistribution& rev) {
  require(std::abs(fwd.total_mass() - 1.0) <= kNormTol, "forward work distribution is not normalized");
  require(std::abs(rev.total_mass() - 1.0) <= kNormTol, "reverse work distribution is not normalized");
  WorkDistribution lookup = rev;
  lookup.bin_tolerance = std::max(fwd.bin_tolerance, rev.bin_tolerance);
  double out = -kInf;
  for (const auto& a : fwd.atoms) {
    const double q = lookup.probability_at(-a.w);
    if (q <= 0.0) return kInf;
    out = std::max(out, std::log(a.p) - std::log(q));
  }
  return out;
}

double d_zero(const DiagonalState& rho, const DiagonalState& sigma) {
  require(rho.size() == sigma.size(), "D0 needs states of equal dimension");
  double mass = 0.0;
  for (std::size_t i : rho.support()) {
    require(sigma[i] > 0.0, "supp(rho) is not contained in supp(sigma) at level " + std::to_string(i));
    mass += sigma[i];
  }
  // Summation can overshoot a full support by an ulp.
  return -std::log(std::min(mass, 1.0));
}

double max_entropy(const DiagonalState& rho) {
  const auto n = rho.support().size();
  require(n > 0, "max entropy of a state with empty support");
  return std::log(static_cast<double>(n));
}

double smooth_d_zero(const DiagonalState& rho, const DiagonalState& sigma, double eps,
                     SmoothingMethod method) {
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0,1)");
  require(rho.size() == sigma.size(), "D0 needs states of equal dimension");
  const auto supp = rho.support();
  for (std::size_t i : supp)
    require(sigma[i] > 0.0, "supp(rho) is not contained in supp(sigma) at level " + std::to_string(i));
  const double budget = eps * (1.0 + 1e-12);
  double total_sigma = 0.0;
  for (std::size_t i : supp) total_sigma += sigma[i];

  // Maximize the sigma-mass dropped (equivalently minimize the kept mass).
  double best_drop = 0.0;
  if (method == SmoothingMethod::Greedy) {
    std::vector<std::size_t> order = supp;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sigma[a] * rho[b] > sigma[b] * rho[a];
    });
    double dropped_rho = 0.0;
    std::size_t kept = supp.size();
    for (std::size_t i : order) {
      if (kept == 1) break;
      if (dropped_rho + rho[i] > budget) continue;
      dropped_rho += rho[i];
      best_drop += sigma[i];
      --kept;
    }
  } else {
    require(supp.size() <= 24, "exact smoothing is limited to 24 support levels; use the greedy method");
    const std::size_t m = supp.size();
    const std::uint64_t full = (std::uint64_t{1} << m) - 1;
    for (std::uint64_t mask = 0; mask < full; ++mask) {  // mask == full would drop everything
      double dropped_rho = 0.0;
      double dropped_sigma = 0.0;
      for (std::size_t b = 0; b < m; ++b)
        if (mask >> b & 1U) {
          dropped_rho += rho[supp[b]];
          dropped_sigma += sigma[supp[b]];
        }
      if (dropped_rho <= budget) best_drop = std::max(best_drop, dropped_sigma);
    }
  }
  return -std::log(std::min(total_sigma - best_drop, 1.0));
}

TildeScenario build_tilde_scenario(const DiagonalState& rho0, const Protocol& protocol,
                                   const LevelPartition& partition, double bin_tolerance,
                                   const EnumerationOptions& opts) {
  validate(protocol);
  const std::size_t d = protocol.dim();
  validate(rho0, d);
  validate(partition, d);
  for (std::size_t i = 0; i < d; ++i)
    require(!std::isinf(protocol.initial[i]), "initial landscape must be finite");
  const auto in = partition.in_levels();
  const auto out = partition.out_levels();
  double in_mass = 0.0;
  for (std::size_t i : in) {
    require(rho0[i] > 0.0, "IN level " + std::to_string(i) +
                               " has zero occupation; place zero-probability levels in OUT");
    in_mass += rho0[i];
  }
  const double beta = protocol.beta;

  TildeScenario sc;
  sc.log_z_tilde = log_sum_exp_neg(protocol.initial.energies, in, beta) - std::log(in_mass);
  sc.z_tilde = std::exp(sc.log_z_tilde);
  sc.lifted = protocol.initial;
  sc.gamma_tilde.probs.assign(d, 0.0);
  for (std::size_t i : in) sc.gamma_tilde.probs[i] = std::exp(-beta * protocol.initial[i] - sc.log_z_tilde);
  for (std::size_t i : out) {
    sc.gamma_tilde.probs[i] = rho0[i];
    const double e = rho0[i] > 0.0 ? -(std::log(rho0[i]) + sc.log_z_tilde) / beta : kInf;
    sc.lifted.energies[i] = e;
    sc.lifted_energies.push_back(e);
  }

  sc.tilde_protocol.beta = beta;
  sc.tilde_protocol.initial = sc.lifted;
  sc.tilde_protocol.steps.reserve(protocol.steps.size() + 1);
  sc.tilde_protocol.steps.emplace_back(spectral_change(protocol.initial));
  sc.tilde_protocol.steps.insert(sc.tilde_protocol.steps.end(), protocol.steps.begin(), protocol.steps.end());

  const auto e = enumerate_trajectories(sc.tilde_protocol, sc.gamma_tilde, opts);
  sc.w_tilde0 = worst_case_work(e.trajectories);
  sc.w_tilde0_in = worst_case_work(restrict_to_in(e.trajectories, partition));
  sc.mild_assumption_ok = sc.w_tilde0 <= sc.w_tilde0_in + bin_tolerance;
  return sc;
}

EqualityReport main_equality_report(const DiagonalState& rho0, const Protocol& protocol,
                                    const LevelPartition& partition, double bin_tolerance,
                                    const EnumerationOptions& opts) {
  const auto run = run_tilde(rho0, protocol, partition, bin_tolerance, opts);
  const auto actual = enumerate_trajectories(protocol, rho0, opts);

  EqualityReport r;
  r.w0_in = worst_case_work(restrict_to_in(actual.trajectories, partition));
  fill_common(r, run, rho0, partition, protocol.beta);
  r.d_infinity_term = d_infinity_work(run.fwd, run.rev);
  r.d_infinity_finite = std::isfinite(r.d_infinity_term);
  r.residual = std::abs(protocol.beta * r.w0_in - r.d_infinity_term + r.optimum_term);
  r.out_of_set_probability = out_probability(rho0, partition);
  return r;
}

EqualityReport work_tail_equality_report(const DiagonalState& rho0, const Protocol& protocol,
                                         const LevelPartition& partition, double eps,
                                         double bin_tolerance, const EnumerationOptions& opts) {
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0,1)");
  const auto run = run_tilde(rho0, protocol, partition, bin_tolerance, opts);
  const auto tail = epsilon_guaranteed_work(run.fwd, eps);

  EqualityReport r;
  r.eps = eps;
  r.w0_in = tail.w_eps;
  fill_common(r, run, rho0, partition, protocol.beta);
  r.eps_effective = 1.0 - tail.retained_mass;
  r.log1meps_term = std::log(tail.retained_mass);
  r.d_infinity_term = d_infinity_work(tail.cut, run.rev);
  r.d_infinity_finite = std::isfinite(r.d_infinity_term);
  r.residual = std::abs(protocol.beta * r.w0_in - r.d_infinity_term - r.log1meps_term + r.optimum_term);

  const auto actual = enumerate_trajectories(protocol, rho0, opts);
  double outside = 0.0;
  for (const auto& t : actual.trajectories)
    if (!partition.in[t.nodes.front()] || t.work > tail.w_eps + bin_tolerance) outside += t.probability;
  r.out_of_set_probability = outside;
  return r;
}

double markov_d_infinity_bound(double mean_work, double eps, double beta, double log_z_ratio) {
  require(eps > 0.0 && eps < 1.0, "Markov bound needs eps in (0,1)");
  require(mean_work >= 0.0, "Markov bound needs a non-negative mean work");
  return beta * mean_work / eps - std::log1p(-eps) + log_z_ratio;
}

MarkovCheck markov_check(const EqualityReport& report) {
  MarkovCheck c;
  c.d_infinity = report.d_infinity_term;
  c.applicable = report.eps > 0.0 && report.nonnegative_work_support && report.mean_work_tilde >= 0.0;
  if (c.applicable)
    c.bound = markov_d_infinity_bound(report.mean_work_tilde, report.eps, report.beta, report.optimum_term);
  return c;
}

}  // namespace wcw
