#pragma once

// Single-electron box: a two-level system (0 or 1 excess electrons) whose
// splitting eps(t) is ramped by a gate while tunnelling to a reservoir
// thermalizes it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wcw/engine.hpp"
#include "wcw/model.hpp"

namespace wcw::ebox {

struct Params {
  double gamma0 = 1.0;  // zero-splitting tunnelling rate scale
  double eps_c = 1.0;   // bath cutoff energy
  double beta = 1.0;
};

void validate(const Params& params);

// ---------------------------------------------------------------------------
// Ramps

struct Knot {
  double t = 0.0;
  double eps = 0.0;

  bool operator==(const Knot&) const = default;
};

/// Piecewise-linear splitting eps(t) on [0, tau]. Two knots at the same time
/// form a sudden quench.
class Ramp {
 public:
  Ramp() = default;
  explicit Ramp(std::vector<Knot> knots);

  static Ramp constant(double eps, double tau);
  static Ramp linear(double eps0, double eps1, double tau);

  double tau() const noexcept { return knots_.back().t; }
  double eps0() const noexcept { return knots_.front().eps; }
  double eps_f() const noexcept { return knots_.back().eps; }
  const std::vector<Knot>& knots() const noexcept { return knots_; }

  /// Right-continuous value; at tau returns eps_f.
  double operator()(double t) const;
  /// eps^rev(t) = eps(tau - t)
  Ramp reversed() const;

  bool operator==(const Ramp&) const = default;

 private:
  std::vector<Knot> knots_{{0.0, 0.0}, {0.0, 0.0}};
};

/// 0 -> eps_max on [0, tau/2], back to 0 on [tau/2, tau].
Ramp szilard_ramp(double eps_max, double tau);

/// Empty level lifted suddenly to eps_max at t = 0, then lowered linearly to 0.
Ramp szilard_engine_ramp(double eps_max, double tau);

/// Time nodes aligned with every knot. Steps are shared between segments in
/// proportion to their duration; a quench gets one step of zero length.
struct RampGrid {
  std::vector<double> t;
  std::vector<double> eps;

  std::size_t steps() const noexcept { return t.size() - 1; }
  /// Thermalization time attached to node k: half of each adjacent step.
  double node_weight(std::size_t k) const;
};

RampGrid make_grid(const Ramp& ramp, std::size_t n_steps);

// ---------------------------------------------------------------------------
// Rates and two-level thermalization

/// Gamma(eps) = gamma0 (eps/eps_c) / (exp(beta eps) - 1): rate of the 0 -> 1
/// transition at splitting eps. The 1 -> 0 rate is Gamma(-eps).
double tunneling_rate(double eps, const Params& params);

/// (gamma0 dt / eps_c) eps coth(beta eps / 2). Throws StepSize above 1.
double swap_probability(double eps, double dt, const Params& params);

/// Probability of the upper level in the Gibbs state at splitting eps.
double excited_fraction(double eps, double beta);

/// Exact two-level relaxation over dt at decay rate 2 dos coth(beta omega/2) gamma.
Matrix two_level_relaxation_probs(double omega, double dt, double gamma, double dos, double beta);

// ---------------------------------------------------------------------------
// Master equation

struct MasterSolution {
  std::vector<double> t;
  std::vector<DiagonalState> p;
  double mean_work = 0.0;  // integral of p_1 d(eps)
};

/// RK4 on the grid of make_grid(ramp, n_steps). Throws StepSize when an
/// occupation goes negative.
MasterSolution integrate_master(const Ramp& ramp, const DiagonalState& p0, std::size_t n_steps,
                                const Params& params);

/// Occupations at every grid node under the partial-swap chain that the
/// Monte Carlo samples.
std::vector<DiagonalState> swap_chain_occupations(const Ramp& ramp, const DiagonalState& p0,
                                                  std::size_t n_steps, const Params& params);

// ---------------------------------------------------------------------------
// Monte Carlo

struct EmpiricalWorkDistribution {
  std::vector<double> samples;  // work cost per trajectory, in trajectory order
  std::size_t final_excited = 0;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return samples.size(); }
  double mean() const;
  double mean_stderr() const;
  double final_excited_fraction() const;
  /// Samples merged into atoms of probability count/n.
  WorkDistribution atoms(double bin_tolerance = kDefaultBinTolerance) const;
  /// Fraction of samples in each [edges[i], edges[i+1]).
  std::vector<double> histogram(std::span<const double> edges) const;
};

struct McOptions {
  std::size_t n_traj = 100'000;
  std::size_t n_steps = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Partial-swap Monte Carlo. At every node the level is replaced by a Gibbs
/// sample with probability p_sw; work sigma * d(eps) accrues between nodes.
/// Output depends only on (ramp, rho0, params, n_traj, n_steps, seed).
EmpiricalWorkDistribution monte_carlo_work(const Ramp& ramp, const DiagonalState& rho0,
                                           const McOptions& opts, const Params& params);

// ---------------------------------------------------------------------------
// Analytic jump series

struct WorkGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t bins = 100;

  std::vector<double> edges() const;
};

struct AnalyticWorkDistribution {
  WorkDistribution atoms;       // J = 0 contributions
  std::vector<double> edges;    // bin edges of the continuous part
  std::vector<double> mass;     // probability per bin
  std::vector<double> j_mass;   // mass of each J = 0..j_max term
  double outside_mass = 0.0;    // continuous mass falling outside the grid
  double remainder = 0.0;       // 1 - everything captured

  double total_captured() const;
  /// Densities mass[i] / width.
  std::vector<double> density() const;
};

struct SeriesOptions {
  std::size_t j_max = 3;
  WorkGrid grid;
  double tolerance = 1e-3;
  /// Quadrature nodes per time dimension for J = 1, 2, ...; the last entry
  /// repeats for higher J.
  std::vector<std::size_t> nodes{200, 80, 40, 24, 16, 12};
};

/// Sums the first j_max + 1 terms of the jump expansion. Throws Convergence
/// when |remainder| exceeds the tolerance.
AnalyticWorkDistribution analytic_work_distribution(const Ramp& ramp, const DiagonalState& rho0,
                                                    const SeriesOptions& opts, const Params& params);

/// exp(-integral of the escape rate of level sigma over [0, tau]).
double survival_probability(const Ramp& ramp, int sigma, const Params& params);

// ---------------------------------------------------------------------------
// Characteristic function

inline constexpr double kOdeTolerance = 1e-9;

/// Z(xi) = <exp(xi w)> from the tilted forward generator, step-halving RK4
/// starting from n_steps.
double characteristic_function(double xi, const Ramp& ramp, const DiagonalState& rho0,
                               std::size_t n_steps, const Params& params);

struct MeanWork {
  double mean = 0.0;
  std::optional<double> upper_bound;  // (1/lambda) log Z(lambda)
  double h = 0.0;                     // finite-difference step used
};

MeanWork mean_work(const Ramp& ramp, const DiagonalState& rho0, std::size_t n_steps, const Params& params,
                   std::optional<double> lambda_probe = std::nullopt);

// ---------------------------------------------------------------------------
// Crooks check and guaranteed-work sweeps

struct CrooksBin {
  double w_lo = 0.0;
  double w_hi = 0.0;
  std::size_t n_fwd = 0;
  std::size_t n_rev = 0;
  double residual = 0.0;  // log P_f(B) - log((Zf/Z0) E_r[exp(-beta W') ; -W' in B])
  double stderr = 0.0;
};

struct CrooksReport {
  std::vector<CrooksBin> bins;     // bins with at least min_count samples on both sides
  std::vector<CrooksBin> skipped;  // bins with too little overlap
  double max_residual = 0.0;
  double max_z = 0.0;  // largest residual / stderr
};

struct CrooksOptions {
  std::size_t n_traj = 100'000;
  std::size_t n_steps = 1000;
  std::uint64_t seed = 0;
  std::size_t bins = 40;
  std::size_t min_count = 100;
  unsigned threads = 0;
};

/// Forward from Gibbs(eps_0), reverse from Gibbs(eps_f).
CrooksReport ebox_crooks_check(const Ramp& ramp, const CrooksOptions& opts, const Params& params);

struct Quantile {
  double value = 0.0;
  double stderr = 0.0;
  double retained = 1.0;  // fraction of samples at or below value
};

/// Smallest sample x with fraction(samples > x) <= eps, with a
/// distribution-free standard error from neighbouring order statistics.
Quantile guaranteed_work(std::span<const double> samples, double eps);

/// log(Z_f / Z~) for a two-level start rho0 with IN = supp(rho0).
double log_z_ratio(const DiagonalState& rho0, double eps0, double eps_f, double beta);

struct BoundPoint {
  double eps = 0.0;
  double w_eps = 0.0;   // cost
  double retained = 1.0;
  double mean = 0.0;
  double d_infinity = 0.0;  // beta w_eps - log(retained) + log(Zf/Z~)
  bool applicable = false;  // Markov bound needs non-negative work support
  double bound = 0.0;
};

BoundPoint bound_point(const EmpiricalWorkDistribution& dist, double eps, double beta, double log_z_ratio);

struct SweepPoint {
  double tau = 0.0;
  double speed = 0.0;  // eps_c / (gamma0 tau)
  double eps = 0.0;
  double w_eps = 0.0;  // extracted
  double stderr = 0.0;
};

struct SweepOptions {
  std::vector<double> taus{250, 500, 1000, 2000, 4000};
  std::vector<double> eps_list{0.01, 0.5};
  double eps_max = 50.0;
  std::size_t n_traj = 20'000;
  double max_swap = 0.2;  // largest p_sw allowed when picking the step count
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Extracted eps-guaranteed work of the Szilard engine (rho0 = |0>) for each
/// duration and eps.
std::vector<SweepPoint> ebox_sweep(const SweepOptions& opts, const Params& params);

/// Steps needed so that p_sw stays at or below max_swap along the ramp.
std::size_t steps_for(const Ramp& ramp, double max_swap, const Params& params, std::size_t min_steps = 1);

}  // namespace wcw::ebox
