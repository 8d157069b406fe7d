#pragma once

// One-shot relative entropies, the associated thermal scenario and the
// worst-case work equality (with and without a cut work tail).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wcw/engine.hpp"
#include "wcw/model.hpp"

namespace wcw {

/// sup over supp(P) of log(P_x / Q_x); +inf when supp(P) is not inside supp(Q).
double d_infinity(std::span<const double> p, std::span<const double> q);

/// D_inf between work distributions with Q(w) := rev(-w), supports matched
/// within the bin tolerance. An unmatched forward atom yields +inf.
double d_infinity_work(const WorkDistribution& fwd, const WorkDistribution& rev);

/// -log( sum over supp(rho) of sigma_i )
double d_zero(const DiagonalState& rho, const DiagonalState& sigma);

/// log |supp(rho)|
double max_entropy(const DiagonalState& rho);

enum class SmoothingMethod { Exact, Greedy };

/// D0 maximized over the states obtained by dropping part of supp(rho) with
/// dropped rho-mass <= eps (and renormalizing). Exact search is exhaustive
/// over subsets and limited to 24 support levels.
double smooth_d_zero(const DiagonalState& rho, const DiagonalState& sigma, double eps,
                     SmoothingMethod method = SmoothingMethod::Exact);

struct TildeScenario {
  DiagonalState gamma_tilde;
  double z_tilde = 1.0;
  double log_z_tilde = 0.0;
  EnergyLandscape lifted;          // H~: IN levels at E_i, OUT levels at E~_i
  std::vector<double> lifted_energies;  // E~_i for the OUT levels, in out_levels() order
  Protocol tilde_protocol;         // lowering H~ -> H(lambda_0), then the protocol
  double w_tilde0 = 0.0;           // worst-case work of the ~-scenario
  double w_tilde0_in = 0.0;        // same, restricted to trajectories starting IN
  bool mild_assumption_ok = false;
};

/// OUT levels with zero occupation are lifted to +infinity (removed).
TildeScenario build_tilde_scenario(const DiagonalState& rho0, const Protocol& protocol,
                                   const LevelPartition& partition,
                                   double bin_tolerance = kDefaultBinTolerance,
                                   const EnumerationOptions& opts = {});

struct EqualityReport {
  double w0_in = 0.0;            // worst-case work of the retained trajectories
  double d_infinity_term = 0.0;
  double optimum_term = 0.0;     // log(Zf / Z~)
  double residual = 0.0;
  double eps = 0.0;
  double eps_effective = 0.0;    // tail mass actually cut, <= eps
  double log1meps_term = 0.0;    // log(1 - eps_effective)
  bool mild_assumption_ok = false;
  bool d_infinity_finite = true;
  double tail_bound = 0.0;       // p(OUT) + d(rho0, gamma~) + eps
  double out_of_set_probability = 0.0;  // measured under rho0
  double mean_work_tilde = 0.0;  // mean of the ~-scenario forward distribution
  bool nonnegative_work_support = false;  // every ~-forward atom has w >= 0
  double beta = 1.0;
};

EqualityReport main_equality_report(const DiagonalState& rho0, const Protocol& protocol,
                                    const LevelPartition& partition,
                                    double bin_tolerance = kDefaultBinTolerance,
                                    const EnumerationOptions& opts = {});

EqualityReport work_tail_equality_report(const DiagonalState& rho0, const Protocol& protocol,
                                         const LevelPartition& partition, double eps,
                                         double bin_tolerance = kDefaultBinTolerance,
                                         const EnumerationOptions& opts = {});

/// beta <w> / eps - log(1 - eps) + log(Zf / Z~)
double markov_d_infinity_bound(double mean_work, double eps, double beta, double log_z_ratio);

struct MarkovCheck {
  bool applicable = false;  // false when the work support has negative values
  double bound = 0.0;
  double d_infinity = 0.0;
};

/// Applies the Markov bound to a work-tail report when its hypotheses hold.
MarkovCheck markov_check(const EqualityReport& report);

}  // namespace wcw
