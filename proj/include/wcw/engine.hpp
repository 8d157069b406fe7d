#pragma once

// Exact trajectory enumeration and the work statistics built on it.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wcw/model.hpp"

namespace wcw {

inline constexpr double kDefaultBinTolerance = 1e-9;
inline constexpr std::size_t kDefaultTrajectoryCap = 10'000'000;

struct Trajectory {
  std::vector<std::size_t> nodes;  // level occupied at each protocol node (steps + 1)
  double work = 0.0;
  double probability = 0.0;
};

struct EnumerationOptions {
  std::size_t cap = kDefaultTrajectoryCap;
  /// Branches whose running probability drops to or below this value are
  /// discarded; their mass is reported in Enumeration::pruned_mass.
  double prune_below = 0.0;
};

struct Enumeration {
  std::vector<Trajectory> trajectories;
  double pruned_mass = 0.0;
};

struct WorkAtom {
  double w = 0.0;
  double p = 0.0;
};

struct WorkDistribution {
  std::vector<WorkAtom> atoms;  // sorted by w, strictly positive p
  double bin_tolerance = kDefaultBinTolerance;

  double total_mass() const;
  double mean() const;
  bool empty() const noexcept { return atoms.empty(); }

  /// Probability of the atom matching w within bin_tolerance, 0 if none.
  double probability_at(double w) const;
  /// Index of the atom matching w within bin_tolerance.
  std::optional<std::size_t> find(double w) const;
};

/// Every trajectory of positive probability. Throws ResourceLimit once more
/// than opts.cap trajectories are produced.
Enumeration enumerate_trajectories(const Protocol& protocol, const DiagonalState& rho0,
                                   const EnumerationOptions& opts = {});

/// Work and probability of one node sequence (probability 0 when impossible).
Trajectory evaluate_path(const Protocol& protocol, const DiagonalState& rho0,
                         std::span<const std::size_t> nodes);

/// Sorts (w, p) pairs and merges values closer than `bin_tolerance` into one
/// atom at their probability-weighted mean.
WorkDistribution make_work_distribution(std::vector<WorkAtom> samples,
                                        double bin_tolerance = kDefaultBinTolerance);

WorkDistribution work_distribution(std::span<const Trajectory> trajectories,
                                   double bin_tolerance = kDefaultBinTolerance);

WorkDistribution work_distribution(const Protocol& protocol, const DiagonalState& rho0,
                                   double bin_tolerance = kDefaultBinTolerance,
                                   const EnumerationOptions& opts = {});

/// Trajectories whose first node lies in the IN set.
std::vector<Trajectory> restrict_to_in(std::span<const Trajectory> trajectories,
                                       const LevelPartition& partition);

/// max{w : p(w) > prob_floor}.
double worst_case_work(const WorkDistribution& dist, double prob_floor = 0.0);

/// Worst-case work over a restricted set of possible trajectories.
double worst_case_work(std::span<const Trajectory> restricted);

struct EpsilonWork {
  double w_eps = 0.0;
  WorkDistribution cut;       // atoms with w > w_eps removed, renormalized
  double retained_mass = 1.0;  // mass kept before renormalization, >= 1 - eps
};

/// Smallest atom value x with p(w > x) <= eps.
EpsilonWork epsilon_guaranteed_work(const WorkDistribution& dist, double eps);

/// max over supp(fwd) of |log p_fwd(w) - log p_rev(-w) - log(Zf/Z0) - beta w|.
/// Throws SupportMismatch when some forward atom has no reverse partner.
double crooks_residual(const WorkDistribution& fwd, const WorkDistribution& rev, double z0,
                       double zf, double beta);

/// Same, with the partition functions given as logarithms.
double crooks_residual_log(const WorkDistribution& fwd, const WorkDistribution& rev,
                           double log_z0, double log_zf, double beta);

/// sum_w p(w) exp(-beta w)
double jarzynski_average(const WorkDistribution& dist, double beta);

/// (1/2) sum |p_i - q_i|
double variation_distance(std::span<const double> p, std::span<const double> q);

/// The d x d stochastic map taking an initial distribution to the distribution
/// over final levels.
Matrix protocol_map(const Protocol& protocol);

}  // namespace wcw
