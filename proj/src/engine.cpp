#include "wcw/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wcw/error.hpp"

namespace wcw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Matrix& step_matrix(const ProtocolStep& step) {
  if (const auto* change = std::get_if<HamiltonianChange>(&step)) return change->jump;
  return std::get<Thermalization>(step).hop;
}

bool same_bin(double a, double b, double tol) { return a == b || std::abs(a - b) <= tol; }

class Enumerator {
 public:
  Enumerator(const Protocol& protocol, const EnumerationOptions& opts)
      : protocol_(protocol), lands_(protocol.landscapes()), opts_(opts) {
    path_.resize(protocol.steps.size() + 1);
  }

  Enumeration run(const DiagonalState& rho0) {
    for (std::size_t i = 0; i < rho0.size(); ++i) {
      const double p = rho0[i];
      if (p <= 0.0) continue;
      path_[0] = i;
      descend(0, i, p, 0.0);
    }
    return std::move(out_);
  }

 private:
  void descend(std::size_t k, std::size_t level, double prob, double work) {
    if (k == protocol_.steps.size()) {
      if (out_.trajectories.size() >= opts_.cap)
        fail(ErrorKind::ResourceLimit,
             "trajectory count exceeds cap of " + std::to_string(opts_.cap) +
                 "; use Monte Carlo sampling for protocols of this size");
      out_.trajectories.push_back(Trajectory{path_, work, prob});
      return;
    }
    const auto& step = protocol_.steps[k];
    const Matrix& m = step_matrix(step);
    const auto* change = std::get_if<HamiltonianChange>(&step);
    for (std::size_t to = 0; to < m.dim(); ++to) {
      const double t = m(to, level);
      if (t <= 0.0) continue;
      const double next = prob * t;
      if (next <= opts_.prune_below) {
        out_.pruned_mass += next;
        continue;
      }
      const double w = change ? work + step_work(*change, level, to, lands_[k]) : work;
      path_[k + 1] = to;
      descend(k + 1, to, next, w);
    }
  }

  const Protocol& protocol_;
  std::vector<EnergyLandscape> lands_;
  EnumerationOptions opts_;
  std::vector<std::size_t> path_;
  Enumeration out_;
};

}  // namespace

double WorkDistribution::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.p;
  return s;
}

double WorkDistribution::mean() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.p * a.w;
  return s;
}

std::optional<std::size_t> WorkDistribution::find(double w) const {
  auto it = std::lower_bound(atoms.begin(), atoms.end(), w - bin_tolerance,
                             [](const WorkAtom& a, double x) { return a.w < x; });
  for (; it != atoms.end(); ++it) {
    if (same_bin(it->w, w, bin_tolerance)) return static_cast<std::size_t>(it - atoms.begin());
    if (it->w > w) break;
  }
  return std::nullopt;
}

double WorkDistribution::probability_at(double w) const {
  const auto idx = find(w);
  return idx ? atoms[*idx].p : 0.0;
}

Enumeration enumerate_trajectories(const Protocol& protocol, const DiagonalState& rho0,
                                   const EnumerationOptions& opts) {
  validate(protocol);
  validate(rho0, protocol.dim());
  return Enumerator(protocol, opts).run(rho0);
}

Trajectory evaluate_path(const Protocol& protocol, const DiagonalState& rho0,
                         std::span<const std::size_t> nodes) {
  require(nodes.size() == protocol.steps.size() + 1, "path length must equal the node count");
  const auto lands = protocol.landscapes();
  Trajectory t{std::vector<std::size_t>(nodes.begin(), nodes.end()), 0.0, rho0[nodes[0]]};
  for (std::size_t k = 0; k < protocol.steps.size(); ++k) {
    const auto& step = protocol.steps[k];
    t.probability *= step_matrix(step)(nodes[k + 1], nodes[k]);
    if (const auto* change = std::get_if<HamiltonianChange>(&step))
      t.work += step_work(*change, nodes[k], nodes[k + 1], lands[k]);
  }
  return t;
}

WorkDistribution make_work_distribution(std::vector<WorkAtom> samples, double bin_tolerance) {
  require(bin_tolerance >= 0.0, "bin tolerance must be non-negative");
  std::erase_if(samples, [](const WorkAtom& a) { return !(a.p > 0.0); });
  std::sort(samples.begin(), samples.end(), [](const WorkAtom& a, const WorkAtom& b) {
    return a.w < b.w || (a.w == b.w && a.p < b.p);
  });
  WorkDistribution dist;
  dist.bin_tolerance = bin_tolerance;
  std::size_t i = 0;
  while (i < samples.size()) {
    double mass = samples[i].p;
    double moment = std::isfinite(samples[i].w) ? samples[i].p * samples[i].w : 0.0;
    std::size_t j = i + 1;
    while (j < samples.size() && same_bin(samples[j].w, samples[j - 1].w, bin_tolerance)) {
      mass += samples[j].p;
      if (std::isfinite(samples[j].w)) moment += samples[j].p * samples[j].w;
      ++j;
    }
    const double w = std::isfinite(samples[i].w) ? moment / mass : samples[i].w;
    dist.atoms.push_back(WorkAtom{w, mass});
    i = j;
  }
  return dist;
}

WorkDistribution work_distribution(std::span<const Trajectory> trajectories, double bin_tolerance) {
  std::vector<WorkAtom> samples;
  samples.reserve(trajectories.size());
  for (const auto& t : trajectories) samples.push_back(WorkAtom{t.work, t.probability});
  return make_work_distribution(std::move(samples), bin_tolerance);
}

WorkDistribution work_distribution(const Protocol& protocol, const DiagonalState& rho0,
                                   double bin_tolerance, const EnumerationOptions& opts) {
  const auto e = enumerate_trajectories(protocol, rho0, opts);
  return work_distribution(e.trajectories, bin_tolerance);
}

std::vector<Trajectory> restrict_to_in(std::span<const Trajectory> trajectories,
                                       const LevelPartition& partition) {
  std::vector<Trajectory> out;
  for (const auto& t : trajectories)
    if (!t.nodes.empty() && t.nodes.front() < partition.size() && partition.in[t.nodes.front()])
      out.push_back(t);
  return out;
}

double worst_case_work(const WorkDistribution& dist, double prob_floor) {
  for (auto it = dist.atoms.rbegin(); it != dist.atoms.rend(); ++it)
    if (it->p > prob_floor) return it->w;
  fail(ErrorKind::InvalidInput, "worst-case work of an empty distribution");
}

double worst_case_work(std::span<const Trajectory> restricted) {
  require(!restricted.empty(), "worst-case work over an empty trajectory set");
  double w = -kInf;
  bool any = false;
  for (const auto& t : restricted)
    if (t.probability > 0.0) {
      w = std::max(w, t.work);
      any = true;
    }
  require(any, "restricted trajectory set has no possible trajectory");
  return w;
}

EpsilonWork epsilon_guaranteed_work(const WorkDistribution& dist, double eps) {
  require(eps >= 0.0 && eps < 1.0, "eps must lie in [0,1)");
  require(!dist.empty(), "epsilon-guaranteed work of an empty distribution");
  // Walk down from the top atom while the mass strictly above the next
  // candidate stays within eps. The relative slack absorbs round-off in tail
  // sums that are equal to eps analytically.
  const double budget = eps * (1.0 + 1e-12);
  std::size_t keep = dist.atoms.size();  // atoms [0, keep) survive
  double tail = 0.0;
  while (keep > 1) {
    const double next_tail = tail + dist.atoms[keep - 1].p;
    if (next_tail > budget) break;
    tail = next_tail;
    --keep;
  }
  EpsilonWork out;
  out.w_eps = dist.atoms[keep - 1].w;
  out.cut.bin_tolerance = dist.bin_tolerance;
  double retained = 0.0;
  for (std::size_t i = 0; i < keep; ++i) retained += dist.atoms[i].p;
  out.retained_mass = retained;
  out.cut.atoms.assign(dist.atoms.begin(), dist.atoms.begin() + static_cast<std::ptrdiff_t>(keep));
  for (auto& a : out.cut.atoms) a.p /= retained;
  return out;
}

double crooks_residual_log(const WorkDistribution& fwd, const WorkDistribution& rev,
                           double log_z0, double log_zf, double beta) {
  const double tol = std::max(fwd.bin_tolerance, rev.bin_tolerance);
  WorkDistribution rev_lookup = rev;
  rev_lookup.bin_tolerance = tol;
  double worst = 0.0;
  for (const auto& a : fwd.atoms) {
    const auto idx = rev_lookup.find(-a.w);
    if (!idx)
      fail(ErrorKind::SupportMismatch,
           "forward work " + std::to_string(a.w) + " has no reverse partner at " + std::to_string(-a.w));
    const double r = std::log(a.p) - std::log(rev.atoms[*idx].p) - (log_zf - log_z0) - beta * a.w;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double crooks_residual(const WorkDistribution& fwd, const WorkDistribution& rev, double z0,
                       double zf, double beta) {
  require(z0 > 0.0 && zf > 0.0, "partition functions must be positive");
  return crooks_residual_log(fwd, rev, std::log(z0), std::log(zf), beta);
}

double jarzynski_average(const WorkDistribution& dist, double beta) {
  double s = 0.0;
  for (const auto& a : dist.atoms) s += a.p * std::exp(-beta * a.w);
  return s;
}

double variation_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "variation distance needs equal lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

Matrix protocol_map(const Protocol& protocol) {
  Matrix m = Matrix::identity(protocol.dim());
  for (const auto& step : protocol.steps) m = step_matrix(step) * m;
  return m;
}

}  // namespace wcw
