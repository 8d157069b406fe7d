#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "wcw/ebox.hpp"
#include "wcw/error.hpp"
#include "wcw/rng.hpp"

namespace wcw::ebox {

namespace {

constexpr std::size_t kChunk = 1024;

// Flip statistics of one level along the grid. Leaving the level at node k
// happens with probability flip[k]; log_surv holds prefix sums of
// log(1 - flip) over the uncertain nodes and next_certain[k] is the first
// node >= k where the flip is certain.
struct LevelTable {
  std::vector<double> log_surv;
  std::vector<std::size_t> next_certain;
};

LevelTable make_table(const std::vector<double>& flip) {
  const std::size_t n = flip.size();
  LevelTable t;
  t.log_surv.assign(n + 1, 0.0);
  t.next_certain.assign(n + 1, n);
  for (std::size_t k = 0; k < n; ++k)
    t.log_surv[k + 1] = t.log_surv[k] + (flip[k] < 1.0 ? std::log1p(-flip[k]) : 0.0);
  for (std::size_t k = n; k-- > 0;) t.next_certain[k] = flip[k] >= 1.0 ? k : t.next_certain[k + 1];
  return t;
}

class Sampler {
 public:
  Sampler(const RampGrid& grid, const Params& params, const DiagonalState& rho0)
      : eps_(grid.eps), p0_(rho0[0]) {
    const std::size_t n = eps_.size();
    std::vector<double> up(n), down(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double ps = swap_probability(eps_[k], grid.node_weight(k), params);
      const double g1 = excited_fraction(eps_[k], params.beta);
      up[k] = ps * g1;
      down[k] = ps * (1.0 - g1);
    }
    tables_[0] = make_table(up);
    tables_[1] = make_table(down);
  }

  // Returns the work and writes the final level.
  double run(CounterRng& rng, int& final_level) const {
    const std::size_t n = eps_.size();
    int s = rng.uniform() < p0_ ? 0 : 1;
    double work = 0.0;
    double ref = eps_[0];
    std::size_t c = 0;
    while (c < n) {
      const LevelTable& tab = tables_[s];
      const std::size_t certain = tab.next_certain[c];
      const double target = tab.log_surv[c] + std::log(rng.uniform_pos());
      // First m in [c, certain) whose survival past node m drops below u.
      const auto first = tab.log_surv.begin() + static_cast<std::ptrdiff_t>(c + 1);
      const auto last = tab.log_surv.begin() + static_cast<std::ptrdiff_t>(certain + 1);
      const auto it = std::partition_point(first, last, [&](double l) { return l >= target; });
      std::size_t m = static_cast<std::size_t>(it - tab.log_surv.begin()) - 1;
      if (it == last) {
        if (certain >= n) break;
        m = certain;
      }
      if (s == 1) work += eps_[m] - ref;
      ref = eps_[m];
      s ^= 1;
      c = m + 1;
    }
    if (s == 1) work += eps_.back() - ref;
    final_level = s;
    return work;
  }

 private:
  const std::vector<double>& eps_;
  double p0_;
  LevelTable tables_[2];
};

}  // namespace

double EmpiricalWorkDistribution::mean() const {
  require(!samples.empty(), "empty sample");
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n());
}

double EmpiricalWorkDistribution::mean_stderr() const {
  require(samples.size() >= 2, "standard error needs two samples");
  const double m = mean();
  double ss = 0.0;
  for (double w : samples) ss += (w - m) * (w - m);
  const double nn = static_cast<double>(n());
  return std::sqrt(ss / (nn - 1.0) / nn);
}

double EmpiricalWorkDistribution::final_excited_fraction() const {
  require(!samples.empty(), "empty sample");
  return static_cast<double>(final_excited) / static_cast<double>(n());
}

WorkDistribution EmpiricalWorkDistribution::atoms(double bin_tolerance) const {
  // Merge unit counts first so atom probabilities are exact count / n.
  std::vector<WorkAtom> a;
  a.reserve(samples.size());
  for (double w : samples) a.push_back({w, 1.0});
  auto d = make_work_distribution(std::move(a), bin_tolerance);
  for (auto& atom : d.atoms) atom.p /= static_cast<double>(n());
  return d;
}

std::vector<double> EmpiricalWorkDistribution::histogram(std::span<const double> edges) const {
  require(edges.size() >= 2, "histogram needs at least one bin");
  std::vector<double> h(edges.size() - 1, 0.0);
  for (double w : samples) {
    if (w < edges.front() || w >= edges.back()) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), w);
    h[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  for (double& x : h) x /= static_cast<double>(n());
  return h;
}

EmpiricalWorkDistribution monte_carlo_work(const Ramp& ramp, const DiagonalState& rho0,
                                           const McOptions& opts, const Params& params) {
  validate(params);
  validate(rho0, 2);
  require(opts.n_traj >= 1, "n_traj must be positive");
  require(opts.n_steps >= 1, "n_steps must be positive");
  const RampGrid grid = make_grid(ramp, opts.n_steps);
  const Sampler sampler(grid, params, rho0);  // validates every p_sw before sampling

  EmpiricalWorkDistribution out;
  out.seed = opts.seed;
  out.samples.resize(opts.n_traj);
  std::vector<unsigned char> finals(opts.n_traj);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= opts.n_traj) return;
      const std::size_t end = std::min(begin + kChunk, opts.n_traj);
      for (std::size_t i = begin; i < end; ++i) {
        CounterRng rng(opts.seed, i);
        int level = 0;
        out.samples[i] = sampler.run(rng, level);
        finals[i] = static_cast<unsigned char>(level);
      }
    }
  };
  unsigned threads = opts.threads ? opts.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, (opts.n_traj + kChunk - 1) / kChunk));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.final_excited = static_cast<std::size_t>(std::count(finals.begin(), finals.end(), 1));
  return out;
}

}  // namespace wcw::ebox
