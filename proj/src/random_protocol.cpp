#include "wcw/random_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wcw/error.hpp"

namespace wcw {

Matrix random_doubly_stochastic(CounterRng& rng, std::size_t d) {
  Matrix out(d);
  const std::size_t terms = 3;
  std::vector<double> w(terms);
  for (auto& x : w) x = rng.uniform_pos();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t t = 0; t < terms; ++t) {
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t from = 0; from < d; ++from) out(perm[from], from) += w[t] / total;
  }
  return out;
}

Thermalization random_metropolis(CounterRng& rng, const EnergyLandscape& landscape, double beta) {
  const std::size_t d = landscape.size();
  Matrix m(d);
  const double cap = d > 1 ? 1.0 / static_cast<double>(d - 1) : 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double attempt = cap * rng.uniform();
      const double de = landscape[j] - landscape[i];
      m(j, i) = attempt * std::min(1.0, std::exp(-beta * de));
      m(i, j) = attempt * std::min(1.0, std::exp(beta * de));
    }
  for (std::size_t i = 0; i < d; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) off += m(j, i);
    m(i, i) = 1.0 - off;
  }
  return Thermalization{std::move(m), std::nullopt};
}

DiagonalState random_state(CounterRng& rng, std::size_t d, double floor) {
  require(floor * static_cast<double>(d) < 1.0, "random_state floor too large");
  DiagonalState s;
  s.probs.resize(d);
  double total = 0.0;
  for (auto& p : s.probs) {
    p = rng.uniform_pos();
    total += p;
  }
  const double free_mass = 1.0 - floor * static_cast<double>(d);
  for (auto& p : s.probs) p = floor + free_mass * p / total;
  return s;
}

Protocol random_protocol(CounterRng& rng, const RandomProtocolOptions& opts) {
  require(opts.dim >= 1, "random protocol needs at least one level");
  Protocol p;
  p.beta = opts.beta;
  p.initial.energies.resize(opts.dim);
  for (auto& e : p.initial.energies) e = rng.uniform(-opts.energy_span, opts.energy_span);

  EnergyLandscape current = p.initial;
  for (std::size_t k = 0; k < opts.steps; ++k) {
    const bool change = rng.uniform() < 0.5;
    if (change) {
      EnergyLandscape target = current;
      for (auto& e : target.energies) {
        if (opts.raise_only)
          e += rng.uniform(0.0, opts.energy_span);
        else
          e = rng.uniform(-opts.energy_span, opts.energy_span);
      }
      Matrix jump = Matrix::identity(opts.dim);
      // A coherent jump mixes levels, which would break raise-only monotonicity.
      if (opts.allow_coherent_jumps && !opts.raise_only && rng.uniform() < 0.5)
        jump = random_doubly_stochastic(rng, opts.dim);
      p.steps.emplace_back(HamiltonianChange{target, std::move(jump)});
      current = std::move(target);
    } else if (rng.uniform() < 0.5) {
      p.steps.emplace_back(partial_swap(current, p.beta, rng.uniform()));
    } else {
      p.steps.emplace_back(random_metropolis(rng, current, p.beta));
    }
  }
  return p;
}

}  // namespace wcw
