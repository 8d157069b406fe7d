#pragma once

#include <cstddef>

#include "wcw/model.hpp"
#include "wcw/rng.hpp"

namespace wcw {

struct RandomProtocolOptions {
  std::size_t dim = 3;
  std::size_t steps = 4;
  double beta = 1.0;
  double energy_span = 2.0;        // energies drawn from [-span, span]
  bool allow_coherent_jumps = false;  // non-identity doubly stochastic jumps
  bool raise_only = false;         // every Hamiltonian change raises or keeps each level
};

/// Random mix of Hamiltonian changes and thermalizations. Thermalizations are
/// either partial swaps or Metropolis-type matrices with random symmetric
/// attempt probabilities; both satisfy detailed balance by construction.
Protocol random_protocol(CounterRng& rng, const RandomProtocolOptions& opts);

/// Random doubly stochastic matrix (convex combination of permutations).
Matrix random_doubly_stochastic(CounterRng& rng, std::size_t d);

/// Random detailed-balance thermalization for `landscape` that carries no
/// partial-swap parameter.
Thermalization random_metropolis(CounterRng& rng, const EnergyLandscape& landscape, double beta);

/// Random normalized distribution with every entry >= floor.
DiagonalState random_state(CounterRng& rng, std::size_t d, double floor = 0.0);

}  // namespace wcw
