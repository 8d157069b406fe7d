#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "wcw/engine.hpp"
#include "wcw/random_protocol.hpp"

using namespace wcw;
using testutil::throws_kind;

namespace {

Protocol lift(double de = 1.0) { return Protocol{{{0.0, -de}}, 1.0, {spectral_change({{0.0, 0.0}})}}; }

double sum_p(const std::vector<Trajectory>& ts) {
  double s = 0.0;
  for (const auto& t : ts) s += t.probability;
  return s;
}

// Brute force over all d^(n+1) node sequences.
std::map<double, double> brute_force(const Protocol& p, const DiagonalState& rho0) {
  const std::size_t d = p.dim();
  const std::size_t nodes = p.steps.size() + 1;
  std::size_t total = 1;
  for (std::size_t k = 0; k < nodes; ++k) total *= d;
  std::map<double, double> out;
  std::vector<std::size_t> path(nodes);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (auto& x : path) x = c % d, c /= d;
    const Trajectory t = evaluate_path(p, rho0, path);
    if (t.probability > 0.0) out[std::round(t.work * 1e8) / 1e8] += t.probability;
  }
  return out;
}

}  // namespace

TEST_CASE("enumeration of the lift") {
  const auto e = enumerate_trajectories(lift(), {{0.9, 0.1}});
  REQUIRE(e.trajectories.size() == 2);
  for (const auto& t : e.trajectories) {
    if (t.nodes.front() == 0) {
      CHECK(t.work == 0.0);
      CHECK(t.probability == doctest::Approx(0.9));
    } else {
      CHECK(t.work == 1.0);
      CHECK(t.probability == doctest::Approx(0.1));
    }
  }
}

TEST_CASE("enumeration of trivial protocols") {
  const Protocol empty{{{0.0, 1.0}}, 1.0, {}};
  const auto e = enumerate_trajectories(empty, {{1.0, 0.0}});
  REQUIRE(e.trajectories.size() == 1);
  CHECK(e.trajectories[0].work == 0.0);
  CHECK(e.trajectories[0].probability == 1.0);

  const EnergyLandscape flat{{0.0, 0.0}};
  const Protocol swap{flat, 1.0, {partial_swap(flat, 1.0, 1.0)}};
  const auto s = enumerate_trajectories(swap, {{1.0, 0.0}});
  REQUIRE(s.trajectories.size() == 2);
  for (const auto& t : s.trajectories) {
    CHECK(t.probability == doctest::Approx(0.5));
    CHECK(t.work == 0.0);
  }
}

TEST_CASE("work distributions of the lift and its reverse") {
  const auto fwd = work_distribution(lift(), {{0.9, 0.1}});
  REQUIRE(fwd.atoms.size() == 2);
  CHECK(fwd.atoms[0].w == 0.0);
  CHECK(fwd.atoms[0].p == doctest::Approx(0.9));
  CHECK(fwd.atoms[1].w == 1.0);
  CHECK(fwd.atoms[1].p == doctest::Approx(0.1));

  const auto rev = work_distribution(reverse_protocol(lift()), {{0.5, 0.5}});
  REQUIRE(rev.atoms.size() == 2);
  CHECK(rev.atoms[0].w == -1.0);
  CHECK(rev.atoms[0].p == doctest::Approx(0.5));
  CHECK(rev.atoms[1].w == 0.0);
}

TEST_CASE("pure thermalizations on degenerate levels cost nothing") {
  const EnergyLandscape flat{{0.0, 0.0, 0.0}};
  CounterRng rng(3, 0);
  Protocol p{flat, 1.0, {partial_swap(flat, 1.0, 0.3), random_metropolis(rng, flat, 1.0)}};
  const auto d = work_distribution(p, {{0.2, 0.5, 0.3}});
  REQUIRE(d.atoms.size() == 1);
  CHECK(d.atoms[0].w == 0.0);
  CHECK(d.atoms[0].p == doctest::Approx(1.0));
}

TEST_CASE("worst-case work") {
  const auto e = enumerate_trajectories(lift(), {{0.9, 0.1}});
  const auto dist = work_distribution(e.trajectories);
  CHECK(worst_case_work(dist) == 1.0);
  const auto in = restrict_to_in(e.trajectories, LevelPartition::from_in_levels(2, std::vector<std::size_t>{0}));
  CHECK(worst_case_work(in) == 0.0);
  CHECK(worst_case_work(make_work_distribution({{0.0, 1.0}})) == 0.0);
  CHECK(throws_kind([] { worst_case_work(std::span<const Trajectory>{}); }, ErrorKind::InvalidInput));
}

TEST_CASE("epsilon-guaranteed work") {
  const auto dist = work_distribution(lift(), {{0.9, 0.1}});
  const auto e = epsilon_guaranteed_work(dist, 0.1);
  CHECK(e.w_eps == 0.0);
  REQUIRE(e.cut.atoms.size() == 1);
  CHECK(e.cut.atoms[0].p == doctest::Approx(1.0));

  const auto zero = epsilon_guaranteed_work(dist, 0.0);
  CHECK(zero.w_eps == worst_case_work(dist));
  CHECK(zero.cut.atoms.size() == dist.atoms.size());

  const auto u = make_work_distribution({{0.0, 1.0 / 3}, {1.0, 1.0 / 3}, {2.0, 1.0 / 3}});
  CHECK(epsilon_guaranteed_work(u, 1.0 / 3).w_eps == 1.0);
  CHECK(throws_kind([&] { epsilon_guaranteed_work(u, 1.0); }, ErrorKind::InvalidInput));
}

TEST_CASE("Crooks residual of the lift from a thermal state") {
  const Protocol p = lift();
  const auto g0 = make_thermal_state(p.initial, 1.0);
  const auto gf = make_thermal_state(p.final_landscape(), 1.0);
  const auto fwd = work_distribution(p, g0.state);
  const auto rev = work_distribution(reverse_protocol(p), gf.state);
  CHECK(crooks_residual(fwd, rev, g0.z, gf.z, 1.0) < 1e-12);
  // p_fwd(dE) / p_rev(-dE) = (Zf/Z0) e^{beta dE}
  const double lhs = fwd.probability_at(1.0) / rev.probability_at(-1.0);
  CHECK(std::abs(lhs - gf.z / g0.z * std::exp(1.0)) < 1e-12);

  const Protocol empty{{{0.0, 0.4}}, 1.0, {}};
  const auto g = make_thermal_state(empty.initial, 1.0);
  const auto d = work_distribution(empty, g.state);
  CHECK(crooks_residual(d, d, g.z, g.z, 1.0) == 0.0);
}

TEST_CASE("Crooks support mismatch is an error") {
  const auto fwd = make_work_distribution({{0.0, 0.5}, {1.0, 0.5}});
  const auto rev = make_work_distribution({{0.0, 1.0}});
  CHECK(throws_kind([&] { crooks_residual(fwd, rev, 1.0, 1.0, 1.0); }, ErrorKind::SupportMismatch));
}

TEST_CASE("Crooks and Jarzynski on random protocols") {
  for (std::uint64_t s = 0; s < 60; ++s) {
    CounterRng rng(101, s);
    RandomProtocolOptions o;
    o.dim = 3;
    o.steps = 4;
    o.beta = 0.5 + 0.25 * static_cast<double>(s % 5);
    o.allow_coherent_jumps = s % 3 == 0;
    const Protocol p = random_protocol(rng, o);
    const auto g0 = make_thermal_state(p.initial, p.beta);
    const auto gf = make_thermal_state(p.final_landscape(), p.beta);
    const auto fwd = work_distribution(p, g0.state);
    const auto rev = work_distribution(reverse_protocol(p), gf.state);
    CHECK(crooks_residual_log(fwd, rev, g0.log_z, gf.log_z, p.beta) < 1e-10);
    CHECK(std::abs(jarzynski_average(fwd, p.beta) - gf.z / g0.z) < 1e-10);
  }
}

TEST_CASE("enumeration matches brute force over all paths") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    CounterRng rng(202, s);
    RandomProtocolOptions o;
    o.dim = 2 + s % 2;
    o.steps = 3;
    o.allow_coherent_jumps = true;
    const Protocol p = random_protocol(rng, o);
    const DiagonalState rho = random_state(rng, p.dim(), 0.0);
    const auto e = enumerate_trajectories(p, rho);
    CHECK(std::abs(sum_p(e.trajectories) - 1.0) < 1e-10);
    std::map<double, double> mine;
    for (const auto& t : e.trajectories) mine[std::round(t.work * 1e8) / 1e8] += t.probability;
    const auto ref = brute_force(p, rho);
    REQUIRE(mine.size() == ref.size());
    auto b = ref.begin();
    for (auto a = mine.begin(); a != mine.end(); ++a, ++b) {
      CHECK(a->first == b->first);
      CHECK(std::abs(a->second - b->second) < 1e-12);
    }
    for (const auto& t : e.trajectories) {
      const Trajectory again = evaluate_path(p, rho, t.nodes);
      CHECK(std::abs(again.work - t.work) < 1e-12);
    }
  }
}

TEST_CASE("reverse trajectories carry the opposite work") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    CounterRng rng(303, s);
    RandomProtocolOptions o;
    o.dim = 3;
    o.steps = 5;
    const Protocol p = random_protocol(rng, o);
    const Protocol r = reverse_protocol(p);
    const auto gf = make_thermal_state(p.final_landscape(), p.beta);
    for (const auto& t : enumerate_trajectories(p, make_thermal_state(p.initial, p.beta).state).trajectories) {
      std::vector<std::size_t> back(t.nodes.rbegin(), t.nodes.rend());
      const Trajectory tr = evaluate_path(r, gf.state, back);
      CHECK(tr.probability > 0.0);
      CHECK(std::abs(tr.work + t.work) < 1e-12);
    }
  }
}

TEST_CASE("enumeration cap") {
  const EnergyLandscape flat{{0.0, 0.0, 0.0, 0.0}};
  Protocol p{flat, 1.0, {}};
  for (int k = 0; k < 8; ++k) p.steps.push_back(partial_swap(flat, 1.0, 0.5));
  EnumerationOptions o;
  o.cap = 1000;
  CHECK(throws_kind([&] { enumerate_trajectories(p, {{0.25, 0.25, 0.25, 0.25}}, o); }, ErrorKind::ResourceLimit));
}

TEST_CASE("pruned mass is reported") {
  const EnergyLandscape flat{{0.0, 0.0}};
  Protocol p{flat, 1.0, {partial_swap(flat, 1.0, 0.02)}};
  EnumerationOptions o;
  o.prune_below = 0.05;
  const auto e = enumerate_trajectories(p, {{0.5, 0.5}}, o);
  CHECK(std::abs(e.pruned_mass + sum_p(e.trajectories) - 1.0) < 1e-12);
  CHECK(e.pruned_mass > 0.0);
}

TEST_CASE("variation distance") {
  const std::vector<double> a{0.9, 0.1}, b{0.5, 0.5}, x{1.0, 0.0}, y{0.0, 1.0};
  CHECK(variation_distance(a, a) == 0.0);
  CHECK(variation_distance(x, y) == doctest::Approx(1.0));
  CHECK(std::abs(variation_distance(a, b) - 0.4) < 1e-15);
  CHECK(variation_distance(a, b) == variation_distance(b, a));
  const std::vector<double> three{0.2, 0.3, 0.5};
  CHECK(throws_kind([&] { variation_distance(a, three); }, ErrorKind::InvalidInput));
}

TEST_CASE("stochastic maps contract variation distance") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    CounterRng rng(404, s);
    RandomProtocolOptions o;
    o.dim = 2 + s % 3;
    o.steps = 1 + s % 5;
    o.allow_coherent_jumps = true;
    const Matrix m = protocol_map(random_protocol(rng, o));
    CHECK(is_column_stochastic(m, 1e-12));
    const auto p = random_state(rng, o.dim);
    const auto q = random_state(rng, o.dim);
    CHECK(variation_distance(m.apply(p.probs), m.apply(q.probs)) <= variation_distance(p.probs, q.probs) + 1e-15);
  }
}

TEST_CASE("sudden quench lowers the probability of the worst case") {
  const double de = 1.0;
  const DiagonalState rho{{1.0 / 3, 2.0 / 3}};
  const EnergyLandscape zero{{0.0, 0.0}};
  const EnergyLandscape up{{0.0, de}};
  const Protocol classical{zero, 1.0, {spectral_change(up)}};
  const Protocol coherent{zero, 1.0, {HamiltonianChange{up, sudden_quench_jump_matrix(std::numbers::pi / 4)}}};
  const auto a = work_distribution(classical, rho);
  const auto b = work_distribution(coherent, rho);
  CHECK(worst_case_work(a) == de);
  CHECK(worst_case_work(b) == de);
  CHECK(std::abs(a.probability_at(de) - 2.0 / 3) < 1e-15);
  CHECK(std::abs(b.probability_at(de) - 0.5) < 1e-15);
}

TEST_CASE("close work values merge into one atom") {
  const auto d = make_work_distribution({{1.0, 0.25}, {1.0 + 1e-12, 0.25}, {2.0, 0.5}});
  REQUIRE(d.atoms.size() == 2);
  CHECK(d.atoms[0].p == doctest::Approx(0.5));
  for (std::size_t i = 1; i < d.atoms.size(); ++i) CHECK(d.atoms[i].w - d.atoms[i - 1].w > d.bin_tolerance);
}
