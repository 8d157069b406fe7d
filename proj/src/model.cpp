#include "wcw/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "wcw/error.hpp"

namespace wcw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string dim_message(const char* what, std::size_t got, std::size_t want) {
  return std::string(what) + " has dimension " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

}  // namespace

std::vector<std::size_t> DiagonalState::support(double floor) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > floor) out.push_back(i);
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(n_);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = 0; c < n_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<double> Matrix::apply(std::span<const double> p) const {
  require(p.size() == n_, dim_message("vector", p.size(), n_));
  std::vector<double> out(n_, 0.0);
  for (std::size_t to = 0; to < n_; ++to) {
    double acc = 0.0;
    for (std::size_t from = 0; from < n_; ++from) acc += (*this)(to, from) * p[from];
    out[to] = acc;
  }
  return out;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  require(rhs.n_ == n_, dim_message("matrix", rhs.n_, n_));
  Matrix out(n_);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t k = 0; k < n_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < n_; ++c) out(r, c) += a * rhs(k, c);
    }
  return out;
}

std::vector<EnergyLandscape> Protocol::landscapes() const {
  std::vector<EnergyLandscape> out;
  out.reserve(steps.size() + 1);
  out.push_back(initial);
  for (const auto& step : steps) {
    if (const auto* change = std::get_if<HamiltonianChange>(&step))
      out.push_back(change->target);
    else
      out.push_back(out.back());
  }
  return out;
}

EnergyLandscape Protocol::final_landscape() const {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    if (const auto* change = std::get_if<HamiltonianChange>(&*it)) return change->target;
  return initial;
}

LevelPartition LevelPartition::all(std::size_t d) { return LevelPartition{std::vector<bool>(d, true)}; }

LevelPartition LevelPartition::from_in_levels(std::size_t d, std::span<const std::size_t> in_levels) {
  LevelPartition p{std::vector<bool>(d, false)};
  for (std::size_t i : in_levels) {
    require(i < d, "IN level index " + std::to_string(i) + " out of range for d=" + std::to_string(d));
    p.in[i] = true;
  }
  return p;
}

std::vector<std::size_t> LevelPartition::in_levels() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> LevelPartition::out_levels() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

void validate(const EnergyLandscape& landscape) {
  require(!landscape.energies.empty(), "energy landscape is empty");
  bool any_finite = false;
  for (double e : landscape.energies) {
    require(!std::isnan(e) && e != -kInf, "energy landscape contains NaN or -inf");
    any_finite = any_finite || std::isfinite(e);
  }
  require(any_finite, "energy landscape has no finite level");
}

void validate(const DiagonalState& state, std::size_t expected_dim) {
  require(state.size() == expected_dim, dim_message("state", state.size(), expected_dim));
  double sum = 0.0;
  for (double p : state.probs) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "state probability outside [0,1]");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= kStochasticTol,
          "state probabilities sum to " + std::to_string(sum) + ", not 1");
}

void validate(const LevelPartition& partition, std::size_t expected_dim) {
  require(partition.size() == expected_dim, dim_message("partition", partition.size(), expected_dim));
  require(!partition.in_levels().empty(), "partition has an empty IN set");
}

bool is_column_stochastic(const Matrix& m, double tol) {
  for (std::size_t from = 0; from < m.dim(); ++from) {
    double sum = 0.0;
    for (std::size_t to = 0; to < m.dim(); ++to) {
      const double v = m(to, from);
      if (!(v >= 0.0) || !std::isfinite(v)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool is_doubly_stochastic(const Matrix& m, double tol) {
  return is_column_stochastic(m, tol) && is_column_stochastic(m.transposed(), tol);
}

bool satisfies_detailed_balance(const Matrix& m, const EnergyLandscape& landscape, double beta,
                                double tol) {
  const std::size_t d = m.dim();
  if (landscape.size() != d) return false;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double up = m(j, i);    // i -> j
      const double down = m(i, j);  // j -> i
      if (up == 0.0 && down == 0.0) continue;
      const double ei = landscape[i];
      const double ej = landscape[j];
      if (!std::isfinite(ei) || !std::isfinite(ej)) {
        // Hops into a removed level are forbidden.
        if ((!std::isfinite(ej) && up != 0.0) || (!std::isfinite(ei) && down != 0.0)) return false;
        continue;
      }
      if (up == 0.0 || down == 0.0) return false;
      const double log_ratio = std::log(up) - std::log(down);
      if (std::abs(log_ratio + beta * (ej - ei)) > tol) return false;
    }
  return true;
}

void validate(const Protocol& protocol) {
  validate(protocol.initial);
  require(std::isfinite(protocol.beta) && protocol.beta > 0.0, "beta must be positive and finite");
  const std::size_t d = protocol.dim();
  EnergyLandscape current = protocol.initial;
  for (std::size_t k = 0; k < protocol.steps.size(); ++k) {
    const std::string where = "step " + std::to_string(k) + ": ";
    if (const auto* change = std::get_if<HamiltonianChange>(&protocol.steps[k])) {
      validate(change->target);
      require(change->target.size() == d, where + dim_message("target landscape", change->target.size(), d));
      require(change->jump.dim() == d, where + dim_message("jump matrix", change->jump.dim(), d));
      require(is_doubly_stochastic(change->jump), where + "jump matrix is not doubly stochastic");
      current = change->target;
    } else {
      const auto& therm = std::get<Thermalization>(protocol.steps[k]);
      require(therm.hop.dim() == d, where + dim_message("hop matrix", therm.hop.dim(), d));
      require(is_column_stochastic(therm.hop), where + "hop matrix is not column stochastic");
      require(satisfies_detailed_balance(therm.hop, current, protocol.beta),
              where + "hop matrix violates detailed balance");
    }
  }
}

ThermalState make_thermal_state(const EnergyLandscape& landscape, double beta) {
  validate(landscape);
  require(std::isfinite(beta) && beta > 0.0, "beta must be positive and finite");
  // log-sum-exp, shifted by the lowest finite energy
  double e_min = kInf;
  for (double e : landscape.energies) e_min = std::min(e_min, e);
  double shifted_z = 0.0;
  std::vector<double> weights(landscape.size());
  for (std::size_t i = 0; i < landscape.size(); ++i) {
    weights[i] = std::exp(-beta * (landscape[i] - e_min));
    shifted_z += weights[i];
  }
  ThermalState out;
  out.state.probs.resize(landscape.size());
  for (std::size_t i = 0; i < landscape.size(); ++i) out.state.probs[i] = weights[i] / shifted_z;
  out.log_z = std::log(shifted_z) - beta * e_min;
  out.z = std::exp(out.log_z);
  return out;
}

Matrix partial_swap_hop_matrix(const EnergyLandscape& landscape, double beta, double p_swap) {
  require(p_swap >= 0.0 && p_swap <= 1.0, "p_swap must lie in [0,1]");
  const auto gibbs = make_thermal_state(landscape, beta).state;
  const std::size_t d = landscape.size();
  Matrix m(d);
  for (std::size_t to = 0; to < d; ++to)
    for (std::size_t from = 0; from < d; ++from)
      m(to, from) = (to == from ? 1.0 - p_swap : 0.0) + p_swap * gibbs[to];
  return m;
}

Thermalization partial_swap(const EnergyLandscape& landscape, double beta, double p_swap) {
  return Thermalization{partial_swap_hop_matrix(landscape, beta, p_swap), p_swap};
}

Matrix sudden_quench_jump_matrix(double theta) {
  const double c2 = std::cos(theta) * std::cos(theta);
  const double s2 = std::sin(theta) * std::sin(theta);
  Matrix m(2);
  m(0, 0) = c2;
  m(1, 1) = c2;
  m(0, 1) = s2;
  m(1, 0) = s2;
  return m;
}

HamiltonianChange spectral_change(EnergyLandscape target) {
  const std::size_t d = target.size();
  return HamiltonianChange{std::move(target), Matrix::identity(d)};
}

Protocol reverse_protocol(const Protocol& protocol) {
  const auto lands = protocol.landscapes();
  Protocol rev;
  rev.beta = protocol.beta;
  rev.initial = lands.back();
  rev.steps.reserve(protocol.steps.size());
  for (std::size_t k = protocol.steps.size(); k-- > 0;) {
    const auto& step = protocol.steps[k];
    if (const auto* change = std::get_if<HamiltonianChange>(&step)) {
      rev.steps.emplace_back(HamiltonianChange{lands[k], change->jump.transposed()});
    } else {
      const auto& therm = std::get<Thermalization>(step);
      if (therm.p_swap)
        rev.steps.emplace_back(partial_swap(lands[k], protocol.beta, *therm.p_swap));
      else
        rev.steps.emplace_back(therm);
    }
  }
  return rev;
}

double step_work(const HamiltonianChange& step, std::size_t from, std::size_t to,
                 const EnergyLandscape& current) {
  require(from < current.size() && to < step.target.size(), "level index out of range in step_work");
  return step.target[to] - current[from];
}

namespace {

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return kInf;
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;  // also covers equal infinities
    out = std::max(out, std::abs(a[i] - b[i]));
  }
  return out;
}

double max_diff(const Matrix& a, const Matrix& b) {
  if (a.dim() != b.dim()) return kInf;
  double out = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) out = std::max(out, std::abs(a(r, c) - b(r, c)));
  return out;
}

}  // namespace

double protocol_distance(const Protocol& a, const Protocol& b) {
  if (a.steps.size() != b.steps.size()) return kInf;
  double out = std::max(max_diff(a.initial.energies, b.initial.energies), std::abs(a.beta - b.beta));
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    if (a.steps[k].index() != b.steps[k].index()) return kInf;
    if (const auto* ca = std::get_if<HamiltonianChange>(&a.steps[k])) {
      const auto& cb = std::get<HamiltonianChange>(b.steps[k]);
      out = std::max({out, max_diff(ca->target.energies, cb.target.energies), max_diff(ca->jump, cb.jump)});
    } else {
      const auto& ta = std::get<Thermalization>(a.steps[k]);
      const auto& tb = std::get<Thermalization>(b.steps[k]);
      out = std::max(out, max_diff(ta.hop, tb.hop));
    }
  }
  return out;
}

}  // namespace wcw
