#pragma once

// Domain types for driven few-level systems in contact with a Markovian bath:
// energy landscapes, diagonal states, protocol steps and their constructors.
//
// Conventions used throughout the library:
//  * Probability vectors are columns; a transition matrix M maps p -> M p and
//    M(to, from) is the probability of hopping from level `from` to `to`.
//  * Work is a cost: energy drawn from the battery. Extraction is its negative.
//  * A level energy of +infinity marks a level removed from the spectrum (its
//    Gibbs weight is exactly zero). -infinity and NaN are rejected.

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace wcw {

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kDetailedBalanceTol = 1e-10;

struct EnergyLandscape {
  std::vector<double> energies;

  std::size_t size() const noexcept { return energies.size(); }
  double operator[](std::size_t i) const { return energies[i]; }
};

struct DiagonalState {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  /// Indices whose probability exceeds `floor`.
  std::vector<std::size_t> support(double floor = 0.0) const;
};

/// Dense square matrix, row-major. Element (to, from).
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t dim() const noexcept { return n_; }
  double& operator()(std::size_t to, std::size_t from) { return a_[to * n_ + from]; }
  double operator()(std::size_t to, std::size_t from) const { return a_[to * n_ + from]; }

  Matrix transposed() const;
  std::vector<double> apply(std::span<const double> p) const;
  Matrix operator*(const Matrix& rhs) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct HamiltonianChange {
  EnergyLandscape target;
  Matrix jump;  // |<j, lambda_{m+1}| U |i, lambda_m>|^2, doubly stochastic
};

struct Thermalization {
  Matrix hop;
  /// Set when the hop matrix is a partial swap; the reverse protocol rebuilds
  /// it from this parameter against the landscape in force.
  std::optional<double> p_swap;
};

using ProtocolStep = std::variant<HamiltonianChange, Thermalization>;

struct Protocol {
  EnergyLandscape initial;
  double beta = 1.0;
  std::vector<ProtocolStep> steps;

  std::size_t dim() const noexcept { return initial.size(); }

  /// Landscape in force before each step, followed by the final one
  /// (steps.size() + 1 entries).
  std::vector<EnergyLandscape> landscapes() const;
  EnergyLandscape final_landscape() const;
};

struct LevelPartition {
  std::vector<bool> in;  // in[i] == true  <=>  level i belongs to the IN set

  static LevelPartition all(std::size_t d);
  static LevelPartition from_in_levels(std::size_t d, std::span<const std::size_t> in_levels);

  std::size_t size() const noexcept { return in.size(); }
  std::vector<std::size_t> in_levels() const;
  std::vector<std::size_t> out_levels() const;
};

struct ThermalState {
  DiagonalState state;
  double z = 1.0;
  double log_z = 0.0;
};

// --- validation -------------------------------------------------------------

void validate(const EnergyLandscape& landscape);
void validate(const DiagonalState& state, std::size_t expected_dim);
void validate(const LevelPartition& partition, std::size_t expected_dim);
/// Checks dimensions, stochasticity of every matrix, double stochasticity of
/// jumps and detailed balance of every thermalization.
void validate(const Protocol& protocol);

bool is_column_stochastic(const Matrix& m, double tol = kStochasticTol);
bool is_doubly_stochastic(const Matrix& m, double tol = kStochasticTol);
bool satisfies_detailed_balance(const Matrix& m, const EnergyLandscape& landscape, double beta,
                                double tol = kDetailedBalanceTol);

// --- constructors -----------------------------------------------------------

ThermalState make_thermal_state(const EnergyLandscape& landscape, double beta);

/// (1 - p_swap) * I + p_swap * |gibbs><ones|
Matrix partial_swap_hop_matrix(const EnergyLandscape& landscape, double beta, double p_swap);
Thermalization partial_swap(const EnergyLandscape& landscape, double beta, double p_swap);

/// Two-level jump matrix of a sudden basis rotation by angle theta.
Matrix sudden_quench_jump_matrix(double theta);

/// Pure spectral change (identity jump).
HamiltonianChange spectral_change(EnergyLandscape target);

/// Hamiltonian changes run backwards with transposed jumps; thermalizations
/// appear in inverted order.
Protocol reverse_protocol(const Protocol& protocol);

/// E_target(to) - E_current(from).
double step_work(const HamiltonianChange& step, std::size_t from, std::size_t to,
                 const EnergyLandscape& current);

/// Largest entrywise difference between two protocols; +inf when their step
/// structure differs.
double protocol_distance(const Protocol& a, const Protocol& b);

}  // namespace wcw
