#pragma once

// Line-oriented run configuration for the wcw command-line tool.
//
//   mode = equality
//   energy_units = kT
//   levels = 0 -1
//   step = change 0 0
//   rho0 = 0.9 0.1
//   in_levels = 0
//
// One `key = value` per line, `#` starts a comment, lists are separated by
// spaces or commas (optionally bracketed). `step` may repeat:
//   step = change E_0 ... E_{d-1} [theta=ANGLE]   (two levels only for theta)
//   step = thermalize P_SWAP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wcw::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class Mode { Enumerate, Equality, Crooks, EboxMc, EboxSeries, EboxCharfn, EboxSweep };

const char* to_string(Mode mode);

struct StepSpec {
  bool change = true;
  std::vector<double> energies;   // change
  std::optional<double> theta;    // change: sudden basis rotation
  double p_swap = 0.0;            // thermalize

  bool operator==(const StepSpec&) const = default;
};

struct KnotSpec {
  double t = 0.0;
  double eps = 0.0;
  bool operator==(const KnotSpec&) const = default;
};

struct RunConfig {
  Mode mode = Mode::Enumerate;
  std::optional<std::string> energy_units;  // "kT" or "explicit"
  std::optional<double> beta;
  std::optional<std::string> format;        // "csv" or "json"
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;

  // Discrete protocols.
  std::optional<std::string> protocol;      // "explicit" or "random"
  std::vector<double> levels;
  std::vector<StepSpec> steps;
  std::optional<std::size_t> random_dim;
  std::optional<std::size_t> random_steps;
  std::optional<double> random_span;
  std::optional<bool> random_coherent;
  std::optional<std::vector<double>> rho0;  // absent with rho0_thermal
  bool rho0_thermal = false;
  std::optional<std::vector<std::size_t>> in_levels;
  std::optional<double> eps;
  std::optional<double> bin_tolerance;
  std::optional<std::size_t> cap;

  // Electron box.
  std::optional<double> gamma0;
  std::optional<double> eps_c;
  std::vector<KnotSpec> ramp;
  std::optional<std::string> ramp_shape;    // linear, up-down, szilard-engine, constant
  std::optional<double> eps_start;
  std::optional<double> eps_max;
  std::optional<double> tau;
  std::optional<std::string> direction;     // forward or reverse
  std::optional<std::size_t> n_traj;
  std::optional<std::size_t> n_steps;
  std::optional<std::size_t> j_max;
  std::optional<double> w_lo;
  std::optional<double> w_hi;
  std::optional<std::size_t> w_bins;
  std::optional<double> series_tolerance;
  std::vector<double> xi;
  std::optional<double> lambda_probe;
  std::vector<double> taus;
  std::vector<double> eps_list;
  std::optional<double> max_swap;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a configuration document. Throws wcw::Error of kind
/// Config naming the offending key.
RunConfig parse_config(const std::string& text);

/// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);

struct RunOptions {
  std::optional<std::string> out;     // overrides config.output
  std::optional<std::uint64_t> seed;  // overrides config.seed
  std::optional<std::string> format;  // overrides config.format
  unsigned threads = 0;
  bool extracted = false;             // report extracted work (-w) in distributions
};

struct Artifact {
  std::string suffix;  // appended to the output stem; empty for the main file
  std::string content;
};

/// Runs the configured computation and returns the files it produces.
std::vector<Artifact> execute(const RunConfig& config, const RunOptions& options);

/// Exit status for an error category: 2 config/input, 3 resource, 4 numeric.
int exit_code_for(const std::exception& e);

/// Parses the file, executes, writes artifacts (stdout when no output path).
/// Returns the process exit status and prints one `error: <kind>: <msg>` line
/// on failure.
int run_file(const std::string& config_path, const RunOptions& options);

}  // namespace wcw::cli
