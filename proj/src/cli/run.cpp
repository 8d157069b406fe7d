#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "wcw/config.hpp"
#include "wcw/ebox.hpp"
#include "wcw/engine.hpp"
#include "wcw/error.hpp"
#include "wcw/random_protocol.hpp"
#include "wcw/rng.hpp"
#include "wcw/singleshot.hpp"

namespace wcw::cli {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double beta_of(const RunConfig& c) { return c.beta.value_or(1.0); }

std::uint64_t seed_of(const RunConfig& c, const RunOptions& o) {
  return o.seed.value_or(c.seed.value_or(kDefaultSeed));
}

Protocol build_protocol(const RunConfig& c, std::uint64_t seed) {
  if (c.protocol && *c.protocol == "random") {
    CounterRng rng(seed, 0);
    RandomProtocolOptions opts;
    opts.dim = *c.random_dim;
    opts.steps = c.random_steps.value_or(4);
    opts.beta = beta_of(c);
    opts.energy_span = c.random_span.value_or(2.0);
    opts.allow_coherent_jumps = c.random_coherent.value_or(false);
    return random_protocol(rng, opts);
  }
  Protocol p;
  p.beta = beta_of(c);
  p.initial.energies = c.levels;
  EnergyLandscape current = p.initial;
  for (const auto& s : c.steps) {
    if (s.change) {
      EnergyLandscape target{s.energies};
      Matrix jump = s.theta ? sudden_quench_jump_matrix(*s.theta) : Matrix::identity(target.size());
      p.steps.emplace_back(HamiltonianChange{target, std::move(jump)});
      current = std::move(target);
    } else {
      p.steps.emplace_back(partial_swap(current, p.beta, s.p_swap));
    }
  }
  validate(p);
  return p;
}

DiagonalState initial_state(const RunConfig& c, const Protocol& p) {
  if (c.rho0) return DiagonalState{*c.rho0};
  return make_thermal_state(p.initial, p.beta).state;
}

WorkDistribution maybe_negate(WorkDistribution d, bool extracted) {
  if (!extracted) return d;
  for (auto& a : d.atoms) a.w = -a.w;
  std::reverse(d.atoms.begin(), d.atoms.end());
  return d;
}

std::string atoms_csv(const WorkDistribution& d) {
  std::string s = "w,p\n";
  for (const auto& a : d.atoms) s += fmt(a.w) + "," + fmt(a.p) + "\n";
  return s;
}

std::string atoms_json(const WorkDistribution& d) {
  ojson j;
  j["w"] = ojson::array();
  j["p"] = ojson::array();
  for (const auto& a : d.atoms) {
    j["w"].push_back(a.w);
    j["p"].push_back(a.p);
  }
  return j.dump(2) + "\n";
}

std::string bins_csv(const std::vector<double>& edges, const std::vector<double>& mass, bool extracted) {
  std::string s = "w_lo,w_hi,density\n";
  const std::size_t n = mass.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = extracted ? n - 1 - k : k;
    const double lo = extracted ? -edges[i + 1] : edges[i];
    const double hi = extracted ? -edges[i] : edges[i + 1];
    s += fmt(lo) + "," + fmt(hi) + "," + fmt(mass[i] / (edges[i + 1] - edges[i])) + "\n";
  }
  return s;
}

bool want_json(const RunConfig& c, const RunOptions& o) {
  return o.format.value_or(c.format.value_or("csv")) == "json";
}

ebox::Params ebox_params(const RunConfig& c) {
  ebox::Params p{*c.gamma0, *c.eps_c, beta_of(c)};
  ebox::validate(p);
  return p;
}

ebox::Ramp ebox_ramp(const RunConfig& c) {
  ebox::Ramp r;
  if (!c.ramp.empty()) {
    std::vector<ebox::Knot> k;
    for (const auto& s : c.ramp) k.push_back({s.t, s.eps});
    r = ebox::Ramp(std::move(k));
  } else {
    const std::string& shape = *c.ramp_shape;
    const double e0 = c.eps_start.value_or(0.0);
    const double tau = *c.tau;
    if (shape == "constant") r = ebox::Ramp::constant(c.eps_max.value_or(e0), tau);
    else if (shape == "linear") r = ebox::Ramp::linear(e0, *c.eps_max, tau);
    else if (shape == "up-down") r = ebox::Ramp({{0.0, e0}, {0.5 * tau, *c.eps_max}, {tau, e0}});
    else r = ebox::szilard_engine_ramp(*c.eps_max, tau);
  }
  if (c.direction && *c.direction == "reverse") r = r.reversed();
  return r;
}

DiagonalState ebox_state(const RunConfig& c, const ebox::Ramp& r, double beta) {
  if (c.rho0) return DiagonalState{*c.rho0};
  const double g1 = ebox::excited_fraction(r.eps0(), beta);
  return DiagonalState{{1.0 - g1, g1}};
}

std::vector<Artifact> run_discrete(const RunConfig& c, const RunOptions& o) {
  const std::uint64_t seed = seed_of(c, o);
  const Protocol p = build_protocol(c, seed);
  const double tol = c.bin_tolerance.value_or(kDefaultBinTolerance);
  EnumerationOptions eo;
  eo.cap = c.cap.value_or(kDefaultTrajectoryCap);

  if (c.mode == Mode::Enumerate) {
    const auto d = maybe_negate(work_distribution(p, initial_state(c, p), tol, eo), o.extracted);
    return {{"", want_json(c, o) ? atoms_json(d) : atoms_csv(d)}};
  }
  if (c.mode == Mode::Equality) {
    const DiagonalState rho0 = initial_state(c, p);
    const LevelPartition part = c.in_levels ? LevelPartition::from_in_levels(p.dim(), *c.in_levels)
                                            : LevelPartition::all(p.dim());
    const double eps = c.eps.value_or(0.0);
    const EqualityReport r = eps > 0.0 ? work_tail_equality_report(rho0, p, part, eps, tol, eo)
                                       : main_equality_report(rho0, p, part, tol, eo);
    ojson j;
    j["w0_in"] = r.w0_in;
    j["d_infinity"] = r.d_infinity_term;
    j["optimum"] = r.optimum_term;
    j["log1meps"] = r.log1meps_term;
    j["residual"] = r.residual;
    j["mild_assumption_ok"] = r.mild_assumption_ok;
    j["tail_bound"] = r.tail_bound;
    j["eps"] = r.eps;
    j["eps_effective"] = r.eps_effective;
    j["out_of_set_probability"] = r.out_of_set_probability;
    return {{"", j.dump(2) + "\n"}};
  }
  // Crooks: thermal starts in both directions.
  const auto g0 = make_thermal_state(p.initial, p.beta);
  const auto gf = make_thermal_state(p.final_landscape(), p.beta);
  const auto fwd = work_distribution(p, g0.state, tol, eo);
  const auto rev = work_distribution(reverse_protocol(p), gf.state, tol, eo);
  ojson j;
  j["residual"] = crooks_residual_log(fwd, rev, g0.log_z, gf.log_z, p.beta);
  j["jarzynski_residual"] = std::abs(jarzynski_average(fwd, p.beta) - std::exp(gf.log_z - g0.log_z));
  j["log_z0"] = g0.log_z;
  j["log_zf"] = gf.log_z;
  j["forward_atoms"] = fwd.atoms.size();
  return {{"", j.dump(2) + "\n"}};
}

std::vector<Artifact> run_ebox(const RunConfig& c, const RunOptions& o) {
  const ebox::Params params = ebox_params(c);
  if (c.mode == Mode::EboxSweep) {
    ebox::SweepOptions so;
    so.taus = c.taus;
    so.eps_list = c.eps_list;
    so.eps_max = c.eps_max.value_or(so.eps_max);
    so.n_traj = c.n_traj.value_or(so.n_traj);
    so.max_swap = c.max_swap.value_or(so.max_swap);
    so.seed = seed_of(c, o);
    so.threads = o.threads;
    std::string s = "speed,eps,w_eps,stderr\n";
    for (const auto& pt : ebox::ebox_sweep(so, params))
      s += fmt(pt.speed) + "," + fmt(pt.eps) + "," + fmt(pt.w_eps) + "," + fmt(pt.stderr) + "\n";
    return {{"", s}};
  }

  const ebox::Ramp ramp = ebox_ramp(c);
  const DiagonalState rho0 = ebox_state(c, ramp, params.beta);
  if (c.mode == Mode::EboxMc) {
    ebox::McOptions mo{*c.n_traj, *c.n_steps, seed_of(c, o), o.threads};
    auto dist = ebox::monte_carlo_work(ramp, rho0, mo, params);
    if (o.extracted)
      for (double& w : dist.samples) w = -w;
    if (c.w_bins) {
      const auto edges = ebox::WorkGrid{*c.w_lo, *c.w_hi, *c.w_bins}.edges();
      return {{"", bins_csv(edges, dist.histogram(edges), false)}};
    }
    const auto atoms = dist.atoms(c.bin_tolerance.value_or(kDefaultBinTolerance));
    return {{"", want_json(c, o) ? atoms_json(atoms) : atoms_csv(atoms)}};
  }
  if (c.mode == Mode::EboxSeries) {
    ebox::SeriesOptions so;
    so.j_max = *c.j_max;
    so.grid = {*c.w_lo, *c.w_hi, *c.w_bins};
    so.tolerance = c.series_tolerance.value_or(so.tolerance);
    const auto a = ebox::analytic_work_distribution(ramp, rho0, so, params);
    return {{"", bins_csv(a.edges, a.mass, o.extracted)},
            {"_atoms", atoms_csv(maybe_negate(a.atoms, o.extracted))}};
  }
  // ebox-charfn
  const std::size_t n = *c.n_steps;
  std::vector<double> z;
  for (double xi : c.xi) z.push_back(ebox::characteristic_function(xi, ramp, rho0, n, params));
  if (!want_json(c, o)) {
    std::string s = "xi,z\n";
    for (std::size_t i = 0; i < z.size(); ++i) s += fmt(c.xi[i]) + "," + fmt(z[i]) + "\n";
    return {{"", s}};
  }
  const auto m = ebox::mean_work(ramp, rho0, n, params, c.lambda_probe);
  ojson j;
  j["xi"] = c.xi;
  j["z"] = z;
  j["mean_work"] = m.mean;
  if (m.upper_bound) j["upper_bound"] = *m.upper_bound;
  return {{"", j.dump(2) + "\n"}};
}

std::string artifact_path(const std::string& out, const std::string& suffix) {
  if (suffix.empty()) return out;
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + suffix;
  return out.substr(0, dot) + suffix + out.substr(dot);
}

}  // namespace

std::vector<Artifact> execute(const RunConfig& config, const RunOptions& options) {
  if (options.format && *options.format != "csv" && *options.format != "json")
    fail(ErrorKind::Config, "'--format': expected csv or json");
  switch (config.mode) {
    case Mode::Enumerate:
    case Mode::Equality:
    case Mode::Crooks:
      return run_discrete(config, options);
    default:
      return run_ebox(config, options);
  }
}

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 4;
  switch (err->kind()) {
    case ErrorKind::Config:
    case ErrorKind::InvalidInput: return 2;
    case ErrorKind::ResourceLimit: return 3;
    default: return 4;
  }
}

int run_file(const std::string& config_path, const RunOptions& options) {
  try {
    std::ifstream in(config_path);
    if (!in) fail(ErrorKind::Config, "cannot read config file '" + config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const RunConfig config = parse_config(ss.str());
    const auto artifacts = execute(config, options);
    const auto out = options.out ? options.out : config.output;
    for (const auto& a : artifacts) {
      if (!out) {
        if (a.suffix.empty()) std::cout << a.content;
        continue;
      }
      const std::string path = artifact_path(*out, a.suffix);
      std::ofstream f(path, std::ios::binary);
      if (!f) fail(ErrorKind::Config, "cannot write output file '" + path + "'");
      f << a.content;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace wcw::cli
