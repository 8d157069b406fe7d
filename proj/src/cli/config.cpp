#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "wcw/config.hpp"
#include "wcw/error.hpp"

namespace wcw::cli {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorKind::Config, "'" + key + "': " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '[' || c == ']') c = ' ';
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

bool parse_plain(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e && std::isfinite(v);
}

// Accepts decimal numbers and multiples of pi such as "pi/4" or "0.5*pi".
double number(const std::string& key, const std::string& s) {
  double v = 0.0;
  if (parse_plain(s, v)) return v;
  const auto pos = s.find("pi");
  if (pos != std::string::npos) {
    double mul = 1.0;
    double div = 1.0;
    std::string head = s.substr(0, pos);
    std::string tail = s.substr(pos + 2);
    if (head == "-") {
      mul = -1.0;
    } else if (!head.empty()) {
      if (head.back() != '*' || !parse_plain(head.substr(0, head.size() - 1), mul)) bad(key, "expected a number, got '" + s + "'");
    }
    if (!tail.empty()) {
      if (tail.front() != '/' || !parse_plain(tail.substr(1), div) || div == 0.0) bad(key, "expected a number, got '" + s + "'");
    }
    return mul * std::numbers::pi / div;
  }
  bad(key, "expected a number, got '" + s + "'");
}

std::size_t count(const std::string& key, const std::string& s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad(key, "expected a non-negative integer, got '" + s + "'");
  return v;
}

std::uint64_t u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad(key, "expected an unsigned 64-bit integer, got '" + s + "'");
  return v;
}

std::vector<double> numbers(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& t : tokens(s)) out.push_back(number(key, t));
  return out;
}

double single_number(const std::string& key, const std::string& s) {
  const auto t = tokens(s);
  if (t.size() != 1) bad(key, "expected one number");
  return number(key, t[0]);
}

std::size_t single_count(const std::string& key, const std::string& s) {
  const auto t = tokens(s);
  if (t.size() != 1) bad(key, "expected one integer");
  return count(key, t[0]);
}

std::string word(const std::string& key, const std::string& s, std::initializer_list<const char*> allowed) {
  const std::string v = trim(s);
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    list += list.empty() ? a : std::string(", ") + a;
  }
  bad(key, "expected one of {" + list + "}, got '" + v + "'");
}

Mode parse_mode(const std::string& s) {
  static const std::map<std::string, Mode> modes = {
      {"enumerate", Mode::Enumerate},   {"equality", Mode::Equality},       {"crooks", Mode::Crooks},
      {"ebox-mc", Mode::EboxMc},        {"ebox-series", Mode::EboxSeries}, {"ebox-charfn", Mode::EboxCharfn},
      {"ebox-sweep", Mode::EboxSweep}};
  const auto it = modes.find(trim(s));
  if (it == modes.end())
    bad("mode", "expected one of {enumerate, equality, crooks, ebox-mc, ebox-series, ebox-charfn, ebox-sweep}");
  return it->second;
}

StepSpec parse_step(const std::string& s) {
  auto t = tokens(s);
  if (t.empty()) bad("step", "expected 'change E...' or 'thermalize P'");
  StepSpec step;
  if (t[0] == "change") {
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i].rfind("theta=", 0) == 0) {
        if (step.theta) bad("step", "theta given twice");
        step.theta = number("step", t[i].substr(6));
      } else {
        step.energies.push_back(number("step", t[i]));
      }
    }
    if (step.energies.empty()) bad("step", "change needs target energies");
  } else if (t[0] == "thermalize") {
    step.change = false;
    if (t.size() != 2) bad("step", "thermalize takes exactly one swap probability");
    step.p_swap = number("step", t[1]);
    if (step.p_swap < 0.0 || step.p_swap > 1.0) bad("step", "swap probability must lie in [0,1]");
  } else {
    bad("step", "expected 'change' or 'thermalize', got '" + t[0] + "'");
  }
  return step;
}

std::vector<KnotSpec> parse_ramp(const std::string& s) {
  std::vector<KnotSpec> out;
  for (const auto& t : tokens(s)) {
    const auto c = t.find(':');
    if (c == std::string::npos) bad("ramp", "knots are written t:eps, got '" + t + "'");
    out.push_back({number("ramp", t.substr(0, c)), number("ramp", t.substr(c + 1))});
  }
  if (out.size() < 2) bad("ramp", "needs at least two knots");
  return out;
}

bool is_discrete(Mode m) { return m == Mode::Enumerate || m == Mode::Equality || m == Mode::Crooks; }

const std::set<std::string>& keys_for(Mode m) {
  static const std::set<std::string> common = {"mode", "energy_units", "beta", "format", "output", "seed"};
  static const std::set<std::string> discrete = {"protocol",     "levels",        "step",          "random_dim",
                                                 "random_steps", "random_span",   "random_coherent", "rho0",
                                                 "bin_tolerance", "cap"};
  static const std::set<std::string> ebox = {"gamma0", "eps_c", "ramp", "ramp_shape", "eps_start",
                                             "eps_max", "tau", "direction", "rho0"};
  static std::map<Mode, std::set<std::string>> table;
  if (table.empty()) {
    auto add = [&](Mode mode, const std::set<std::string>& base, std::initializer_list<const char*> extra) {
      auto& s = table[mode];
      s.insert(common.begin(), common.end());
      s.insert(base.begin(), base.end());
      for (const char* k : extra) s.insert(k);
    };
    add(Mode::Enumerate, discrete, {});
    add(Mode::Equality, discrete, {"in_levels", "eps"});
    add(Mode::Crooks, discrete, {});
    add(Mode::EboxMc, ebox, {"n_traj", "n_steps", "w_lo", "w_hi", "w_bins", "bin_tolerance"});
    add(Mode::EboxSeries, ebox, {"j_max", "w_lo", "w_hi", "w_bins", "series_tolerance"});
    add(Mode::EboxCharfn, ebox, {"xi", "n_steps", "lambda_probe"});
    add(Mode::EboxSweep, {"gamma0", "eps_c", "eps_max", "taus", "eps_list", "n_traj", "max_swap"}, {});
  }
  return table.at(m);
}

void check_range(const std::string& key, bool ok, const std::string& what) {
  if (!ok) bad(key, what);
}

void validate_config(const RunConfig& c, const std::set<std::string>& seen) {
  const bool kt = c.energy_units && *c.energy_units == "kT";
  if (kt) {
    if (c.beta && *c.beta != 1.0) bad("beta", "energy_units = kT fixes beta = 1");
  } else if (!c.beta) {
    bad("beta", "required unless energy_units = kT");
  }
  if (c.beta) check_range("beta", *c.beta > 0.0, "must be positive");
  if (c.format && c.mode == Mode::Crooks && *c.format != "json") bad("format", "crooks mode writes json");
  if (c.format && c.mode == Mode::Equality && *c.format != "json") bad("format", "equality mode writes json");

  if (is_discrete(c.mode)) {
    const bool random = c.protocol && *c.protocol == "random";
    std::size_t d = 0;
    if (random) {
      for (const char* k : {"levels", "step"})
        if (seen.count(k)) bad(k, "not used with protocol = random");
      if (!c.random_dim) bad("random_dim", "required with protocol = random");
      d = *c.random_dim;
      check_range("random_dim", d >= 1 && d <= 8, "must lie in [1, 8]");
      if (c.random_steps) check_range("random_steps", *c.random_steps <= 16, "must lie in [0, 16]");
      if (c.random_span) check_range("random_span", *c.random_span > 0.0, "must be positive");
    } else {
      for (const char* k : {"random_dim", "random_steps", "random_span", "random_coherent"})
        if (seen.count(k)) bad(k, "only used with protocol = random");
      if (c.levels.empty()) bad("levels", "required");
      d = c.levels.size();
      for (const auto& s : c.steps) {
        if (!s.change) continue;
        if (s.energies.size() != d) bad("step", "change needs " + std::to_string(d) + " energies");
        if (s.theta && d != 2) bad("step", "theta needs a two-level system");
      }
    }
    if (c.mode == Mode::Crooks) {
      if (c.rho0) bad("rho0", "crooks mode always starts from thermal states");
    } else if (!c.rho0 && !c.rho0_thermal) {
      bad("rho0", "required");
    }
    if (c.rho0) {
      if (c.rho0->size() != d) bad("rho0", "needs " + std::to_string(d) + " entries");
      double s = 0.0;
      for (double p : *c.rho0) {
        check_range("rho0", p >= 0.0, "entries must be non-negative");
        s += p;
      }
      check_range("rho0", std::abs(s - 1.0) <= 1e-9, "entries must sum to 1");
    }
    if (c.in_levels) {
      if (c.in_levels->empty()) bad("in_levels", "must not be empty");
      for (std::size_t i : *c.in_levels) check_range("in_levels", i < d, "index out of range");
    }
    if (c.eps) check_range("eps", *c.eps >= 0.0 && *c.eps < 1.0, "must lie in [0,1)");
    if (c.bin_tolerance) check_range("bin_tolerance", *c.bin_tolerance >= 0.0, "must be non-negative");
    if (c.cap) check_range("cap", *c.cap >= 1, "must be positive");
    return;
  }

  if (!c.gamma0) bad("gamma0", "required");
  check_range("gamma0", *c.gamma0 >= 0.0, "must be non-negative");
  if (!c.eps_c) bad("eps_c", "required");
  check_range("eps_c", *c.eps_c > 0.0, "must be positive");

  if (c.mode == Mode::EboxSweep) {
    if (c.taus.empty()) bad("taus", "required");
    for (double t : c.taus) check_range("taus", t > 0.0, "durations must be positive");
    if (c.eps_list.empty()) bad("eps_list", "required");
    for (double e : c.eps_list) check_range("eps_list", e >= 0.0 && e < 1.0, "values must lie in [0,1)");
    if (c.eps_max) check_range("eps_max", *c.eps_max > 0.0, "must be positive");
    if (c.max_swap) check_range("max_swap", *c.max_swap > 0.0 && *c.max_swap <= 1.0, "must lie in (0,1]");
    if (c.n_traj) check_range("n_traj", *c.n_traj >= 1, "must be positive");
    if (c.gamma0 == 0.0) bad("gamma0", "must be positive for a sweep");
    return;
  }

  if (!c.ramp.empty() && c.ramp_shape) bad("ramp_shape", "give either ramp or ramp_shape");
  if (c.ramp.empty()) {
    if (!c.ramp_shape) bad("ramp", "required (or ramp_shape)");
    if (!c.tau) bad("tau", "required with ramp_shape");
    check_range("tau", *c.tau >= 0.0, "must be non-negative");
    if (*c.ramp_shape != "constant" && !c.eps_max) bad("eps_max", "required with ramp_shape");
    if (*c.ramp_shape == "szilard-engine") check_range("eps_max", *c.eps_max > 0.0 && *c.tau > 0.0, "needs eps_max > 0 and tau > 0");
  } else {
    for (const char* k : {"eps_start", "eps_max", "tau"})
      if (seen.count(k)) bad(k, "only used with ramp_shape");
    check_range("ramp", c.ramp.front().t == 0.0, "first knot must be at t = 0");
    for (std::size_t i = 1; i < c.ramp.size(); ++i)
      check_range("ramp", c.ramp[i].t >= c.ramp[i - 1].t, "knot times must be non-decreasing");
  }
  if (c.rho0) {
    if (c.rho0->size() != 2) bad("rho0", "needs 2 entries");
    check_range("rho0", (*c.rho0)[0] >= 0.0 && (*c.rho0)[1] >= 0.0, "entries must be non-negative");
    check_range("rho0", std::abs((*c.rho0)[0] + (*c.rho0)[1] - 1.0) <= 1e-9, "entries must sum to 1");
  }

  switch (c.mode) {
    case Mode::EboxMc:
      if (!c.n_traj) bad("n_traj", "required");
      check_range("n_traj", *c.n_traj >= 1, "must be positive");
      if (!c.n_steps) bad("n_steps", "required");
      check_range("n_steps", *c.n_steps >= 1, "must be positive");
      if (c.w_bins || c.w_lo || c.w_hi) {
        if (!c.w_bins || !c.w_lo || !c.w_hi) bad("w_bins", "w_lo, w_hi and w_bins go together");
        check_range("w_hi", *c.w_hi > *c.w_lo, "must exceed w_lo");
        check_range("w_bins", *c.w_bins >= 1, "must be positive");
      }
      break;
    case Mode::EboxSeries:
      if (!c.j_max) bad("j_max", "required");
      check_range("j_max", *c.j_max <= 10, "must lie in [0, 10]");
      if (!c.w_lo) bad("w_lo", "required");
      if (!c.w_hi) bad("w_hi", "required");
      if (!c.w_bins) bad("w_bins", "required");
      check_range("w_hi", *c.w_hi > *c.w_lo, "must exceed w_lo");
      check_range("w_bins", *c.w_bins >= 1, "must be positive");
      if (c.series_tolerance) check_range("series_tolerance", *c.series_tolerance > 0.0, "must be positive");
      break;
    case Mode::EboxCharfn:
      if (c.xi.empty()) bad("xi", "required");
      if (!c.n_steps) bad("n_steps", "required");
      check_range("n_steps", *c.n_steps >= 1, "must be positive");
      if (c.lambda_probe) check_range("lambda_probe", *c.lambda_probe > 0.0, "must be positive");
      break;
    default:
      break;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Enumerate: return "enumerate";
    case Mode::Equality: return "equality";
    case Mode::Crooks: return "crooks";
    case Mode::EboxMc: return "ebox-mc";
    case Mode::EboxSeries: return "ebox-series";
    case Mode::EboxCharfn: return "ebox-charfn";
    case Mode::EboxSweep: return "ebox-sweep";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  RunConfig c;
  const auto mode_it = std::find_if(entries.begin(), entries.end(), [](const auto& e) { return e.first == "mode"; });
  if (mode_it == entries.end()) bad("mode", "required");
  c.mode = parse_mode(mode_it->second);
  const auto& allowed = keys_for(c.mode);

  std::set<std::string> seen;
  for (const auto& [key, value] : entries) {
    if (!allowed.count(key)) {
      static const std::set<std::string> all_keys = [] {
        std::set<std::string> s;
        for (Mode m : {Mode::Enumerate, Mode::Equality, Mode::Crooks, Mode::EboxMc, Mode::EboxSeries,
                       Mode::EboxCharfn, Mode::EboxSweep})
          for (const auto& k : keys_for(m)) s.insert(k);
        return s;
      }();
      if (all_keys.count(key)) bad(key, std::string("not used by mode ") + to_string(c.mode));
      bad(key, "unknown key");
    }
    if (key != "step" && !seen.insert(key).second) bad(key, "given more than once");
    seen.insert(key);

    if (key == "mode") continue;
    if (key == "energy_units") c.energy_units = word(key, value, {"kT", "explicit"});
    else if (key == "beta") c.beta = single_number(key, value);
    else if (key == "format") c.format = word(key, value, {"csv", "json"});
    else if (key == "output") {
      if (value.empty()) bad(key, "must not be empty");
      c.output = value;
    } else if (key == "seed") {
      const auto t = tokens(value);
      if (t.size() != 1) bad(key, "expected one integer");
      c.seed = u64(key, t[0]);
    } else if (key == "protocol") c.protocol = word(key, value, {"explicit", "random"});
    else if (key == "levels") c.levels = numbers(key, value);
    else if (key == "step") c.steps.push_back(parse_step(value));
    else if (key == "random_dim") c.random_dim = single_count(key, value);
    else if (key == "random_steps") c.random_steps = single_count(key, value);
    else if (key == "random_span") c.random_span = single_number(key, value);
    else if (key == "random_coherent") c.random_coherent = word(key, value, {"true", "false"}) == "true";
    else if (key == "rho0") {
      if (trim(value) == "thermal") c.rho0_thermal = true;
      else c.rho0 = numbers(key, value);
    } else if (key == "in_levels") {
      std::vector<std::size_t> v;
      for (const auto& t : tokens(value)) v.push_back(count(key, t));
      c.in_levels = std::move(v);
    } else if (key == "eps") c.eps = single_number(key, value);
    else if (key == "bin_tolerance") c.bin_tolerance = single_number(key, value);
    else if (key == "cap") c.cap = single_count(key, value);
    else if (key == "gamma0") c.gamma0 = single_number(key, value);
    else if (key == "eps_c") c.eps_c = single_number(key, value);
    else if (key == "ramp") c.ramp = parse_ramp(value);
    else if (key == "ramp_shape") c.ramp_shape = word(key, value, {"linear", "up-down", "szilard-engine", "constant"});
    else if (key == "eps_start") c.eps_start = single_number(key, value);
    else if (key == "eps_max") c.eps_max = single_number(key, value);
    else if (key == "tau") c.tau = single_number(key, value);
    else if (key == "direction") c.direction = word(key, value, {"forward", "reverse"});
    else if (key == "n_traj") c.n_traj = single_count(key, value);
    else if (key == "n_steps") c.n_steps = single_count(key, value);
    else if (key == "j_max") c.j_max = single_count(key, value);
    else if (key == "w_lo") c.w_lo = single_number(key, value);
    else if (key == "w_hi") c.w_hi = single_number(key, value);
    else if (key == "w_bins") c.w_bins = single_count(key, value);
    else if (key == "series_tolerance") c.series_tolerance = single_number(key, value);
    else if (key == "xi") c.xi = numbers(key, value);
    else if (key == "lambda_probe") c.lambda_probe = single_number(key, value);
    else if (key == "taus") c.taus = numbers(key, value);
    else if (key == "eps_list") c.eps_list = numbers(key, value);
    else if (key == "max_swap") c.max_swap = single_number(key, value);
  }
  validate_config(c, seen);
  return c;
}

std::string to_text(const RunConfig& c) {
  std::ostringstream o;
  auto put = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  auto num = [&](const char* k, const std::optional<double>& v) {
    if (v) put(k, fmt(*v));
  };
  auto cnt = [&](const char* k, const std::optional<std::size_t>& v) {
    if (v) put(k, std::to_string(*v));
  };
  auto str = [&](const char* k, const std::optional<std::string>& v) {
    if (v) put(k, *v);
  };
  put("mode", to_string(c.mode));
  str("energy_units", c.energy_units);
  num("beta", c.beta);
  str("format", c.format);
  str("output", c.output);
  if (c.seed) put("seed", std::to_string(*c.seed));
  str("protocol", c.protocol);
  if (!c.levels.empty()) put("levels", join(c.levels));
  for (const auto& s : c.steps) {
    if (s.change) put("step", "change " + join(s.energies) + (s.theta ? " theta=" + fmt(*s.theta) : ""));
    else put("step", "thermalize " + fmt(s.p_swap));
  }
  cnt("random_dim", c.random_dim);
  cnt("random_steps", c.random_steps);
  num("random_span", c.random_span);
  if (c.random_coherent) put("random_coherent", *c.random_coherent ? "true" : "false");
  if (c.rho0_thermal) put("rho0", "thermal");
  else if (c.rho0) put("rho0", join(*c.rho0));
  if (c.in_levels) {
    std::string s;
    for (std::size_t i : *c.in_levels) s += (s.empty() ? "" : " ") + std::to_string(i);
    put("in_levels", s);
  }
  num("eps", c.eps);
  num("bin_tolerance", c.bin_tolerance);
  cnt("cap", c.cap);
  num("gamma0", c.gamma0);
  num("eps_c", c.eps_c);
  if (!c.ramp.empty()) {
    std::string s;
    for (const auto& k : c.ramp) s += (s.empty() ? "" : " ") + fmt(k.t) + ":" + fmt(k.eps);
    put("ramp", s);
  }
  str("ramp_shape", c.ramp_shape);
  num("eps_start", c.eps_start);
  num("eps_max", c.eps_max);
  num("tau", c.tau);
  str("direction", c.direction);
  cnt("n_traj", c.n_traj);
  cnt("n_steps", c.n_steps);
  cnt("j_max", c.j_max);
  num("w_lo", c.w_lo);
  num("w_hi", c.w_hi);
  cnt("w_bins", c.w_bins);
  num("series_tolerance", c.series_tolerance);
  if (!c.xi.empty()) put("xi", join(c.xi));
  num("lambda_probe", c.lambda_probe);
  if (!c.taus.empty()) put("taus", join(c.taus));
  if (!c.eps_list.empty()) put("eps_list", join(c.eps_list));
  num("max_swap", c.max_swap);
  return o.str();
}

}  // namespace wcw::cli
