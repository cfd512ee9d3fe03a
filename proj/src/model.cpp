#include "cns/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cns/diagnostics.hpp"
#include "cns/kernels.hpp"

namespace cns {

// ---------------------------------------------------------------------
// regularization
// ---------------------------------------------------------------------

double f_eps(double s, double eps) {
  if (eps == 0.0) return s;
  return std::log1p(eps * s) / eps;
}

double f_eps_prime(double s, double eps) {
  if (eps == 0.0) return 1.0;
  return 1.0 / (1.0 + eps * s);
}

// ---------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& k, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("config key '" + k + "': bad number '" + v +
                                "'");
  return x;
}

long long parse_int(const std::string& k, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("config key '" + k + "': bad integer '" + v +
                                "'");
  return x;
}

struct KeyDef {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, KeyDef>& key_table() {
  auto d = [](double RunConfig::*m) {
    return KeyDef{[m](RunConfig& c, const std::string& k,
                      const std::string& v) { c.*m = parse_double(k, v); },
                  [m](const RunConfig& c) { return fmt_g(c.*m); }};
  };
  auto i = [](int RunConfig::*m) {
    return KeyDef{[m](RunConfig& c, const std::string& k, const std::string& v) {
                    c.*m = static_cast<int>(parse_int(k, v));
                  },
                  [m](const RunConfig& c) { return std::to_string(c.*m); }};
  };
  auto s = [](std::string RunConfig::*m) {
    return KeyDef{[m](RunConfig& c, const std::string&,
                      const std::string& v) { c.*m = v; },
                  [m](const RunConfig& c) { return c.*m; }};
  };
  static const std::map<std::string, KeyDef> table = {
      {"dims", i(&RunConfig::dims)},
      {"n", i(&RunConfig::n)},
      {"box", d(&RunConfig::box)},
      {"eps", d(&RunConfig::eps)},
      {"mu", d(&RunConfig::mu)},
      {"kappa", d(&RunConfig::kappa)},
      {"dt", d(&RunConfig::dt)},
      {"t_end", d(&RunConfig::t_end)},
      {"sample_stride", i(&RunConfig::sample_stride)},
      {"seed",
       KeyDef{[](RunConfig& c, const std::string& k, const std::string& v) {
                c.seed = static_cast<std::uint64_t>(parse_int(k, v));
              },
              [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"n0_preset", s(&RunConfig::n0_preset)},
      {"n0_value", d(&RunConfig::n0_value)},
      {"n0_mass", d(&RunConfig::n0_mass)},
      {"n0_width", d(&RunConfig::n0_width)},
      {"c0_preset", s(&RunConfig::c0_preset)},
      {"c0_value", d(&RunConfig::c0_value)},
      {"c0_amplitude", d(&RunConfig::c0_amplitude)},
      {"c0_width", d(&RunConfig::c0_width)},
      {"u0_preset", s(&RunConfig::u0_preset)},
      {"u0_amplitude", d(&RunConfig::u0_amplitude)},
      {"phi_preset", s(&RunConfig::phi_preset)},
      {"phi_amplitude", d(&RunConfig::phi_amplitude)},
      {"phi_axis", i(&RunConfig::phi_axis)},
      {"record_cross_terms",
       KeyDef{[](RunConfig& c, const std::string& k, const std::string& v) {
                c.record_cross_terms = parse_int(k, v) != 0;
              },
              [](const RunConfig& c) {
                return std::string(c.record_cross_terms ? "1" : "0");
              }}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& val) {
  const auto& table = key_table();
  const std::string canon = key == "grid" ? "n" : key;  // resolution alias
  auto it = table.find(canon);
  if (it == table.end())
    throw std::invalid_argument("unknown config key '" + key + "'");
  it->second.set(cfg, canon, val);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be key=value, got '" + kv + "'");
  set_key(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void validate(const RunConfig& cfg) {
  validate(Grid{cfg.dims, cfg.n, cfg.box});
  if (cfg.n < 16)
    throw std::invalid_argument(
        "grid too coarse for a run: n must be >= 16 (the 2/3-rule mask keeps "
        "too few modes below that)");
  if (!(cfg.eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (!(cfg.mu > 0.0 && cfg.mu <= 4.0 / 3.0))
    throw std::invalid_argument("mu must lie in (0, 4/3]");
  if (!(cfg.kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
  if (cfg.sample_stride < 1)
    throw std::invalid_argument("sample_stride must be >= 1");
  auto one_of = [](const std::string& v, std::initializer_list<const char*> set,
                   const char* what) {
    for (const char* s : set)
      if (v == s) return;
    throw std::invalid_argument(std::string("bad ") + what + " preset '" + v +
                                "'");
  };
  one_of(cfg.n0_preset, {"uniform", "gaussian", "random"}, "n0");
  one_of(cfg.c0_preset, {"uniform", "gaussian"}, "c0");
  one_of(cfg.u0_preset, {"zero", "taylor-green", "random"}, "u0");
  one_of(cfg.phi_preset, {"zero", "sine"}, "phi");
  if (cfg.phi_axis < 0 || cfg.phi_axis >= cfg.dims)
    throw std::invalid_argument("phi_axis out of range");
  if (cfg.n0_preset == "uniform" && cfg.n0_value < 0.0)
    throw std::invalid_argument("n0_value must be >= 0");
  if (cfg.n0_preset == "gaussian" && !(cfg.n0_mass > 0.0))
    throw std::invalid_argument("n0_mass must be > 0");
  if (!(cfg.c0_value > 0.0)) throw std::invalid_argument("c0_value must be > 0");
}

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, def] : key_table())  // std::map: sorted keys
    out += key + "=" + def.get(cfg) + "\n";
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canon = canonical_config(cfg);
  std::uint64_t h = 1469598103934665603ull;  // fnv-1a 64
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------
// initial data
// ---------------------------------------------------------------------

namespace {

// periodic bump: product over axes of exp(w (cos(2 pi (x - L/2)/L) - 1)),
// smooth, strictly positive, spectrally localized for moderate w
ScalarField periodic_bump(const Grid& g, double w) {
  ScalarField f(g, Rep::physical);
  const double ku = kTwoPi / g.box;
  const double x0 = 0.5 * g.box;
  const double h = g.spacing();
  auto bump1 = [&](double x) { return std::exp(w * (std::cos(ku * (x - x0)) - 1.0)); };
  std::size_t idx = 0;
  if (g.dims == 2) {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j, ++idx)
        f.phys[idx] = bump1(i * h) * bump1(j * h);
  } else {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k, ++idx)
          f.phys[idx] = bump1(i * h) * bump1(j * h) * bump1(k * h);
  }
  return f;
}

// low-mode random scalar: sum over |m|_inf <= 3 of decaying random cosines
ScalarField random_smooth(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  ScalarField f(g, Rep::physical);
  const double ku = kTwoPi / g.box;
  const double h = g.spacing();
  struct Mode {
    double m[3];
    double a, p;
  };
  std::vector<Mode> modes;
  const int mmax = 3;
  int m2 = 0;
  for (int m0 = 0; m0 <= mmax; ++m0)
    for (int m1 = -mmax; m1 <= mmax; ++m1)
      for (m2 = (g.dims == 3 ? -mmax : 0); m2 <= (g.dims == 3 ? mmax : 0);
           ++m2) {
        if (m0 == 0 && m1 == 0 && m2 == 0) continue;
        const double k2 = double(m0 * m0 + m1 * m1 + m2 * m2);
        modes.push_back(
            {{double(m0), double(m1), double(m2)}, amp(rng) / (1.0 + k2),
             phase(rng)});
      }
  std::size_t idx = 0;
  auto eval = [&](double x, double y, double z) {
    double s = 0.0;
    for (const Mode& m : modes)
      s += m.a * std::cos(ku * (m.m[0] * x + m.m[1] * y + m.m[2] * z) + m.p);
    return s;
  };
  if (g.dims == 2) {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j, ++idx) f.phys[idx] = eval(i * h, j * h, 0);
  } else {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k, ++idx)
          f.phys[idx] = eval(i * h, j * h, k * h);
  }
  return f;
}

}  // namespace

SimulationState make_initial_data(const RunConfig& cfg) {
  validate(cfg);
  const Grid g{cfg.dims, cfg.n, cfg.box};
  std::mt19937_64 rng(cfg.seed);
  const double h = g.spacing();
  const double ku = kTwoPi / g.box;

  // density
  ScalarField n0(g, Rep::physical);
  if (cfg.n0_preset == "uniform") {
    for (auto& x : n0.phys) x = cfg.n0_value;
  } else if (cfg.n0_preset == "gaussian") {
    n0 = periodic_bump(g, cfg.n0_width);
    const double m = integral(n0);
    kernels::scale(cfg.n0_mass / m, n0.phys.data(), n0.phys.data(),
                   n0.phys.size());
  } else {  // random, positive by construction
    ScalarField r = random_smooth(g, rng);
    const double mr = std::max(max_abs(r), 1e-30);
    n0 = ScalarField(g, Rep::physical);
    for (std::size_t i = 0; i < n0.phys.size(); ++i)
      n0.phys[i] = cfg.n0_value * (1.0 + 0.45 * r.phys[i] / mr);
  }

  // chemoattractant
  ScalarField c0(g, Rep::physical);
  if (cfg.c0_preset == "uniform") {
    for (auto& x : c0.phys) x = cfg.c0_value;
  } else {
    ScalarField b = periodic_bump(g, cfg.c0_width);
    const double bm = max_val(b);
    for (std::size_t i = 0; i < c0.phys.size(); ++i)
      c0.phys[i] = cfg.c0_value + cfg.c0_amplitude * b.phys[i] / bm;
  }

  // velocity
  VectorField u0 = make_vector_field(g, Rep::physical);
  if (cfg.u0_preset == "taylor-green") {
    const double a = cfg.u0_amplitude;
    std::size_t idx = 0;
    if (g.dims == 2) {
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j, ++idx) {
          const double x = i * h, y = j * h;
          u0.comp[0].phys[idx] = a * std::sin(ku * x) * std::cos(ku * y);
          u0.comp[1].phys[idx] = -a * std::cos(ku * x) * std::sin(ku * y);
        }
    } else {
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
          for (int k = 0; k < g.n; ++k, ++idx) {
            const double x = i * h, y = j * h, z = k * h;
            u0.comp[0].phys[idx] =
                a * std::sin(ku * x) * std::cos(ku * y) * std::cos(ku * z);
            u0.comp[1].phys[idx] =
                -a * std::cos(ku * x) * std::sin(ku * y) * std::cos(ku * z);
          }
    }
  } else if (cfg.u0_preset == "random") {
    for (int d = 0; d < g.dims; ++d) u0.comp[d] = random_smooth(g, rng);
  }
  // (zero preset: leave as zeros)

  SimulationState st;
  st.eps = cfg.eps;
  st.t = 0.0;
  st.n = dealias(n0);
  st.c = dealias(c0);
  SolenoidalField u = leray_project(u0);
  for (auto& comp : u.v.comp) dealias_inplace(comp);
  if (cfg.u0_preset == "random" && cfg.u0_amplitude > 0.0) {
    const double m = max_abs(u.v);
    if (m > 0.0)
      for (auto& comp : u.v.comp) {
        kernels::scale(cfg.u0_amplitude / m,
                       reinterpret_cast<double*>(comp.spec.data()),
                       reinterpret_cast<double*>(comp.spec.data()),
                       2 * comp.spec.size());
      }
  }
  st.u = std::move(u);
  return st;
}

VectorField make_grad_phi(const RunConfig& cfg) {
  const Grid g{cfg.dims, cfg.n, cfg.box};
  VectorField gp = make_vector_field(g, Rep::physical);
  if (cfg.phi_preset == "zero" || cfg.phi_amplitude == 0.0) return gp;
  // phi = A sin(2 pi x_axis / L): periodic stand-in for a linear potential
  const double ku = kTwoPi / g.box;
  const double h = g.spacing();
  const int ax = cfg.phi_axis;
  std::size_t idx = 0;
  if (g.dims == 2) {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j, ++idx) {
        const double xs[2] = {i * h, j * h};
        gp.comp[ax].phys[idx] = cfg.phi_amplitude * ku * std::cos(ku * xs[ax]);
      }
  } else {
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k, ++idx) {
          const double xs[3] = {i * h, j * h, k * h};
          gp.comp[ax].phys[idx] =
              cfg.phi_amplitude * ku * std::cos(ku * xs[ax]);
        }
  }
  return gp;
}

// ---------------------------------------------------------------------
// nonlinear terms
// ---------------------------------------------------------------------

namespace {

// out += i * k_d * src  (spectral derivative accumulate along axis d)
void add_ik(const Grid& g, int axis, const ScalarField& src, ScalarField& out,
            double sign) {
  const double ku = kTwoPi / g.box;
  const int n = g.n;
  for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
    const int mm[3] = {m0, m1, m2};
    const int m = mm[axis];
    const double k = std::abs(m) == n / 2 ? 0.0 : ku * m;
    const std::complex<double> z = src.spec[idx];
    out.spec[idx] += std::complex<double>(-sign * k * z.imag(),
                                          sign * k * z.real());
  });
}

// physical product helper: r2c of a raw buffer
ScalarField spectral_of(const Grid& g, const std::vector<double>& buf) {
  ScalarField tmp(g, Rep::physical);
  tmp.phys = buf;
  return to_spectral(tmp);
}

// Shared nonlinear evaluation.  Inputs are spectral; yus is the already
// Yosida-smoothed velocity.  Outputs are spectral and dealiased, diffusion
// excluded (the stepper applies it through the integrating factor).
void eval_nonlinear(const Grid& g, double eps, const VectorField& gphi_phys,
                    const ScalarField& ns, const ScalarField& cs,
                    const VectorField& us, const VectorField& yus,
                    ScalarField& out_n, ScalarField& out_c,
                    VectorField& out_u) {
  namespace k = kernels;
  const std::size_t np = g.points();

  const ScalarField n = to_physical(ns);
  const ScalarField c = to_physical(cs);
  const VectorField u = to_physical(us);
  const VectorField gc = to_physical(grad(cs));
  const VectorField yu = to_physical(yus);

  std::vector<double> fp(np), fn(np), tmp(np);
  for (std::size_t i = 0; i < np; ++i) {
    fp[i] = f_eps_prime(n.phys[i], eps);
    fn[i] = f_eps(n.phys[i], eps);
  }

  // density: -div(n (F'(n) grad c + u)), divergence form (mass-exact)
  out_n = ScalarField(g, Rep::spectral);
  for (int d = 0; d < g.dims; ++d) {
    k::mul(fp.data(), gc.comp[d].phys.data(), tmp.data(), np);
    k::axpby(1.0, tmp.data(), 1.0, u.comp[d].phys.data(), tmp.data(), np);
    k::mul(n.phys.data(), tmp.data(), tmp.data(), np);
    const ScalarField flux = spectral_of(g, tmp);
    add_ik(g, d, flux, out_n, -1.0);
  }
  dealias_inplace(out_n);

  // chemoattractant: -(u . grad c + F(n) c)
  k::mul(fn.data(), c.phys.data(), tmp.data(), np);
  for (int d = 0; d < g.dims; ++d)
    k::mul_acc(u.comp[d].phys.data(), gc.comp[d].phys.data(), tmp.data(), np);
  out_c = spectral_of(g, tmp);
  k::scale(-1.0, reinterpret_cast<double*>(out_c.spec.data()),
           reinterpret_cast<double*>(out_c.spec.data()), 2 * out_c.spec.size());
  dealias_inplace(out_c);

  // velocity: P[-div(Yu (x) u) + n grad phi]; div(Yu (x) u) = (Yu.grad)u
  // because the smoothed drift stays divergence-free
  out_u = make_vector_field(g, Rep::spectral);
  for (int j = 0; j < g.dims; ++j) {
    for (int i = 0; i < g.dims; ++i) {
      k::mul(yu.comp[i].phys.data(), u.comp[j].phys.data(), tmp.data(), np);
      const ScalarField prod = spectral_of(g, tmp);
      add_ik(g, i, prod, out_u.comp[j], -1.0);
    }
    if (max_abs(gphi_phys.comp[j]) > 0.0) {
      k::mul(n.phys.data(), gphi_phys.comp[j].phys.data(), tmp.data(), np);
      const ScalarField buoy = spectral_of(g, tmp);
      for (std::size_t m = 0; m < out_u.comp[j].spec.size(); ++m)
        out_u.comp[j].spec[m] += buoy.spec[m];
    }
  }
  out_u = leray_project(out_u).v;
  for (auto& comp : out_u.comp) dealias_inplace(comp);
}

}  // namespace

void Stepper::nonlinear(const ScalarField& ns, const ScalarField& cs,
                        const VectorField& us, ScalarField& out_n,
                        ScalarField& out_c, VectorField& out_u) const {
  // smooth the drift velocity through the cached resolvent multiplier
  VectorField yus = us;
  for (auto& comp : yus.comp)
    kernels::cmul_real(comp.spec.data(), yos_.data(), comp.spec.size());
  eval_nonlinear(grid_, eps_, grad_phi_, ns, cs, us, yus, out_n, out_c, out_u);
}

// ---------------------------------------------------------------------
// public right-hand sides (diffusion included)
// ---------------------------------------------------------------------

namespace {

void full_nonlinear(const SimulationState& s, const VectorField& gphi_phys,
                    ScalarField& nn, ScalarField& nc, VectorField& nu) {
  const ScalarField ns = to_spectral(s.n);
  const ScalarField cs = to_spectral(s.c);
  const VectorField us = to_spectral(s.u.v);
  const VectorField yus = yosida_apply(SolenoidalField{us}, s.eps).v;
  eval_nonlinear(s.n.grid, s.eps, gphi_phys, ns, cs, us, yus, nn, nc, nu);
}

}  // namespace

ScalarField rhs_n(const SimulationState& s) {
  ScalarField nn, nc;
  VectorField nu;
  full_nonlinear(s, make_vector_field(s.n.grid, Rep::physical), nn, nc, nu);
  const ScalarField lap = laplacian(to_spectral(s.n));
  for (std::size_t i = 0; i < nn.spec.size(); ++i) nn.spec[i] += lap.spec[i];
  return nn;
}

ScalarField rhs_c(const SimulationState& s) {
  ScalarField nn, nc;
  VectorField nu;
  full_nonlinear(s, make_vector_field(s.n.grid, Rep::physical), nn, nc, nu);
  const ScalarField lap = laplacian(to_spectral(s.c));
  for (std::size_t i = 0; i < nc.spec.size(); ++i) nc.spec[i] += lap.spec[i];
  return nc;
}

SolenoidalField rhs_u(const SimulationState& s, const VectorField& grad_phi) {
  ScalarField nn, nc;
  VectorField nu;
  full_nonlinear(s, to_physical(grad_phi), nn, nc, nu);
  const VectorField lap = laplacian(to_spectral(s.u.v));
  for (int d = 0; d < nu.dims(); ++d)
    for (std::size_t i = 0; i < nu.comp[d].spec.size(); ++i)
      nu.comp[d].spec[i] += lap.comp[d].spec[i];
  SolenoidalField out;
  out.v = std::move(nu);
  return out;
}

SolenoidalField convection_term(const SimulationState& s) {
  const Grid& g = s.n.grid;
  namespace k = kernels;
  const std::size_t np = g.points();
  const VectorField us = to_spectral(s.u.v);
  const VectorField yu = to_physical(yosida_apply(SolenoidalField{us}, s.eps).v);
  const VectorField u = to_physical(us);
  VectorField out = make_vector_field(g, Rep::spectral);
  std::vector<double> tmp(np);
  for (int j = 0; j < g.dims; ++j)
    for (int i = 0; i < g.dims; ++i) {
      k::mul(yu.comp[i].phys.data(), u.comp[j].phys.data(), tmp.data(), np);
      const ScalarField prod = spectral_of(g, tmp);
      add_ik(g, i, prod, out.comp[j], 1.0);  // +div(Yu (x) u) = (Yu.grad)u
    }
  SolenoidalField res = leray_project(out);
  for (auto& comp : res.v.comp) dealias_inplace(comp);
  return res;
}

SolenoidalField buoyancy_term(const SimulationState& s,
                              const VectorField& grad_phi) {
  const Grid& g = s.n.grid;
  namespace k = kernels;
  const std::size_t np = g.points();
  const ScalarField n = to_physical(s.n);
  const VectorField gp = to_physical(grad_phi);
  VectorField out = make_vector_field(g, Rep::spectral);
  std::vector<double> tmp(np);
  for (int j = 0; j < g.dims; ++j) {
    k::mul(n.phys.data(), gp.comp[j].phys.data(), tmp.data(), np);
    out.comp[j] = spectral_of(g, tmp);
  }
  SolenoidalField res = leray_project(out);
  for (auto& comp : res.v.comp) dealias_inplace(comp);
  return res;
}

// ---------------------------------------------------------------------
// stepper
// ---------------------------------------------------------------------

Stepper::Stepper(const Grid& g, double dt, double eps, VectorField grad_phi)
    : grid_(g), dt_(dt), eps_(eps), grad_phi_(std::move(grad_phi)) {
  validate(g);
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  for (auto& comp : grad_phi_.comp)
    if (comp.rep != Rep::physical)
      throw std::invalid_argument("grad_phi must be physical");

  // heat factors are separable: per-axis tables indexed by |m|, full
  // spectrum (Nyquist damped physically)
  const double ku = kTwoPi / g.box;
  const int half = g.n / 2;
  std::vector<double> ax_full(half + 1), ax_half(half + 1);
  for (int m = 0; m <= half; ++m) {
    const double kk = ku * m * ku * m;
    ax_full[m] = std::exp(-kk * dt);
    ax_half[m] = std::exp(-kk * 0.5 * dt);
  }
  e_full_.resize(g.spectral_size());
  e_half_.resize(g.spectral_size());
  yos_.resize(g.spectral_size());
  for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
    const int a0 = std::abs(m0), a1 = std::abs(m1), a2 = std::abs(m2);
    e_full_[idx] = ax_full[a0] * ax_full[a1] * ax_full[a2];
    e_half_[idx] = ax_half[a0] * ax_half[a1] * ax_half[a2];
    auto kd = [&](int m) { return std::abs(m) == g.n / 2 ? 0.0 : ku * m; };
    const double k2 =
        kd(m0) * kd(m0) + kd(m1) * kd(m1) + kd(m2) * kd(m2);
    yos_[idx] = 1.0 / (1.0 + eps * k2);
  });
}

void Stepper::step(SimulationState& s) {
  namespace k = kernels;
  if (s.eps != eps_) throw std::invalid_argument("state eps mismatch");
  const std::size_t ns = grid_.spectral_size();
  auto d = [](ScalarField& f) { return reinterpret_cast<double*>(f.spec.data()); };

  ScalarField k1n, k1c, k2n, k2c;
  VectorField k1u, k2u;

  // stage 1: midpoint state v_mid = E_half (v + dt/2 k1)
  nonlinear(s.n, s.c, s.u.v, k1n, k1c, k1u);
  ScalarField nm = s.n, cm = s.c;
  VectorField um = s.u.v;
  auto to_mid = [&](ScalarField& mid, ScalarField& k1) {
    k::axpby(1.0, d(mid), 0.5 * dt_, d(k1), d(mid), 2 * ns);
    k::cmul_real(mid.spec.data(), e_half_.data(), ns);
  };
  to_mid(nm, k1n);
  to_mid(cm, k1c);
  for (int c = 0; c < grid_.dims; ++c) to_mid(um.comp[c], k1u.comp[c]);

  // stage 2: v_new = E_full v + dt E_half k2
  nonlinear(nm, cm, um, k2n, k2c, k2u);
  auto combine = [&](ScalarField& v, ScalarField& k2) {
    k::cmul_real(v.spec.data(), e_full_.data(), ns);
    k::cmul_real(k2.spec.data(), e_half_.data(), ns);
    k::axpby(1.0, d(v), dt_, d(k2), d(v), 2 * ns);
  };
  combine(s.n, k2n);
  combine(s.c, k2c);
  for (int c = 0; c < grid_.dims; ++c) combine(s.u.v.comp[c], k2u.comp[c]);
  s.t += dt_;
}

void imex_step(SimulationState& s, double dt, const VectorField& grad_phi) {
  Stepper st(s.n.grid, dt, s.eps, to_physical(grad_phi));
  if (s.n.rep != Rep::spectral) s.n = to_spectral(s.n);
  if (s.c.rep != Rep::spectral) s.c = to_spectral(s.c);
  for (auto& comp : s.u.v.comp)
    if (comp.rep != Rep::spectral) comp = to_spectral(comp);
  st.step(s);
}

double cfl_number(const SimulationState& s, double dt) {
  const Grid& g = s.n.grid;
  const std::size_t np = g.points();
  const ScalarField n = to_physical(s.n);
  const VectorField u = to_physical(s.u.v);
  const VectorField gc = to_physical(grad(to_spectral(s.c)));
  double vmax = 0.0, chem = 0.0;
  std::vector<double> tmp(np);
  for (int d = 0; d < g.dims; ++d) {
    vmax = std::max(vmax, kernels::max_abs(u.comp[d].phys.data(), np));
    for (std::size_t i = 0; i < np; ++i)
      tmp[i] = f_eps_prime(n.phys[i], s.eps) * gc.comp[d].phys[i];
    chem = std::max(chem, kernels::max_abs(tmp.data(), np));
  }
  return dt * (vmax + chem) / g.spacing();
}

// ---------------------------------------------------------------------
// full run
// ---------------------------------------------------------------------

namespace {

bool spec_finite(const ScalarField& f) {
  // cheap per-step guard: max_abs of the coefficient array is finite
  const double m = kernels::max_abs(
      reinterpret_cast<const double*>(f.spec.data()), 2 * f.spec.size());
  return std::isfinite(m);
}

}  // namespace

SimulationResult simulate(const RunConfig& cfg) {
  validate(cfg);
  const Grid g{cfg.dims, cfg.n, cfg.box};

  SimulationState st = make_initial_data(cfg);
  VectorField gphi = make_grad_phi(cfg);

  long nsteps = std::lround(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  const long stride = cfg.sample_stride;
  nsteps = ((nsteps + stride - 1) / stride) * stride;  // whole sample windows

  Stepper stepper(g, cfg.dt, cfg.eps, gphi);

  SimulationResult res;
  Trajectory& traj = res.trajectory;
  traj.config_hash = config_hash(cfg);
  traj.grid = g;
  traj.eps = cfg.eps;
  traj.mu = cfg.mu;
  traj.kappa = cfg.kappa;
  traj.dt = cfg.dt;
  traj.sample_stride = cfg.sample_stride;

  TrajectoryRecorder rec(traj, cfg.record_cross_terms);
  traj.cfl_max = cfl_number(st, cfg.dt);
  rec.record(st, gphi);

  for (long k = 1; k <= nsteps; ++k) {
    stepper.step(st);
    st.t = static_cast<double>(k) * cfg.dt;  // avoid accumulated roundoff
    if (!spec_finite(st.n) || !spec_finite(st.c) ||
        !spec_finite(st.u.v.comp[0])) {
      res.blew_up = true;
      res.blow_up_time = st.t;
      traj.blow_up = true;
      break;
    }
    if (k % stride == 0) {
      traj.cfl_max = std::max(traj.cfl_max, cfl_number(st, cfg.dt));
      rec.record(st, gphi);
    }
  }
  res.final_state = std::move(st);
  return res;
}

}  // namespace cns
