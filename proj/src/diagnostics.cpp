#include "cns/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cns/kernels.hpp"

namespace cns {

// ---------------------------------------------------------------------
// functionals of a single state
// ---------------------------------------------------------------------

namespace {

// r2c of a raw physical buffer, then gradient back to physical components
VectorField grad_of_buffer(const Grid& g, const std::vector<double>& buf) {
  ScalarField f(g, Rep::physical);
  f.phys = buf;
  return to_physical(grad(to_spectral(f)));
}

double sumsq_vector(const VectorField& v) {
  double s = 0.0;
  for (const auto& comp : v.comp)
    s += kernels::sum_sq(comp.phys.data(), comp.phys.size());
  return s;
}

}  // namespace

FunctionalSample compute_functionals(const SimulationState& st,
                                     const VectorField& grad_phi, double mu,
                                     double kappa, bool cross_terms) {
  namespace k = kernels;
  const Grid& g = st.n.grid;
  const std::size_t np = g.points();
  const double cv = g.cell_volume();
  const VectorField gp = to_physical(grad_phi);

  const ScalarField ns = to_spectral(st.n);
  const ScalarField cs = to_spectral(st.c);
  const VectorField us = to_spectral(st.u.v);

  const ScalarField n = to_physical(ns);
  const ScalarField c = to_physical(cs);
  const VectorField u = to_physical(us);
  const VectorField gc = to_physical(grad(cs));
  const VectorField gn = to_physical(grad(ns));

  FunctionalSample s;
  s.t = st.t;

  // |grad c|^2 pointwise
  std::vector<double> g2(np, 0.0);
  k::mul(gc.comp[0].phys.data(), gc.comp[0].phys.data(), g2.data(), np);
  for (int d = 1; d < g.dims; ++d)
    k::mul_acc(gc.comp[d].phys.data(), gc.comp[d].phys.data(), g2.data(), np);

  // velocity gradient components and |grad u|^2
  double gu_sumsq = 0.0;
  std::vector<double> gu_norm;  // |grad u| pointwise, for the cross term
  if (cross_terms) gu_norm.assign(np, 0.0);
  for (int d = 0; d < g.dims; ++d) {
    const VectorField gud = to_physical(grad(us.comp[d]));
    for (int e = 0; e < g.dims; ++e) {
      gu_sumsq += k::sum_sq(gud.comp[e].phys.data(), np);
      if (cross_terms)
        k::mul_acc(gud.comp[e].phys.data(), gud.comp[e].phys.data(),
                   gu_norm.data(), np);
    }
  }
  if (cross_terms)
    for (auto& x : gu_norm) x = std::sqrt(x);

  // headline functionals
  s.y1 = cv * (k::sum_cube(n.phys.data(), np) + k::sum_cube(g2.data(), np));
  s.y2 = cv * gu_sumsq;
  s.y = std::pow(std::max(s.y1, 0.0), mu) + s.y2 + 1.0;

  // dissipations of the headline quantities
  std::vector<double> tmp(np);
  long clip = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const double x = n.phys[i];
    if (x < 0.0) {
      ++clip;
      tmp[i] = 0.0;
    } else {
      tmp[i] = x * std::sqrt(x);  // n^{3/2}
    }
  }
  s.diss_n = cv * sumsq_vector(grad_of_buffer(g, tmp));
  for (std::size_t i = 0; i < np; ++i)
    tmp[i] = g2[i] * std::sqrt(g2[i]);  // |grad c|^3
  s.diss_c = cv * sumsq_vector(grad_of_buffer(g, tmp));
  const VectorField lapu = to_physical(laplacian(us));
  s.diss_u = cv * sumsq_vector(lapu);

  // bulk monitors
  s.mass = cv * k::sum(n.phys.data(), np);
  s.n_min = k::min_val(n.phys.data(), np);
  s.c_max = k::max_val(c.phys.data(), np);
  s.c_min = k::min_val(c.phys.data(), np);

  // kinetic energy and the work done by the buoyancy force
  double usq = 0.0;
  for (int d = 0; d < g.dims; ++d) usq += k::sum_sq(u.comp[d].phys.data(), np);
  s.kinetic = 0.5 * cv * usq;
  std::fill(tmp.begin(), tmp.end(), 0.0);
  for (int d = 0; d < g.dims; ++d)
    k::mul_acc(u.comp[d].phys.data(), gp.comp[d].phys.data(), tmp.data(), np);
  s.buoyancy_work = cv * k::dot(n.phys.data(), tmp.data(), np);

  // quotient diagnostics with the fixed c floor
  long floor_hits = 0;
  double nlnn = 0.0, gc2_over_c = 0.0, gc4_over_c3 = 0.0, gn2_over_n = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    const double x = n.phys[i];
    if (x > 0.0) nlnn += x * std::log(x);
    // (x <= 0: n ln n -> 0, counted above through the same clip rule)
    const double cc = c.phys[i];
    if (cc <= kCFloor) {
      ++floor_hits;
    } else {
      gc2_over_c += g2[i] / cc;
      gc4_over_c3 += g2[i] * g2[i] / (cc * cc * cc);
    }
    if (x > kCFloor) {
      double gn2 = 0.0;
      for (int d = 0; d < g.dims; ++d)
        gn2 += gn.comp[d].phys[i] * gn.comp[d].phys[i];
      gn2_over_n += gn2 / x;
    }
  }
  s.floor_hits = floor_hits;
  s.clip_hits = clip;
  s.diss_nlog = cv * gn2_over_n;
  s.diss_cquot = cv * gc4_over_c3;
  if (floor_hits == 0) {
    s.quasi_present = true;
    s.quasi_energy = cv * nlnn + 0.5 * cv * gc2_over_c + kappa * cv * usq;
  } else {
    s.quasi_present = false;
    s.quasi_energy = std::numeric_limits<double>::quiet_NaN();
  }

  // instantaneous integrands for the cumulative columns
  for (std::size_t i = 0; i < np; ++i)
    tmp[i] = n.phys[i] > 0.0 ? std::sqrt(n.phys[i]) : 0.0;
  s.inst_grad_sqrtn = cv * sumsq_vector(grad_of_buffer(g, tmp));
  {
    // |D^2 c|^2 pointwise: diagonal once, off-diagonal twice
    std::vector<double> h2(np, 0.0);
    const VectorField gcs = grad(cs);
    for (int i = 0; i < g.dims; ++i) {
      const VectorField hcol = to_physical(grad(gcs.comp[i]));
      for (int j = i; j < g.dims; ++j) {
        const double w = (i == j) ? 1.0 : 2.0;
        for (std::size_t m = 0; m < np; ++m)
          h2[m] += w * hcol.comp[j].phys[m] * hcol.comp[j].phys[m];
      }
    }
    double hq = 0.0;
    for (std::size_t m = 0; m < np; ++m)
      if (c.phys[m] > kCFloor) hq += h2[m] / c.phys[m];
    s.inst_hessc = cv * hq;
  }

  // cross terms for the term-wise inequality estimates
  if (cross_terms) {
    std::vector<double> n2(np), pw(np);
    k::mul(n.phys.data(), n.phys.data(), n2.data(), np);
    k::mul(n2.data(), n.phys.data(), pw.data(), np);  // n^3
    s.cross_n3_gc2 = cv * k::dot(pw.data(), g2.data(), np);
    k::mul(g2.data(), g2.data(), pw.data(), np);  // |grad c|^4
    s.cross_n2_gc4 = cv * k::dot(n2.data(), pw.data(), np);
    k::mul(pw.data(), g2.data(), pw.data(), np);  // |grad c|^6
    s.cross_gc6_gu = cv * k::dot(pw.data(), gu_norm.data(), np);

    const VectorField conv = to_physical(convection_term(st).v);
    const VectorField buoy = to_physical(buoyancy_term(st, grad_phi).v);
    double ip_conv = 0.0, ip_buoy = 0.0;
    for (int d = 0; d < g.dims; ++d) {
      ip_conv += k::dot(lapu.comp[d].phys.data(), conv.comp[d].phys.data(), np);
      ip_buoy += k::dot(lapu.comp[d].phys.data(), buoy.comp[d].phys.data(), np);
    }
    s.cross_conv = std::abs(cv * ip_conv);
    s.cross_buoy = std::abs(cv * ip_buoy);
    s.cross_present = true;
  }

  return s;
}

// ---------------------------------------------------------------------
// recorder
// ---------------------------------------------------------------------

void TrajectoryRecorder::record(const SimulationState& st,
                                const VectorField& grad_phi) {
  FunctionalSample s =
      compute_functionals(st, grad_phi, out_.mu, out_.kappa, cross_);
  if (first_) {
    base_mass_ = s.mass;
    base_cmax_ = s.c_max;
    s.cum_grad_sqrtn = 0.0;
    s.cum_hessc = 0.0;
    s.cum_gradu = 0.0;
    first_ = false;
  } else {
    const FunctionalSample& p = out_.samples.back();
    const double h = s.t - p.t;
    s.cum_grad_sqrtn =
        p.cum_grad_sqrtn + 0.5 * h * (p.inst_grad_sqrtn + s.inst_grad_sqrtn);
    s.cum_hessc = p.cum_hessc + 0.5 * h * (p.inst_hessc + s.inst_hessc);
    s.cum_gradu = p.cum_gradu + 0.5 * h * (p.y2 + s.y2);
  }
  out_.mass_drift_max =
      std::max(out_.mass_drift_max,
               std::abs(s.mass - base_mass_) / std::max(1.0, std::abs(base_mass_)));
  out_.c_overshoot_max = std::max(out_.c_overshoot_max, s.c_max - base_cmax_);
  out_.n_undershoot_max = std::max(out_.n_undershoot_max, -s.n_min);
  out_.samples.push_back(s);
}

// ---------------------------------------------------------------------
// column table
// ---------------------------------------------------------------------

namespace {

struct Col {
  const char* name;
  double (*get)(const FunctionalSample&);
  void (*set)(FunctionalSample&, double);
};

#define CNS_COL(field)                                        \
  {#field, [](const FunctionalSample& s) -> double { return s.field; }, \
   [](FunctionalSample& s, double v) { s.field = v; }}

const Col kCols[] = {
    CNS_COL(t),
    CNS_COL(y1),
    CNS_COL(y2),
    CNS_COL(y),
    CNS_COL(diss_n),
    CNS_COL(diss_c),
    CNS_COL(diss_u),
    CNS_COL(mass),
    CNS_COL(n_min),
    CNS_COL(c_max),
    CNS_COL(c_min),
    CNS_COL(kinetic),
    CNS_COL(buoyancy_work),
    CNS_COL(quasi_energy),
    {"quasi_present",
     [](const FunctionalSample& s) -> double { return s.quasi_present ? 1.0 : 0.0; },
     [](FunctionalSample& s, double v) { s.quasi_present = v != 0.0; }},
    CNS_COL(diss_nlog),
    CNS_COL(diss_cquot),
    CNS_COL(inst_grad_sqrtn),
    CNS_COL(inst_hessc),
    CNS_COL(cum_grad_sqrtn),
    CNS_COL(cum_hessc),
    CNS_COL(cum_gradu),
    CNS_COL(cross_n3_gc2),
    CNS_COL(cross_n2_gc4),
    CNS_COL(cross_gc6_gu),
    CNS_COL(cross_conv),
    CNS_COL(cross_buoy),
    {"cross_present",
     [](const FunctionalSample& s) -> double { return s.cross_present ? 1.0 : 0.0; },
     [](FunctionalSample& s, double v) { s.cross_present = v != 0.0; }},
    {"floor_hits",
     [](const FunctionalSample& s) -> double { return double(s.floor_hits); },
     [](FunctionalSample& s, double v) { s.floor_hits = long(v); }},
    {"clip_hits",
     [](const FunctionalSample& s) -> double { return double(s.clip_hits); },
     [](FunctionalSample& s, double v) { s.clip_hits = long(v); }},
};

#undef CNS_COL

const Col& find_col(const std::string& name) {
  for (const Col& c : kCols)
    if (name == c.name) return c;
  throw std::invalid_argument("unknown trajectory column '" + name + "'");
}

}  // namespace

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Col& c : kCols) v.push_back(c.name);
    return v;
  }();
  return names;
}

double sample_column(const FunctionalSample& s, const std::string& name) {
  return find_col(name).get(s);
}

// ---------------------------------------------------------------------
// trajectory file format
// ---------------------------------------------------------------------

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "# cnslab-trajectory v1\n");
  std::fprintf(f, "# config_hash=%s\n",
               traj.config_hash.empty() ? "0000000000000000"
                                        : traj.config_hash.c_str());
  std::fprintf(f, "# grid dims=%d n=%d box=%.17g\n", traj.grid.dims,
               traj.grid.n, traj.grid.box);
  std::fprintf(f, "# params eps=%.17g mu=%.17g kappa=%.17g dt=%.17g stride=%d\n",
               traj.eps, traj.mu, traj.kappa, traj.dt, traj.sample_stride);
  std::fprintf(f, "# flags blow_up=%d synthetic=%d\n", traj.blow_up ? 1 : 0,
               traj.synthetic ? 1 : 0);
  std::fprintf(f,
               "# health cfl_max=%.17g mass_drift_max=%.17g "
               "c_overshoot_max=%.17g n_undershoot_max=%.17g\n",
               traj.cfl_max, traj.mass_drift_max, traj.c_overshoot_max,
               traj.n_undershoot_max);
  bool first = true;
  for (const Col& c : kCols) {
    std::fprintf(f, first ? "%s" : ",%s", c.name);
    first = false;
  }
  std::fprintf(f, "\n");
  for (const FunctionalSample& s : traj.samples) {
    first = true;
    for (const Col& c : kCols) {
      std::fprintf(f, first ? "%.17g" : ",%.17g", c.get(s));
      first = false;
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path);
  Trajectory traj;
  std::string line;
  bool saw_magic = false, saw_header = false;
  std::vector<const Col*> cols;
  int flag_blow = 0, flag_synth = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      char hash[64];
      if (line.find("# cnslab-trajectory") == 0) {
        saw_magic = true;
      } else if (std::sscanf(line.c_str(), "# config_hash=%63s", hash) == 1) {
        traj.config_hash = hash;
      } else if (line.rfind("# grid ", 0) == 0) {
        std::sscanf(line.c_str(), "# grid dims=%d n=%d box=%lg",
                    &traj.grid.dims, &traj.grid.n, &traj.grid.box);
      } else if (line.rfind("# params ", 0) == 0) {
        std::sscanf(line.c_str(),
                    "# params eps=%lg mu=%lg kappa=%lg dt=%lg stride=%d",
                    &traj.eps, &traj.mu, &traj.kappa, &traj.dt,
                    &traj.sample_stride);
      } else if (line.rfind("# flags ", 0) == 0) {
        std::sscanf(line.c_str(), "# flags blow_up=%d synthetic=%d", &flag_blow,
                    &flag_synth);
      } else if (line.rfind("# health ", 0) == 0) {
        std::sscanf(line.c_str(),
                    "# health cfl_max=%lg mass_drift_max=%lg "
                    "c_overshoot_max=%lg n_undershoot_max=%lg",
                    &traj.cfl_max, &traj.mass_drift_max, &traj.c_overshoot_max,
                    &traj.n_undershoot_max);
      }
      continue;
    }
    if (!saw_header) {
      if (!saw_magic)
        throw std::runtime_error(path + ": not a cnslab trajectory file");
      std::istringstream hs(line);
      std::string name;
      while (std::getline(hs, name, ',')) cols.push_back(&find_col(name));
      if (cols.empty() || std::string(cols[0]->name) != "t")
        throw std::runtime_error(path + ": header must start with column t");
      saw_header = true;
      continue;
    }
    std::istringstream rs(line);
    std::string cell;
    FunctionalSample s;
    std::size_t ci = 0;
    while (std::getline(rs, cell, ',')) {
      if (ci >= cols.size())
        throw std::runtime_error(path + ": row has too many columns");
      cols[ci]->set(s, std::strtod(cell.c_str(), nullptr));
      ++ci;
    }
    if (ci != cols.size())
      throw std::runtime_error(path + ": row has too few columns");
    traj.samples.push_back(s);
  }
  if (!saw_header) throw std::runtime_error(path + ": missing header row");
  traj.blow_up = flag_blow != 0;
  traj.synthetic = flag_synth != 0;
  return traj;
}

// ---------------------------------------------------------------------
// trajectory norms and balances
// ---------------------------------------------------------------------

double Trajectory::spacing() const {
  if (samples.size() < 2)
    throw std::invalid_argument("trajectory needs >= 2 samples for spacing");
  return samples[1].t - samples[0].t;
}

bool Trajectory::spacing_uniform(double tol) const {
  if (samples.size() < 2) return true;
  const double h = spacing();
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double d = samples[i].t - samples[i - 1].t;
    if (std::abs(d - h) > tol * std::max(1.0, std::abs(h))) return false;
  }
  return true;
}

double ls_norm(const std::vector<double>& v, double spacing, double s) {
  if (v.size() < 2)
    throw std::invalid_argument("ls_norm needs at least two samples");
  if (!(spacing > 0.0)) throw std::invalid_argument("ls_norm: spacing <= 0");
  if (!(s > 0.0)) throw std::invalid_argument("ls_norm: exponent must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = (i == 0 || i + 1 == v.size()) ? 0.5 : 1.0;
    acc += w * spacing * std::pow(std::abs(v[i]), s);
  }
  return std::pow(acc, 1.0 / s);
}

double ls_norm(const Trajectory& traj, const std::string& column, double s) {
  if (!traj.spacing_uniform())
    throw std::invalid_argument("ls_norm: trajectory sampling is not uniform");
  const Col& c = find_col(column);
  std::vector<double> v(traj.samples.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c.get(traj.samples[i]);
  return ls_norm(v, traj.spacing(), s);
}

EnergyBalance energy_residual(const Trajectory& traj, std::size_t i0,
                              std::size_t i1) {
  if (i1 <= i0 || i1 >= traj.samples.size())
    throw std::invalid_argument("energy_residual: bad sample range");
  double int_y2 = 0.0, int_buoy = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const FunctionalSample& a = traj.samples[i];
    const FunctionalSample& b = traj.samples[i + 1];
    const double h = b.t - a.t;
    int_y2 += 0.5 * h * (a.y2 + b.y2);
    int_buoy += 0.5 * h * (a.buoyancy_work + b.buoyancy_work);
  }
  EnergyBalance out;
  out.lhs = traj.samples[i1].kinetic + int_y2;
  out.rhs = traj.samples[i0].kinetic + int_buoy;
  out.residual = out.lhs - out.rhs;
  const double scale =
      std::max({std::abs(traj.samples[i0].kinetic),
                std::abs(traj.samples[i1].kinetic), std::abs(int_y2),
                std::abs(int_buoy), 1e-30});
  out.relative = std::abs(out.residual) / scale;
  return out;
}

double fit_quasi_dissipation_constant(const Trajectory& traj, double fraction) {
  const auto& ss = traj.samples;
  if (ss.size() < 3) return std::numeric_limits<double>::infinity();
  for (const auto& s : ss)
    if (!s.quasi_present) return std::numeric_limits<double>::infinity();
  // per interior sample, the smallest K with  q' + D/K <= K  solves
  // K^2 - q' K - D >= 0
  std::vector<double> need;
  for (std::size_t i = 1; i + 1 < ss.size(); ++i) {
    const double h2 = ss[i + 1].t - ss[i - 1].t;
    const double dq = (ss[i + 1].quasi_energy - ss[i - 1].quasi_energy) / h2;
    const double D = ss[i].diss_nlog + ss[i].diss_cquot + ss[i].y2;
    need.push_back(0.5 * (dq + std::sqrt(dq * dq + 4.0 * std::max(D, 0.0))));
  }
  std::sort(need.begin(), need.end());
  const double q = std::clamp(fraction, 0.0, 1.0);
  const std::size_t idx =
      std::min(need.size() - 1,
               static_cast<std::size_t>(std::ceil(q * need.size())) -
                   (q > 0.0 ? 1 : 0));
  return std::max(1.0, need[idx]);
}

}  // namespace cns
