#include "cns/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "cns/kernels.hpp"

namespace cns {

namespace {

// ---------------------------------------------------------------------
// grid tables + FFTW plan cache, keyed by (dims, n [, box for tables])
// ---------------------------------------------------------------------

struct PlanPair {
  fftw_plan fwd = nullptr;  // r2c, unnormalized
  fftw_plan bwd = nullptr;  // c2r, caller divides by n^dims
};

PlanPair plans_for(int dims, int n) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({dims, n});
  if (it != cache.end()) return it->second;

  std::size_t np = 1, ns = 1;
  for (int d = 0; d < dims - 1; ++d) np *= n, ns *= n;
  np *= n;
  ns *= n / 2 + 1;
  double* re = fftw_alloc_real(np);
  fftw_complex* cx = fftw_alloc_complex(ns);
  int dim_arr[3] = {n, n, n};
  // FFTW_UNALIGNED so the new-array execute API accepts std::vector storage
  PlanPair p;
  p.fwd = fftw_plan_dft_r2c(dims, dim_arr, re, cx,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_c2r(dims, dim_arr, cx, re,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(re);
  fftw_free(cx);
  if (!p.fwd || !p.bwd) throw std::runtime_error("fftw plan creation failed");
  cache[{dims, n}] = p;
  return p;
}

struct GridTables {
  std::vector<double> k2d;   // |k|^2 with Nyquist-zeroed wavenumbers
  std::vector<double> mask;  // 2/3-rule keep mask (1.0 keep, 0.0 drop)
};

struct TablesKey {
  int dims;
  int n;
  double box;
  bool operator<(const TablesKey& o) const {
    return std::tie(dims, n, box) < std::tie(o.dims, o.n, o.box);
  }
};

const GridTables& tables_for(const Grid& g) {
  static std::map<TablesKey, GridTables> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, fresh] = cache.try_emplace({g.dims, g.n, g.box});
  GridTables& t = it->second;
  if (!fresh) return t;

  const double ku = kTwoPi / g.box;
  const int n = g.n;
  t.k2d.resize(g.spectral_size());
  t.mask.resize(g.spectral_size());
  for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
    auto kd = [&](int m) { return std::abs(m) == n / 2 ? 0.0 : ku * m; };
    const double k0 = kd(m0), k1 = kd(m1), k2 = kd(m2);
    t.k2d[idx] = k0 * k0 + k1 * k1 + k2 * k2;
    const bool keep = 3 * std::abs(m0) <= n && 3 * std::abs(m1) <= n &&
                      3 * std::abs(m2) <= n;
    t.mask[idx] = keep ? 1.0 : 0.0;
  });
  return t;
}

void require_nonempty(const ScalarField& f) {
  if (f.rep == Rep::physical ? f.phys.empty() : f.spec.empty())
    throw std::invalid_argument("field has no active data");
}

double deriv_k(int m, int n, double ku) {
  return std::abs(m) == n / 2 ? 0.0 : ku * m;
}

}  // namespace

// ---------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------

std::size_t Grid::points() const {
  std::size_t p = 1;
  for (int d = 0; d < dims; ++d) p *= static_cast<std::size_t>(n);
  return p;
}

std::size_t Grid::spectral_size() const {
  std::size_t p = static_cast<std::size_t>(n / 2 + 1);
  for (int d = 0; d < dims - 1; ++d) p *= static_cast<std::size_t>(n);
  return p;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dims; ++d) v *= spacing();
  return v;
}

void validate(const Grid& g) {
  if (g.dims != 2 && g.dims != 3)
    throw std::invalid_argument("grid dims must be 2 or 3");
  if (g.n < 8 || g.n % 2 != 0)
    throw std::invalid_argument("grid n must be even and >= 8");
  if (!(g.box > 0.0)) throw std::invalid_argument("grid box must be positive");
}

ScalarField::ScalarField(const Grid& g, Rep r) : grid(g), rep(r) {
  validate(g);
  if (r == Rep::physical)
    phys.assign(g.points(), 0.0);
  else
    spec.assign(g.spectral_size(), {0.0, 0.0});
}

VectorField make_vector_field(const Grid& g, Rep r) {
  VectorField v;
  v.comp.assign(static_cast<std::size_t>(g.dims), ScalarField(g, r));
  return v;
}

// ---------------------------------------------------------------------
// transforms
// ---------------------------------------------------------------------

ScalarField to_spectral(const ScalarField& f) {
  require_nonempty(f);
  if (f.rep == Rep::spectral) return f;
  ScalarField out(f.grid, Rep::spectral);
  PlanPair p = plans_for(f.grid.dims, f.grid.n);
  // out-of-place r2c preserves its input
  fftw_execute_dft_r2c(p.fwd, const_cast<double*>(f.phys.data()),
                       reinterpret_cast<fftw_complex*>(out.spec.data()));
  return out;
}

ScalarField to_physical(const ScalarField& f) {
  require_nonempty(f);
  if (f.rep == Rep::physical) return f;
  ScalarField out(f.grid, Rep::physical);
  // multi-dimensional c2r destroys its input: transform a scratch copy
  std::vector<std::complex<double>> scratch(f.spec);
  PlanPair p = plans_for(f.grid.dims, f.grid.n);
  fftw_execute_dft_c2r(p.bwd, reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.phys.data());
  const double inv = 1.0 / static_cast<double>(f.grid.points());
  kernels::scale(inv, out.phys.data(), out.phys.data(), out.phys.size());
  return out;
}

VectorField to_physical(const VectorField& v) {
  VectorField out;
  out.comp.reserve(v.comp.size());
  for (const auto& c : v.comp) out.comp.push_back(to_physical(c));
  return out;
}

VectorField to_spectral(const VectorField& v) {
  VectorField out;
  out.comp.reserve(v.comp.size());
  for (const auto& c : v.comp) out.comp.push_back(to_spectral(c));
  return out;
}

// ---------------------------------------------------------------------
// calculus
// ---------------------------------------------------------------------

VectorField grad(const ScalarField& f) {
  const ScalarField fs = to_spectral(f);
  const Grid& g = fs.grid;
  const double ku = kTwoPi / g.box;
  VectorField out = make_vector_field(g, Rep::spectral);
  for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
    const int mm[3] = {m0, m1, m2};
    const std::complex<double> z = fs.spec[idx];
    for (int d = 0; d < g.dims; ++d) {
      const double k = deriv_k(mm[d], g.n, ku);
      out.comp[d].spec[idx] = {-k * z.imag(), k * z.real()};  // i*k*z
    }
  });
  return out;
}

ScalarField divergence(const VectorField& v) {
  const Grid& g = v.grid();
  const double ku = kTwoPi / g.box;
  ScalarField out(g, Rep::spectral);
  for (int d = 0; d < g.dims; ++d) {
    const ScalarField cs = to_spectral(v.comp[d]);
    for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
      const int mm[3] = {m0, m1, m2};
      const double k = deriv_k(mm[d], g.n, ku);
      const std::complex<double> z = cs.spec[idx];
      out.spec[idx] += std::complex<double>(-k * z.imag(), k * z.real());
    });
  }
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  ScalarField out = to_spectral(f);
  const GridTables& t = tables_for(out.grid);
  kernels::cmul_real(out.spec.data(), t.k2d.data(), out.spec.size());
  kernels::scale(-1.0, reinterpret_cast<double*>(out.spec.data()),
                 reinterpret_cast<double*>(out.spec.data()),
                 2 * out.spec.size());
  return out;
}

VectorField laplacian(const VectorField& v) {
  VectorField out;
  out.comp.reserve(v.comp.size());
  for (const auto& c : v.comp) out.comp.push_back(laplacian(c));
  return out;
}

SolenoidalField leray_project(const VectorField& v) {
  const Grid& g = v.grid();
  const double ku = kTwoPi / g.box;
  VectorField out = to_spectral(v);
  for_each_mode(g, [&](std::size_t idx, int m0, int m1, int m2) {
    const int mm[3] = {m0, m1, m2};
    double k[3] = {0.0, 0.0, 0.0};
    double k2 = 0.0;
    for (int d = 0; d < g.dims; ++d) {
      k[d] = deriv_k(mm[d], g.n, ku);
      k2 += k[d] * k[d];
    }
    if (k2 == 0.0) return;  // zero mode (and pure-Nyquist slots) untouched
    std::complex<double> kdotu{0.0, 0.0};
    for (int d = 0; d < g.dims; ++d) kdotu += k[d] * out.comp[d].spec[idx];
    kdotu /= k2;
    for (int d = 0; d < g.dims; ++d) out.comp[d].spec[idx] -= k[d] * kdotu;
  });
  SolenoidalField s;
  s.v = std::move(out);
  return s;
}

SolenoidalField stokes_apply(const SolenoidalField& u) {
  SolenoidalField out;
  out.v = to_spectral(u.v);
  const GridTables& t = tables_for(out.grid());
  for (auto& c : out.v.comp)
    kernels::cmul_real(c.spec.data(), t.k2d.data(), c.spec.size());
  return out;
}

SolenoidalField yosida_apply(const SolenoidalField& u, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("yosida eps must be >= 0");
  SolenoidalField out;
  out.v = to_spectral(u.v);
  const GridTables& t = tables_for(out.grid());
  for (auto& c : out.v.comp)
    for (std::size_t i = 0; i < c.spec.size(); ++i)
      c.spec[i] /= 1.0 + eps * t.k2d[i];
  return out;
}

ScalarField dealias(const ScalarField& f) {
  ScalarField out = to_spectral(f);
  dealias_inplace(out);
  return out;
}

void dealias_inplace(ScalarField& f) {
  if (f.rep != Rep::spectral)
    throw std::invalid_argument("dealias_inplace expects spectral rep");
  const GridTables& t = tables_for(f.grid);
  kernels::cmul_real(f.spec.data(), t.mask.data(), f.spec.size());
}

// ---------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------

double integral(const ScalarField& f) {
  require_nonempty(f);
  if (f.rep == Rep::spectral)
    return f.grid.cell_volume() * f.spec[0].real();  // zero mode = sum
  return f.grid.cell_volume() * kernels::sum(f.phys.data(), f.phys.size());
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("grid mismatch");
  const ScalarField ap = to_physical(a);
  const ScalarField bp = to_physical(b);
  return a.grid.cell_volume() *
         kernels::dot(ap.phys.data(), bp.phys.data(), ap.phys.size());
}

double inner(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (int d = 0; d < a.dims(); ++d) s += inner(a.comp[d], b.comp[d]);
  return s;
}

double l2_norm(const ScalarField& f) {
  require_nonempty(f);
  if (f.rep == Rep::physical)
    return std::sqrt(f.grid.cell_volume() *
                     kernels::sum_sq(f.phys.data(), f.phys.size()));
  // Parseval with r2c storage: interior half-axis modes count twice
  const Grid& g = f.grid;
  double s = 0.0;
  for_each_mode(g, [&](std::size_t idx, int, int m1, int m2) {
    const int mlast = g.dims == 2 ? m1 : m2;
    const double w = (mlast == 0 || mlast == g.n / 2) ? 1.0 : 2.0;
    s += w * std::norm(f.spec[idx]);
  });
  return std::sqrt(g.cell_volume() * s / static_cast<double>(g.points()));
}

double l2_norm(const VectorField& v) {
  double s = 0.0;
  for (const auto& c : v.comp) {
    const double x = l2_norm(c);
    s += x * x;
  }
  return std::sqrt(s);
}

double max_val(const ScalarField& f) {
  const ScalarField p = to_physical(f);
  return kernels::max_val(p.phys.data(), p.phys.size());
}

double min_val(const ScalarField& f) {
  const ScalarField p = to_physical(f);
  return kernels::min_val(p.phys.data(), p.phys.size());
}

double max_abs(const ScalarField& f) {
  const ScalarField p = to_physical(f);
  return kernels::max_abs(p.phys.data(), p.phys.size());
}

double max_abs(const VectorField& v) {
  double m = 0.0;
  for (const auto& c : v.comp) m = std::max(m, max_abs(c));
  return m;
}

double solenoidal_residual(const VectorField& v) {
  return max_abs(divergence(v));
}

SolenoidalField SolenoidalField::wrap_checked(VectorField v, double tol) {
  const double res = solenoidal_residual(v);
  const double scale = max_abs(v);
  if (res > tol * scale)
    throw std::runtime_error("vector field is not divergence-free: residual " +
                             std::to_string(res));
  SolenoidalField s;
  s.v = std::move(v);
  return s;
}

bool all_finite(const ScalarField& f) {
  if (f.rep == Rep::physical) {
    for (double x : f.phys)
      if (!std::isfinite(x)) return false;
  } else {
    for (const auto& z : f.spec)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

bool all_finite(const VectorField& v) {
  for (const auto& c : v.comp)
    if (!all_finite(c)) return false;
  return true;
}

// ---------------------------------------------------------------------
// snapshot i/o
// ---------------------------------------------------------------------

void write_snapshot(const std::string& path,
                    const std::vector<const ScalarField*>& comps,
                    double time) {
  if (comps.empty()) throw std::invalid_argument("no components to write");
  std::vector<ScalarField> phys;
  phys.reserve(comps.size());
  for (const ScalarField* f : comps) phys.push_back(to_physical(*f));
  const Grid& g = phys.front().grid;
  for (const auto& f : phys)
    if (!(f.grid == g)) throw std::invalid_argument("grid mismatch");

  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp, "# dims=%d n=%d box=%.17g t=%.17g comps=%zu\n", g.dims, g.n,
               g.box, time, phys.size());
  const std::size_t np = g.points();
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t c = 0; c < phys.size(); ++c)
      std::fprintf(fp, c ? " %.17g" : "%.17g", phys[c].phys[i]);
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) throw std::runtime_error("short write: " + path);
}

void write_snapshot(const std::string& path, const ScalarField& f,
                    double time) {
  write_snapshot(path, std::vector<const ScalarField*>{&f}, time);
}

FieldSnapshot read_snapshot(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "r");
  if (!fp) throw std::runtime_error("cannot open " + path);
  FieldSnapshot snap;
  std::size_t ncomp = 0;
  {
    char header[256];
    if (!std::fgets(header, sizeof(header), fp)) {
      std::fclose(fp);
      throw std::runtime_error("empty snapshot " + path);
    }
    int dims = 0, n = 0;
    double box = 0.0, t = 0.0;
    if (std::sscanf(header, "# dims=%d n=%d box=%lg t=%lg comps=%zu", &dims,
                    &n, &box, &t, &ncomp) != 5) {
      std::fclose(fp);
      throw std::runtime_error("bad snapshot header in " + path);
    }
    snap.grid = Grid{dims, n, box};
    snap.time = t;
  }
  validate(snap.grid);
  snap.comps.assign(ncomp, ScalarField(snap.grid, Rep::physical));
  const std::size_t np = snap.grid.points();
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t c = 0; c < ncomp; ++c)
      if (std::fscanf(fp, "%lg", &snap.comps[c].phys[i]) != 1) {
        std::fclose(fp);
        throw std::runtime_error("truncated snapshot " + path);
      }
  std::fclose(fp);
  return snap;
}

}  // namespace cns
