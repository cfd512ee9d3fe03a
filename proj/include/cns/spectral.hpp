// ============================================================================
//  spectral.hpp -- periodic pseudo-spectral core
//
//  Fields live on a uniform torus grid [0, box)^dims, dims in {2, 3}, with
//  the same even point count n per axis.  A field carries exactly one active
//  representation: physical values (row-major, n^dims doubles) or r2c
//  spectral coefficients (last axis halved to n/2+1 complex entries).
//
//  Conventions, fixed across the whole artifact:
//    * forward transform is unnormalized, the inverse carries 1/n per axis;
//    * integrals are (box/n)^dims times the sum of grid values;
//    * wavenumber on axis j is (2*pi/box)*m, integer mode m in [-n/2, n/2];
//    * every odd-order derivative operator (grad, divergence, and the
//      direction vectors inside the Leray projector) zeroes the Nyquist
//      plane |m| = n/2, and laplacian/stokes use the same zeroed spectrum,
//      so div(grad f) == laplacian f and div(leray v) == 0 hold exactly on
//      every mode.  The time stepper's diffusion factor uses the full
//      spectrum instead (a real even multiplier, safe under conjugate
//      symmetry), so unresolved Nyquist content is still damped physically.
//    * dealiasing is the 2/3 rule: modes with any |m| > n/3 are zeroed.
// ============================================================================
#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace cns {

inline constexpr double kTwoPi = 6.28318530717958647692528676655900577;

struct Grid {
  int dims = 2;       // 2 or 3
  int n = 64;         // points per axis, even, >= 8
  double box = kTwoPi;

  std::size_t points() const;         // n^dims
  std::size_t spectral_size() const;  // n^(dims-1) * (n/2+1)
  double spacing() const { return box / n; }
  double cell_volume() const;
  bool operator==(const Grid&) const = default;
};

// throws std::invalid_argument on unsupported dims / odd or tiny n / box <= 0
void validate(const Grid& g);

enum class Rep { physical, spectral };

struct ScalarField {
  Grid grid;
  Rep rep = Rep::physical;
  std::vector<double> phys;                // active when rep == physical
  std::vector<std::complex<double>> spec;  // active when rep == spectral

  ScalarField() = default;
  ScalarField(const Grid& g, Rep r);
};

struct VectorField {
  std::vector<ScalarField> comp;  // grid.dims components

  const Grid& grid() const { return comp.front().grid; }
  int dims() const { return static_cast<int>(comp.size()); }
};

VectorField make_vector_field(const Grid& g, Rep r);

// A vector field certified divergence-free in the discrete (Nyquist-zeroed)
// metric.  Produced by leray_project / stokes_apply / yosida_apply, or by
// wrap_checked which enforces max|div| <= tol * max|u| and throws otherwise.
struct SolenoidalField {
  VectorField v;

  static SolenoidalField wrap_checked(VectorField v, double tol = 1e-10);
  const Grid& grid() const { return v.grid(); }
};

// --- representation ----------------------------------------------------
ScalarField to_spectral(const ScalarField& f);
ScalarField to_physical(const ScalarField& f);
VectorField to_physical(const VectorField& v);
VectorField to_spectral(const VectorField& v);

// --- calculus (results returned in spectral representation) ------------
VectorField grad(const ScalarField& f);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
VectorField laplacian(const VectorField& v);
SolenoidalField leray_project(const VectorField& v);
SolenoidalField stokes_apply(const SolenoidalField& u);   // A u = -P(lap u)
SolenoidalField yosida_apply(const SolenoidalField& u, double eps);
ScalarField dealias(const ScalarField& f);
void dealias_inplace(ScalarField& f);

// --- quadrature and norms ----------------------------------------------
double integral(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double l2_norm(const ScalarField& f);  // physical and spectral agree (Parseval)
double l2_norm(const VectorField& v);
double max_val(const ScalarField& f);
double min_val(const ScalarField& f);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& v);
double solenoidal_residual(const VectorField& v);  // max|div v|
bool all_finite(const ScalarField& f);
bool all_finite(const VectorField& v);

// --- snapshot i/o -------------------------------------------------------
// Delimited text, one grid point per row (components as columns), row-major,
// preceded by a single header line carrying dims, points per axis, box
// length and time.
struct FieldSnapshot {
  Grid grid;
  double time = 0.0;
  std::vector<ScalarField> comps;  // physical representation
};

void write_snapshot(const std::string& path,
                    const std::vector<const ScalarField*>& comps, double time);
void write_snapshot(const std::string& path, const ScalarField& f, double time);
FieldSnapshot read_snapshot(const std::string& path);

// --- mode iteration helper ----------------------------------------------
// Calls f(flat_index, m0, m1, m2) over the r2c spectral layout.  Axis
// dims-1 is the half axis: its mode is always >= 0.  For dims == 2 the
// half-axis mode arrives in m1 and m2 is 0.  Full axes fold i -> i - n for
// i > n/2, so their Nyquist mode arrives as +n/2.
template <class F>
void for_each_mode(const Grid& g, F&& f) {
  const int n = g.n;
  const int nc = n / 2 + 1;
  auto fold = [n](int i) { return i <= n / 2 ? i : i - n; };
  std::size_t idx = 0;
  if (g.dims == 2) {
    for (int i0 = 0; i0 < n; ++i0) {
      const int m0 = fold(i0);
      for (int i1 = 0; i1 < nc; ++i1, ++idx) f(idx, m0, i1, 0);
    }
  } else {
    for (int i0 = 0; i0 < n; ++i0) {
      const int m0 = fold(i0);
      for (int i1 = 0; i1 < n; ++i1) {
        const int m1 = fold(i1);
        for (int i2 = 0; i2 < nc; ++i2, ++idx) f(idx, m0, m1, i2);
      }
    }
  }
}

}  // namespace cns
