// Shared helpers for the test suites.  The oracles here are deliberately
// independent of the library's implementation path: plain loops, no kernel
// dispatch, no FFT.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "cns/spectral.hpp"

namespace testsupport {

// uniform(-1,1) physical field, deterministic per seed
inline cns::ScalarField random_field(const cns::Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  cns::ScalarField f(g, cns::Rep::physical);
  for (auto& x : f.phys) x = u(rng);
  return f;
}

inline cns::SolenoidalField random_solenoidal(const cns::Grid& g,
                                              unsigned seed,
                                              bool band_limited = false) {
  cns::VectorField v;
  for (int d = 0; d < g.dims; ++d) {
    cns::ScalarField c = random_field(g, seed + 1000u * d);
    if (band_limited) c = cns::dealias(c);
    v.comp.push_back(std::move(c));
  }
  return cns::leray_project(v);
}

// fill a physical field from f(x,y[,z])
inline cns::ScalarField fill(const cns::Grid& g,
                             const std::function<double(double, double,
                                                        double)>& f) {
  cns::ScalarField out(g, cns::Rep::physical);
  const double h = g.spacing();
  if (g.dims == 2) {
    std::size_t idx = 0;
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j, ++idx) out.phys[idx] = f(i * h, j * h, 0.0);
  } else {
    std::size_t idx = 0;
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k, ++idx)
          out.phys[idx] = f(i * h, j * h, k * h);
  }
  return out;
}

// quadrature oracle: plain accumulation loop, no kernels
inline double integral_oracle(const cns::ScalarField& f) {
  if (f.rep != cns::Rep::physical)
    throw std::invalid_argument("oracle wants physical rep");
  double s = 0.0;
  for (double x : f.phys) s += x;
  return s * f.grid.cell_volume();
}

// relative L2 distance between two physical fields
inline double rel_l2(const cns::ScalarField& a, const cns::ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.phys.size(); ++i) {
    const double d = a.phys[i] - b.phys[i];
    num += d * d;
    den += a.phys[i] * a.phys[i];
  }
  return std::sqrt(num / (den > 0.0 ? den : 1.0));
}

// ---------------------------------------------------------------------
// adaptive embedded RK45 (Cash-Karp) for scalar ODEs; brute-force oracle
// for the closed-form comparison results.  Returns the trajectory value at
// t_end, or +inf if the state exceeds `ceiling` (numerical blow-up).
// ---------------------------------------------------------------------
inline double ode45(const std::function<double(double, double)>& f, double t0,
                    double z0, double t_end, double rtol = 1e-10,
                    double ceiling = 1e12) {
  static const double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0,
                      a6 = 7.0 / 8;
  static const double b21 = 1.0 / 5;
  static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27,
                      b54 = 35.0 / 27;
  static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512,
                      b63 = 575.0 / 13824, b64 = 44275.0 / 110592,
                      b65 = 253.0 / 4096;
  static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                      c6 = 512.0 / 1771;
  static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                      d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336,
                      d6 = c6 - 1.0 / 4;
  double t = t0, z = z0;
  double h = (t_end - t0) / 100.0;
  int guard = 0;
  while (t < t_end && guard++ < 2000000) {
    if (t + h > t_end) h = t_end - t;
    const double k1 = f(t, z);
    const double k2 = f(t + a2 * h, z + h * b21 * k1);
    const double k3 = f(t + a3 * h, z + h * (b31 * k1 + b32 * k2));
    const double k4 = f(t + a4 * h, z + h * (b41 * k1 + b42 * k2 + b43 * k3));
    const double k5 =
        f(t + a5 * h, z + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
    const double k6 = f(t + a6 * h, z + h * (b61 * k1 + b62 * k2 + b63 * k3 +
                                             b64 * k4 + b65 * k5));
    const double dz = h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
    const double err =
        std::fabs(h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
    const double tol = rtol * (std::fabs(z) + std::fabs(dz) + 1e-300);
    if (err <= tol) {
      t += h;
      z += dz;
      if (!std::isfinite(z) || std::fabs(z) > ceiling)
        return std::numeric_limits<double>::infinity();
    }
    const double f_ = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, f_));
    if (h < 1e-15 * std::max(1.0, std::fabs(t))) {
      // step collapse: the solution is blowing up inside the window
      return std::numeric_limits<double>::infinity();
    }
  }
  return z;
}

}  // namespace testsupport
