// ============================================================================
//  trajectory.hpp -- time series of scalar functionals along a run
//
//  One FunctionalSample row per recorded time.  Cumulative columns are
//  trapezoid-accumulated from the instantaneous integrands by the recorder,
//  so a trajectory is self-contained for the downstream ODE-inequality and
//  covering analyses.  Persisted as delimited text: '#' metadata lines
//  (config hash first), one header row naming the columns, then samples.
// ============================================================================
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cns/spectral.hpp"

namespace cns {

struct FunctionalSample {
  double t = 0.0;
  double y1 = 0.0;  // int n^3 + int |grad c|^6
  double y2 = 0.0;  // int |grad u|^2
  double y = 0.0;   // y1^mu + y2 + 1

  double diss_n = 0.0;  // int |grad n^{3/2}|^2
  double diss_c = 0.0;  // int |grad |grad c|^3|^2
  double diss_u = 0.0;  // int |lap u|^2

  double mass = 0.0;   // int n
  double n_min = 0.0;
  double c_max = 0.0;
  double c_min = 0.0;

  double kinetic = 0.0;        // (1/2) int |u|^2
  double buoyancy_work = 0.0;  // int n u . grad phi

  double quasi_energy = 0.0;   // int n ln n + (1/2) int |grad c|^2/c + kappa int |u|^2
  bool quasi_present = false;  // false when c dips to the floor anywhere

  double diss_nlog = 0.0;   // int |grad n|^2 / n        (floor-filtered)
  double diss_cquot = 0.0;  // int |grad c|^4 / c^3      (floor-filtered)

  double inst_grad_sqrtn = 0.0;  // int |grad sqrt(n)|^2
  double inst_hessc = 0.0;       // int |D^2 c|^2 / c    (floor-filtered)

  double cum_grad_sqrtn = 0.0;  // time integral of inst_grad_sqrtn
  double cum_hessc = 0.0;       // time integral of inst_hessc
  double cum_gradu = 0.0;       // time integral of y2

  // cross terms consumed by the term-wise inequality estimates
  double cross_n3_gc2 = 0.0;  // int n^3 |grad c|^2
  double cross_n2_gc4 = 0.0;  // int n^2 |grad c|^4
  double cross_gc6_gu = 0.0;  // int |grad c|^6 |grad u|
  double cross_conv = 0.0;    // |<lap u, P[(Y_eps u . grad) u]>|
  double cross_buoy = 0.0;    // |<lap u, P[n grad phi]>|
  bool cross_present = false;

  long floor_hits = 0;  // grid points excluded by the c floor
  long clip_hits = 0;   // grid points with n < 0 clipped in n ln n / sqrt n
};

struct Trajectory {
  std::vector<FunctionalSample> samples;

  // provenance
  std::string config_hash;  // 16 hex digits
  Grid grid{};
  double eps = 0.0;
  double mu = 1.0 / 3.0;
  double kappa = 1.0;
  double dt = 0.0;
  int sample_stride = 1;
  bool synthetic = false;

  // run health
  bool blow_up = false;
  double cfl_max = 0.0;
  double mass_drift_max = 0.0;    // max |mass(t) - mass(0)| / max(1,|mass(0)|)
  double c_overshoot_max = 0.0;   // max (c_max(t) - c_max(0))
  double n_undershoot_max = 0.0;  // max (-n_min(t))

  double spacing() const;          // uniform sample spacing
  bool spacing_uniform(double tol = 1e-9) const;
};

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace cns
