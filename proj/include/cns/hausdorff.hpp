// ============================================================================
//  hausdorff.hpp -- regular-set propagation, singular covers, premeasures
//
//  Given a sampled scalar trajectory z >= 1 and a window rule
//      z regular at t  =>  (t, t + C z^{-a}(t)) regular,
//  propagate candidate regular times forward, report the complement as the
//  candidate singular set, cover it greedily with intervals no longer than a
//  mesh delta, and tabulate d-dimensional premeasures Sum length^d.  When z
//  is discretely L^s and a > s, the premeasure at d = 1 - s/a should vanish
//  under mesh refinement; that exponent is dimension_bound(s, a).
//
//  Propagation is conservative at the sampling resolution: a window is only
//  trusted as far as the data supports it, so the effective z across one
//  sample gap is the larger of the two neighboring samples.  Since that
//  running maximum makes nearer anchors always dominate farther ones, the
//  sweep advances one sample at a time.
// ============================================================================
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cns/trajectory.hpp"

namespace cns {

// exponent of the vanishing premeasure: 1 - s/a; requires a > s > 0
double dimension_bound(double s, double a);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// --- regular-set propagation -------------------------------------------------
struct RegularSet {
  double horizon = 0.0;          // T: samples live in [0, T]
  std::vector<double> t;         // uniform sample times
  std::vector<char> regular;     // per-sample verdict
  std::optional<double> tail_start;  // T*: (T*, T) regular by fiat
  bool empty_seeds = false;      // no usable seeds: set is empty, caller warns

  std::vector<Interval> intervals() const;            // open regular components
  std::vector<Interval> singular_components() const;  // closed complement runs
  double spacing() const;
};

// Sweep forward from the seed times: sample k+1 is regular when sample k is
// and the window C z_eff^{-a} clears the sample gap, with the conservative
// z_eff = max(z_k, z_{k+1}).  Requires uniform t, z >= 1, C > 0, a > 0.
// Empty (or no matching) seeds yield an all-singular set with empty_seeds set.
RegularSet propagate_regular_set(const std::vector<double>& t,
                                 const std::vector<double>& z, double C,
                                 double a, const std::vector<double>& seeds,
                                 std::optional<double> tail_start = std::nullopt);

// --- covering ----------------------------------------------------------------
struct CoverEstimate {
  std::vector<Interval> pieces;  // each length in (0, delta]
  double delta = 0.0;
  bool boundary_flagged = false;     // some component had no regular left anchor
  std::size_t components_covered = 0;
  // the premeasure is evaluated per caller-chosen d via premeasure(); callers
  // that persist one exponent may record it here
  double d = -1.0;
  double premeasure_value = -1.0;
};

// Greedy left-anchored sweep over the singular components of reg.  Each batch
// anchors at the regular sample immediately left of the component (at the
// sample 0 with a boundary flag when there is none), uses the natural length
// max{C z^{-a}(anchor), span past the component}, splits to pieces of at most
// delta, and absorbs later components that the laid span already covers.
CoverEstimate cover_singular_set(const RegularSet& reg,
                                 const std::vector<double>& z, double C,
                                 double a, double delta);

// Sum length^d over the cover; d >= 0 required (d = 0 counts pieces)
double premeasure(const CoverEstimate& cover, double d);

// --- box-counting oracle -------------------------------------------------------
// occupied boxes of size delta, and the least-squares slope of log N(delta)
// against log(1/delta) over the given scales
std::size_t box_count(const std::vector<double>& points, double delta);
double box_counting_dimension(const std::vector<double>& points,
                              const std::vector<double>& scales);

// --- synthetic trajectories ----------------------------------------------------
// z(t) = baseline + Sum_i |t - sigma_i|^{-beta}, capped; the uncapped profile
// is L^s-integrable near each singular time exactly when s beta < 1
struct SynthSpec {
  std::vector<double> singular_times;
  double horizon = 1.0;
  double h = 1e-3;          // sample spacing
  double baseline = 1.0;
  double beta = 0.45;
  double cap = 1e6;
  double ls_exponent = 0.0;  // > 0 requests an L^s certificate at synthesis
};

struct SyntheticTrajectory {
  std::vector<double> t;
  std::vector<double> z;
  SynthSpec spec;
};

// Deterministic sampled profile.  Requesting an L^s certificate with
// s beta >= 1 is rejected (the profile is not L^s near its singular times,
// so no certificate can exist).
SyntheticTrajectory synthesize(const SynthSpec& spec);

// endpoints of the level-L middle-thirds construction on [lo, hi], sorted
std::vector<double> cantor_endpoints(int level, double lo = 0.0,
                                     double hi = 1.0);

// wrap a synthetic profile as a Trajectory (y = z, cross terms absent)
Trajectory to_trajectory(const SyntheticTrajectory& synth);

}  // namespace cns
