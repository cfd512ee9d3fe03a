// ============================================================================
//  report.hpp -- analysis pipelines behind the command-line reports
//
//  Three consumers share this layer: the CLI subcommands, the acceptance
//  suite, and the golden-file tests.  Everything here is a pure function of
//  a Trajectory plus explicit request parameters, so reports are
//  reproducible byte for byte: no clocks, no hostnames, no pointers.
//
//  The dimension pipeline chains the covering machinery end to end:
//  certify the z column discretely in L^s, propagate the regular set with
//  windows C z^{-a}, cover the singular remainder at each mesh delta,
//  tabulate the premeasures at d = 1 - s/a, fit the decay slope of
//  log premeasure against log delta, and emit a verdict.  "consistent with
//  H^d = 0" requires a clearly positive fitted slope (premeasure decaying
//  under refinement); anything flat, growing, or too short to fit is
//  "inconclusive".  An empty singular set is consistent outright.
// ============================================================================
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cns/hausdorff.hpp"
#include "cns/odi.hpp"
#include "cns/trajectory.hpp"

namespace cns {

// --- verify-odi -------------------------------------------------------------
struct OdiReport {
  std::string config_hash;
  double sigma = 3.0;
  double k_emp = 0.0;        // smallest K in y' <= K y^sigma at the samples
  ExponentTable exponents;   // for the requested (p, alpha)
  bool terms_present = false;
  TermEstimateReport terms;  // populated when the cross columns exist
  std::vector<std::string> omissions;  // columns missing from the trajectory
};

// Builds the report; throws std::invalid_argument on unusable trajectories
// (fewer than three samples, nonuniform spacing, nonpositive y).  Missing
// cross-term columns are not an error: the term block is omitted and the
// omissions list names the absent columns.
OdiReport verify_odi(const Trajectory& traj, double sigma, double p,
                     double alpha, const std::vector<double>& etas);

// --- estimate-dimension -------------------------------------------------------
struct DimensionRequest {
  double s = 1.0;  // integrability exponent certified on the z column
  double a = 2.0;  // window exponent: z regular at t spares (t, t + C z^{-a})
  double C = 1.0;
  std::vector<double> deltas;             // cover meshes, need at least two
  std::optional<double> seed_threshold;   // default: every sample is a seed
  std::optional<double> tail_start;       // override the tail policy
  bool disable_tail = false;              // force no tail even when synthetic
};

struct DimensionRow {
  double delta = 0.0;
  std::size_t pieces = 0;
  double premeasure = 0.0;
};

struct DimensionReport {
  std::string config_hash;
  double s = 0.0, a = 0.0, C = 0.0;
  double d = 0.0;         // 1 - s/a
  double ls_value = 0.0;  // discrete L^s norm of the z column (certificate)
  std::optional<double> tail_start;
  bool empty_seeds = false;
  bool boundary_flagged = false;
  std::size_t singular_samples = 0;
  std::size_t singular_components = 0;
  std::vector<DimensionRow> table;  // one row per requested delta
  double decay_slope = 0.0;  // fitted d log premeasure / d log delta
  std::string verdict;       // "consistent with H^d = 0" | "inconclusive"
};

// least-squares slope of log premeasure against log delta over the rows with
// positive premeasure; 0 when fewer than two such rows
double fitted_decay_slope(const std::vector<DimensionRow>& table);

// verdict rule shared by the CLI and the acceptance suite: consistent when
// every premeasure is zero, or when the fitted decay slope exceeds the margin
std::string dimension_verdict(const std::vector<DimensionRow>& table,
                              double slope_margin = 0.05);

// Runs the full pipeline on the trajectory's y column (z := y >= 1).
// Throws std::invalid_argument when a <= s (the exponent bound is empty),
// when fewer than two deltas are given, or when the trajectory is unusable.
// Tail policy: synthetic trajectories declare the last quarter of the
// horizon regular unless overridden; PDE trajectories have no tail.
DimensionReport estimate_dimension(const Trajectory& traj,
                                   const DimensionRequest& req);

// --- analyze ------------------------------------------------------------------
struct TrajectorySummary {
  std::string config_hash;
  std::size_t samples = 0;
  double t_first = 0.0, t_last = 0.0, spacing = 0.0;
  bool synthetic = false, blow_up = false;
  double y_first = 0.0, y_last = 0.0, y_min = 0.0, y_max = 0.0;
  double mass_first = 0.0, mass_last = 0.0;
  double kinetic_first = 0.0, kinetic_last = 0.0;
  double cfl_max = 0.0, mass_drift_max = 0.0;
  double c_overshoot_max = 0.0, n_undershoot_max = 0.0;
  long floor_hits_total = 0, clip_hits_total = 0;
  bool cross_present = false, quasi_present = false;
  bool energy_present = false;  // balance requires at least two samples
  double energy_residual_rel = 0.0;
};

TrajectorySummary summarize(const Trajectory& traj);

// --- serialization --------------------------------------------------------
// JSON text (two-space indent, trailing newline); field order is fixed by
// construction so identical inputs serialize identically
std::string to_json(const OdiReport& rep);
std::string to_json(const DimensionReport& rep);
std::string to_json(const TrajectorySummary& rep);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace cns
