// ============================================================================
//  diagnostics.hpp -- functionals of a state, trajectory norms, residuals
//
//  compute_functionals evaluates every scalar the downstream analyses need
//  from one snapshot of the system.  Quotient diagnostics use a fixed
//  c-floor: grid points with c below the floor are excluded and counted,
//  and the quasi-energy is reported absent if the floor is hit at all.
//  Monitored-but-never-enforced bounds (positivity of n, maximum principle
//  for c, mass conservation) use the pinned tolerances below; the recorder
//  tracks their worst violations in the trajectory metadata.
// ============================================================================
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cns/model.hpp"
#include "cns/trajectory.hpp"

namespace cns {

inline constexpr double kCFloor = 1e-10;          // quotient exclusion floor
inline constexpr double kPositivityTol = 1e-6;    // n >= -tol
inline constexpr double kMaxPrincipleTol = 1e-6;  // c_max(t) <= c_max(0)+tol
inline constexpr double kMassRelTol = 1e-10;      // per-run relative drift

FunctionalSample compute_functionals(const SimulationState& s,
                                     const VectorField& grad_phi, double mu,
                                     double kappa, bool cross_terms);

// Accumulates samples with trapezoid updates of the cumulative columns and
// tracks monitor violations in the trajectory metadata.
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(Trajectory& out, bool cross_terms = true)
      : out_(out), cross_(cross_terms) {}
  void record(const SimulationState& s, const VectorField& grad_phi);

 private:
  Trajectory& out_;
  bool cross_ = true;
  double base_mass_ = 0.0;
  double base_cmax_ = 0.0;
  bool first_ = true;
};

// column-name access into FunctionalSample (throws on unknown name)
const std::vector<std::string>& trajectory_columns();
double sample_column(const FunctionalSample& s, const std::string& name);

// composite trapezoid L^s norm of a column over the sample window:
// (sum_k w_k h |v_k|^s)^{1/s} with half weights at the ends
double ls_norm(const std::vector<double>& v, double spacing, double s);
double ls_norm(const Trajectory& traj, const std::string& column, double s);

// discrete residual of the kinetic energy balance over [t_i0, t_i1]:
//   [kin(t1) + int_{t0}^{t1} y2 dt] - [kin(t0) + int_{t0}^{t1} buoyancy dt]
// (equality for smooth solutions; <= 0 signals the weak-solution inequality)
struct EnergyBalance {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // lhs - rhs
  double relative = 0.0;  // |residual| / scale of the balance
};
EnergyBalance energy_residual(const Trajectory& traj, std::size_t i0,
                              std::size_t i1);

// fitted dissipation constant for the quasi-energy decay property:
// smallest K >= 1 with  d/dt quasi + (1/K)(D_log + D_quot + y2) <= K
// at a given fraction of interior samples (derivatives by centered
// differences); returns +inf if the quasi column is absent anywhere
double fit_quasi_dissipation_constant(const Trajectory& traj,
                                      double fraction = 0.99);

}  // namespace cns
