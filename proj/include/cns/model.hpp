// ============================================================================
//  model.hpp -- the regularized chemotaxis/Navier-Stokes system on the torus
//
//      dn/dt + u.grad n = lap n - div(n F'(n) grad c)
//      dc/dt + u.grad c = lap c - F(n) c
//      du/dt + P[(Y u.grad) u] = lap u + P[n grad phi],   div u = 0
//
//  with F(s) = log(1 + eps s)/eps (F(s) = s at eps = 0), F'(s) = 1/(1+eps s),
//  and Y the Yosida smoothing (1 + eps A)^{-1} of the Stokes operator A.
//
//  Time stepping is IMEX: the diffusion of every field is applied through
//  the exact spectral integrating factor exp(-|k|^2 dt), the remaining
//  terms through an explicit two-stage midpoint rule.  The density advection
//  and chemotaxis flux are kept in divergence form, so the zero mode of n
//  is untouched by the nonlinear terms and mass is conserved to machine
//  accuracy.  All nonlinear products are 2/3-rule dealiased.  Positivity of
//  n and the maximum principle for c are monitored, never enforced.
// ============================================================================
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cns/spectral.hpp"
#include "cns/trajectory.hpp"

namespace cns {

// --- regularization ------------------------------------------------------
double f_eps(double s, double eps);        // log1p(eps*s)/eps, s at eps=0
double f_eps_prime(double s, double eps);  // 1/(1+eps*s)

// --- run configuration ----------------------------------------------------
// Parsed from "key = value" lines ('#' comments allowed) plus later
// overrides.  Unknown keys or malformed values throw std::invalid_argument.
struct RunConfig {
  int dims = 2;
  int n = 64;  // points per axis; "grid" is an accepted config alias, runs need >= 16
  double box = kTwoPi;

  double eps = 0.1;
  double mu = 1.0 / 3.0;
  double kappa = 1.0;

  double dt = 1e-3;
  double t_end = 1.0;
  int sample_stride = 10;
  std::uint64_t seed = 1;

  std::string n0_preset = "gaussian";  // uniform | gaussian | random
  double n0_value = 1.0;               // uniform level
  double n0_mass = 20.0;               // gaussian: requested total mass
  double n0_width = 4.0;               // gaussian: concentration parameter
  std::string c0_preset = "uniform";   // uniform | gaussian
  double c0_value = 1.0;
  double c0_amplitude = 0.5;           // gaussian: bump height over base
  double c0_width = 2.0;
  std::string u0_preset = "zero";      // zero | taylor-green | random
  double u0_amplitude = 0.5;
  std::string phi_preset = "sine";     // zero | sine
  double phi_amplitude = 0.5;
  int phi_axis = 0;

  bool record_cross_terms = true;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key_eq_value);
void validate(const RunConfig& cfg);           // throws std::invalid_argument
std::string canonical_config(const RunConfig& cfg);  // sorted key=value lines
std::string config_hash(const RunConfig& cfg);       // 16 hex digits (fnv1a)

// --- state and initial data ------------------------------------------------
struct SimulationState {
  ScalarField n, c;   // spectral representation while stepping
  SolenoidalField u;
  double t = 0.0;
  double eps = 0.0;
};

SimulationState make_initial_data(const RunConfig& cfg);
// grad phi as an analytic physical-space field (zero field for phi=zero)
VectorField make_grad_phi(const RunConfig& cfg);

// --- right-hand sides (full, diffusion included; spectral, dealiased) ------
ScalarField rhs_n(const SimulationState& s);
ScalarField rhs_c(const SimulationState& s);
SolenoidalField rhs_u(const SimulationState& s, const VectorField& grad_phi);

// the two velocity source terms, exposed separately because the term-wise
// inequality diagnostics must see exactly what the stepper integrates
SolenoidalField convection_term(const SimulationState& s);  // P[(Y u.grad) u]
SolenoidalField buoyancy_term(const SimulationState& s,
                              const VectorField& grad_phi);  // P[n grad phi]

// --- stepping ---------------------------------------------------------------
// CFL number dt*(max|u| + max|F'(n) grad c|)/h of the current state
double cfl_number(const SimulationState& s, double dt);

class Stepper {
 public:
  // grad_phi must be in physical representation on the same grid
  Stepper(const Grid& g, double dt, double eps, VectorField grad_phi);
  void step(SimulationState& s);  // advances s.t by dt
  double dt() const { return dt_; }

 private:
  Grid grid_;
  double dt_;
  double eps_;
  VectorField grad_phi_;
  std::vector<double> e_full_, e_half_;  // heat factors exp(-|k|^2 dt), dt/2
  std::vector<double> yos_;              // 1/(1 + eps |k|^2)
  struct Fields;
  void nonlinear(const ScalarField& ns, const ScalarField& cs,
                 const VectorField& us, ScalarField& out_n, ScalarField& out_c,
                 VectorField& out_u) const;
};

// one standalone step (builds a Stepper internally; tests and small drivers)
void imex_step(SimulationState& s, double dt, const VectorField& grad_phi);

// --- full run ----------------------------------------------------------------
struct SimulationResult {
  Trajectory trajectory;
  SimulationState final_state;
  bool blew_up = false;
  double blow_up_time = 0.0;
};

// Runs t in [0, t_end], recording a FunctionalSample every sample_stride
// steps (t_end is rounded up to a whole number of sample windows so the
// sample spacing stays exactly uniform).  On NaN/Inf the run stops, the
// partial trajectory keeps every completed sample, and blew_up is set.
SimulationResult simulate(const RunConfig& cfg);

}  // namespace cns
