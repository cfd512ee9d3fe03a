// ============================================================================
//  odi.hpp -- superlinear ODE-comparison machinery and empirical checks
//
//  Closed forms: for z' <= K z^sigma with sigma > 1 the barrier
//      z(t) <= (z0^{1-sigma} - K(sigma-1)(t-t0))^{1/(1-sigma)}
//  blows up at dt* = z0^{1-sigma}/(K(sigma-1)); before that the solution can
//  at most double on a window of length C z0^{1-sigma} with
//  C = (1-2^{1-sigma})/(K(sigma-1)).
//
//  Empirical side: given a recorded trajectory of the functional
//  y = y1^mu + y2 + 1 together with its dissipation and cross-term columns,
//  estimate the smallest constants that make the superlinear inequality
//  y' <= K y^sigma and the term-wise source/dissipation estimates hold at
//  the samples.  Derivatives use second-order stencils.
// ============================================================================
#pragma once

#include <string>
#include <vector>

#include "cns/trajectory.hpp"

namespace cns {

// --- exponent bookkeeping ---------------------------------------------------
// The integrability/window exponents attached to the functional family:
// s1 governs the time integrability of the density part, s2 of the gradient
// part, theta1/theta2_lower the superlinear powers they satisfy, and
// mu = s1/s2 balances the two inside y = y1^mu + y2 + 1.  theta is the
// resulting power in y' <= K y^theta.
struct ExponentTable {
  double p = 0.0;
  double alpha = 0.0;
  double s1 = 0.0;            // 2 / (3(p-1))
  double s2 = 0.0;            // 1 / alpha
  double theta1 = 0.0;        // (2p-1) / (2p-3)
  double theta2_lower = 0.0;  // (alpha+1/2) / (alpha-1/2)
  double mu = 0.0;            // s1 / s2
  double theta1_mu = 0.0;     // (theta1-1)/mu + 1
  double theta = 0.0;         // max{(3mu+2)/(3mu), 3, 1/(2mu)}
};

// domain: p in (3/2, 3], alpha in (1/2, 1]; throws std::invalid_argument
ExponentTable exponents(double p, double alpha);

// --- closed-form comparison -------------------------------------------------
struct ComparisonBound {
  double value = 0.0;   // barrier value; +inf when blown up
  bool blew_up = false;
};

// barrier for z' <= K z^sigma at time t0 + dt; requires z0 > 0, K > 0,
// sigma > 1, dt >= 0 (throws std::invalid_argument otherwise)
ComparisonBound comparison_bound(double z0, double K, double sigma, double dt);

// window length C z0^{1-sigma} over which the solution can at most double
double doubling_window(double z0, double K, double sigma);

// --- empirical inequality constants ------------------------------------------
// second-order derivative estimates on a uniform time grid: centered
// differences at interior points, one-sided stencils at the endpoints
std::vector<double> derivative_samples(const std::vector<double>& t,
                                       const std::vector<double>& v);

// smallest K >= 0 with  dv/dt <= K v^sigma  over the interior samples
// (negative slopes cost nothing; v must be positive)
double estimate_K(const std::vector<double>& t, const std::vector<double>& v,
                  double sigma);
double estimate_K(const Trajectory& traj, double sigma);  // on the y column

// Term-wise empirical constants.  The recorded inequality chain splits the
// derivative of y into dissipative terms and five source terms; for each we
// report the smallest per-sample constant:
//
//   combined:   y' + (y1^{mu-1}(diss_n + diss_c) + diss_u)/C <= C * S,
//               S = y1^{mu-1}(cross_n3_gc2 + cross_n2_gc4 + cross_gc6_gu)
//                   + cross_conv + cross_buoy
//   chemo pair: y1^{mu-1}(cross_n3_gc2 + cross_n2_gc4)
//               <= eta y1^{mu-1}(diss_n + diss_c) + C y^{(3mu+2)/(3mu)}
//   convection: cross_conv <= eta diss_u + C y^3
//   gradients:  y1^{mu-1} cross_gc6_gu <= eta y1^{mu-1} diss_c + C y^3
//   buoyancy:   cross_buoy <= eta diss_u + C y^{1/(2mu)}
struct EtaConstants {
  double eta = 0.0;
  double c_chemo_pair = 0.0;
  double c_convection = 0.0;
  double c_gradient_coupling = 0.0;
  double c_buoyancy = 0.0;
};

struct TermEstimateReport {
  double mu = 0.0;
  double sigma = 3.0;     // power used for k_emp
  double k_emp = 0.0;     // smallest K in y' <= K y^sigma
  double c_combined = 0.0;
  std::vector<EtaConstants> per_eta;
};

// throws std::invalid_argument when the trajectory is too short, is not
// uniformly sampled, or lacks the cross-term columns
TermEstimateReport check_term_estimates(
    const Trajectory& traj,
    const std::vector<double>& etas = {0.1, 0.25, 0.5});

}  // namespace cns
