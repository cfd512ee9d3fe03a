// ============================================================================
//  odi.cpp -- ODE comparison closed forms and empirical constant estimation
// ============================================================================
#include "cns/odi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cns {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// y1^{mu-1} weight; a vanishing y1 means the density part of the functional
// is absent and its weighted terms drop out
double density_weight(double y1, double mu) {
  if (mu == 1.0) return 1.0;
  return y1 > 0.0 ? std::pow(y1, mu - 1.0) : 0.0;
}

double spacing_of(const std::vector<double>& t) {
  if (t.size() < 2) throw std::invalid_argument("time grid needs >= 2 samples");
  const double h = t[1] - t[0];
  if (!(h > 0.0)) throw std::invalid_argument("time grid must be increasing");
  const double tol = 1e-9 * std::max(1.0, std::abs(h));
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    if (std::abs((t[k + 1] - t[k]) - h) > tol)
      throw std::invalid_argument("time grid must be uniform");
  }
  return h;
}

}  // namespace

// --- exponent bookkeeping ---------------------------------------------------

ExponentTable exponents(double p, double alpha) {
  if (!(p > 1.5) || !(p <= 3.0))
    throw std::invalid_argument("exponents: p must lie in (3/2, 3]");
  if (!(alpha > 0.5) || !(alpha <= 1.0))
    throw std::invalid_argument("exponents: alpha must lie in (1/2, 1]");
  ExponentTable e;
  e.p = p;
  e.alpha = alpha;
  e.s1 = 2.0 / (3.0 * (p - 1.0));
  e.s2 = 1.0 / alpha;
  e.theta1 = (2.0 * p - 1.0) / (2.0 * p - 3.0);
  e.theta2_lower = (alpha + 0.5) / (alpha - 0.5);
  e.mu = e.s1 / e.s2;
  e.theta1_mu = (e.theta1 - 1.0) / e.mu + 1.0;
  e.theta = std::max({(3.0 * e.mu + 2.0) / (3.0 * e.mu), 3.0, 1.0 / (2.0 * e.mu)});
  return e;
}

// --- closed-form comparison -------------------------------------------------

ComparisonBound comparison_bound(double z0, double K, double sigma, double dt) {
  if (!(z0 > 0.0)) throw std::invalid_argument("comparison_bound: z0 must be > 0");
  if (!(K > 0.0)) throw std::invalid_argument("comparison_bound: K must be > 0");
  if (!(sigma > 1.0))
    throw std::invalid_argument("comparison_bound: sigma must be > 1");
  if (!(dt >= 0.0)) throw std::invalid_argument("comparison_bound: dt must be >= 0");
  const double base = std::pow(z0, 1.0 - sigma) - K * (sigma - 1.0) * dt;
  if (!(base > 0.0)) return {kInf, true};
  return {std::pow(base, 1.0 / (1.0 - sigma)), false};
}

double doubling_window(double z0, double K, double sigma) {
  if (!(z0 > 0.0)) throw std::invalid_argument("doubling_window: z0 must be > 0");
  if (!(K > 0.0)) throw std::invalid_argument("doubling_window: K must be > 0");
  if (!(sigma > 1.0))
    throw std::invalid_argument("doubling_window: sigma must be > 1");
  const double c = (1.0 - std::pow(2.0, 1.0 - sigma)) / (K * (sigma - 1.0));
  return c * std::pow(z0, 1.0 - sigma);
}

// --- empirical inequality constants ------------------------------------------

std::vector<double> derivative_samples(const std::vector<double>& t,
                                       const std::vector<double>& v) {
  if (t.size() != v.size())
    throw std::invalid_argument("derivative_samples: size mismatch");
  if (t.size() < 3)
    throw std::invalid_argument("derivative_samples: need >= 3 samples");
  const double h = spacing_of(t);
  const std::size_t n = v.size();
  std::vector<double> d(n);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
  return d;
}

double estimate_K(const std::vector<double>& t, const std::vector<double>& v,
                  double sigma) {
  if (t.size() != v.size()) throw std::invalid_argument("estimate_K: size mismatch");
  if (t.size() < 3) throw std::invalid_argument("estimate_K: need >= 3 samples");
  if (!(sigma > 0.0)) throw std::invalid_argument("estimate_K: sigma must be > 0");
  const double h = spacing_of(t);
  double k_max = 0.0;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    if (!(v[k] > 0.0))
      throw std::invalid_argument("estimate_K: samples must be positive");
    const double slope = (v[k + 1] - v[k - 1]) / (2.0 * h);
    if (slope <= 0.0) continue;
    k_max = std::max(k_max, slope / std::pow(v[k], sigma));
  }
  return k_max;
}

double estimate_K(const Trajectory& traj, double sigma) {
  std::vector<double> t(traj.samples.size()), y(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    t[k] = traj.samples[k].t;
    y[k] = traj.samples[k].y;
  }
  return estimate_K(t, y, sigma);
}

TermEstimateReport check_term_estimates(const Trajectory& traj,
                                        const std::vector<double>& etas) {
  const auto& s = traj.samples;
  if (s.size() < 3)
    throw std::invalid_argument("check_term_estimates: need >= 3 samples");
  for (const auto& smp : s) {
    if (!smp.cross_present)
      throw std::invalid_argument(
          "check_term_estimates: trajectory lacks cross-term columns "
          "(cross_n3_gc2, cross_n2_gc4, cross_gc6_gu, cross_conv, cross_buoy); "
          "re-run with cross-term recording enabled");
  }
  for (double eta : etas) {
    if (!(eta > 0.0))
      throw std::invalid_argument("check_term_estimates: eta must be > 0");
  }

  const double mu = traj.mu;
  const std::size_t n = s.size();
  std::vector<double> t(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = s[k].t;
    y[k] = s[k].y;
  }
  const std::vector<double> yp = derivative_samples(t, y);

  TermEstimateReport rep;
  rep.mu = mu;
  rep.sigma = std::max({(3.0 * mu + 2.0) / (3.0 * mu), 3.0, 1.0 / (2.0 * mu)});
  rep.k_emp = estimate_K(t, y, rep.sigma);

  // combined bound: y' + D/C <= C * S with weighted dissipation D and source S;
  // the smallest admissible C solves the quadratic C^2 S - C y' - D = 0
  double c_comb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = density_weight(s[k].y1, mu);
    const double d = w * (s[k].diss_n + s[k].diss_c) + s[k].diss_u;
    const double src = w * (s[k].cross_n3_gc2 + s[k].cross_n2_gc4 + s[k].cross_gc6_gu) +
                       s[k].cross_conv + s[k].cross_buoy;
    double ck;
    if (src > 0.0) {
      ck = (yp[k] + std::sqrt(yp[k] * yp[k] + 4.0 * src * d)) / (2.0 * src);
    } else if (d > 0.0) {
      ck = yp[k] < 0.0 ? d / (-yp[k]) : kInf;
    } else {
      ck = yp[k] > 0.0 ? kInf : 0.0;
    }
    c_comb = std::max(c_comb, ck);
  }
  rep.c_combined = c_comb;

  const double pw_chemo = (3.0 * mu + 2.0) / (3.0 * mu);
  const double pw_buoy = 1.0 / (2.0 * mu);
  for (double eta : etas) {
    EtaConstants ec;
    ec.eta = eta;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = density_weight(s[k].y1, mu);
      const double yk = s[k].y;
      const double excess_chemo =
          w * (s[k].cross_n3_gc2 + s[k].cross_n2_gc4) -
          eta * w * (s[k].diss_n + s[k].diss_c);
      const double excess_conv = s[k].cross_conv - eta * s[k].diss_u;
      const double excess_grad = w * s[k].cross_gc6_gu - eta * w * s[k].diss_c;
      const double excess_buoy = s[k].cross_buoy - eta * s[k].diss_u;
      ec.c_chemo_pair =
          std::max(ec.c_chemo_pair, std::max(0.0, excess_chemo) / std::pow(yk, pw_chemo));
      ec.c_convection =
          std::max(ec.c_convection, std::max(0.0, excess_conv) / std::pow(yk, 3.0));
      ec.c_gradient_coupling =
          std::max(ec.c_gradient_coupling, std::max(0.0, excess_grad) / std::pow(yk, 3.0));
      ec.c_buoyancy =
          std::max(ec.c_buoyancy, std::max(0.0, excess_buoy) / std::pow(yk, pw_buoy));
    }
    rep.per_eta.push_back(ec);
  }
  return rep;
}

}  // namespace cns
