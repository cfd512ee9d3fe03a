#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cns/model.hpp"
#include "cns/odi.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cns;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// uniform samples of an analytic function on [t0, t1]
void sample_fn(double t0, double t1, double h,
               const std::function<double(double)>& f, std::vector<double>& t,
               std::vector<double>& v) {
  const int n = static_cast<int>(std::llround((t1 - t0) / h));
  t.resize(n + 1);
  v.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    t[k] = t0 + k * h;
    v[k] = f(t[k]);
  }
}

// minimal synthetic trajectory wrapping a y(t) series
Trajectory traj_of(const std::vector<double>& t, const std::vector<double>& y) {
  Trajectory traj;
  traj.synthetic = true;
  for (std::size_t k = 0; k < t.size(); ++k) {
    FunctionalSample s;
    s.t = t[k];
    s.y = y[k];
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace

// ---------------------------------------------------------------------------
TEST_CASE("exponent table: pinned corner values") {
  // p = 3, alpha = 1: the endpoint pair
  const ExponentTable a = exponents(3.0, 1.0);
  CHECK(a.s1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(a.s2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.theta1 == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(a.theta2_lower == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(a.mu == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(a.theta1_mu == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(a.theta == doctest::Approx(3.0).epsilon(1e-15));

  // p = 2, alpha = 3/4: an interior pair
  const ExponentTable b = exponents(2.0, 0.75);
  CHECK(b.s1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(b.s2 == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(b.theta1 == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(b.theta2_lower == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(b.mu == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.theta1_mu == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(b.theta == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("exponent table: dimension identities across the domain") {
  // the two dimension expressions reduce to closed forms
  //   1 - s1/(theta1 - 1) = p/(3(p-1)),   1 - s2/(theta2_lower - 1) = 1/(2 alpha),
  // each decreasing toward 1/2 as (p, alpha) -> (3, 1); the corner is where
  // both families meet the 1/2 line
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> up(1.51, 3.0), ua(0.51, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double p = up(rng), alpha = ua(rng);
    const ExponentTable e = exponents(p, alpha);
    const double d1 = 1.0 - e.s1 / (e.theta1 - 1.0);
    const double d2 = 1.0 - e.s2 / (e.theta2_lower - 1.0);
    CHECK(d1 == doctest::Approx(p / (3.0 * (p - 1.0))).epsilon(1e-12));
    CHECK(d2 == doctest::Approx(1.0 / (2.0 * alpha)).epsilon(1e-12));
    CHECK(d1 >= 0.5);
    CHECK(d2 >= 0.5);
    CHECK(e.theta >= 3.0);
    CHECK(e.mu > 0.0);
  }
  const ExponentTable corner = exponents(3.0, 1.0);
  CHECK(1.0 - corner.s1 / (corner.theta1 - 1.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(1.0 - corner.s2 / (corner.theta2_lower - 1.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("exponent table: domain errors") {
  CHECK_THROWS_AS(exponents(1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(exponents(3.0001, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(exponents(2.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(exponents(2.0, 1.0001), std::invalid_argument);
}

// ---------------------------------------------------------------------------
TEST_CASE("comparison bound: pinned values and blow-up detection") {
  // dt = 0 returns the initial value exactly
  CHECK(comparison_bound(3.7, 2.0, 2.5, 0.0).value == doctest::Approx(3.7));

  // sigma = 2, K = 1, z0 = 1: z(t) <= 1/(1 - t); at dt = 1/2 the bound is 2
  const ComparisonBound b2 = comparison_bound(1.0, 1.0, 2.0, 0.5);
  CHECK_FALSE(b2.blew_up);
  CHECK(b2.value == doctest::Approx(2.0).epsilon(1e-14));

  // sigma = 3, K = 1, z0 = 1: blow-up time is exactly 1/2
  const ComparisonBound b3 = comparison_bound(1.0, 1.0, 3.0, 0.5);
  CHECK(b3.blew_up);
  CHECK(b3.value == kInf);

  // just before the blow-up time: (1 - 2*0.4)^{-1/2} = sqrt(5)
  const ComparisonBound b4 = comparison_bound(1.0, 1.0, 3.0, 0.4);
  CHECK_FALSE(b4.blew_up);
  CHECK(b4.value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));

  CHECK_THROWS_AS(comparison_bound(0.0, 1.0, 2.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(comparison_bound(1.0, 0.0, 2.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(comparison_bound(1.0, 1.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(comparison_bound(1.0, 1.0, 2.0, -0.1), std::invalid_argument);
}

TEST_CASE("comparison bound: brute-force ODE oracle") {
  // z' = K z^sigma saturates the bound, so an adaptive integrator must land
  // on the closed form; checked up to 90% of the blow-up time
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> us(1.5, 3.5), uk(0.2, 5.0),
      uz(0.5, 4.0);
  for (int i = 0; i < 50; ++i) {
    const double sigma = us(rng), K = uk(rng), z0 = uz(rng);
    const double t_star = std::pow(z0, 1.0 - sigma) / (K * (sigma - 1.0));
    const double dt = 0.9 * t_star;
    const double ref = testsupport::ode45(
        [&](double, double z) { return K * std::pow(z, sigma); }, 0.0, z0, dt);
    const ComparisonBound b = comparison_bound(z0, K, sigma, dt);
    REQUIRE_FALSE(b.blew_up);
    CHECK(b.value == doctest::Approx(ref).epsilon(1e-6));
  }

  // past the blow-up time both sides report escape
  for (int i = 0; i < 5; ++i) {
    const double sigma = us(rng), K = uk(rng), z0 = uz(rng);
    const double t_star = std::pow(z0, 1.0 - sigma) / (K * (sigma - 1.0));
    const double big = testsupport::ode45(
        [&](double, double z) { return K * std::pow(z, sigma); }, 0.0, z0,
        1.05 * t_star);
    CHECK(big == kInf);
    CHECK(comparison_bound(z0, K, sigma, 1.05 * t_star).blew_up);
  }
}

TEST_CASE("doubling window: pinned value, doubling relation, scale law") {
  // sigma = 3, K = 1, z0 = 1: (1 - 2^{-2})/2 = 3/8
  CHECK(doubling_window(1.0, 1.0, 3.0) == doctest::Approx(0.375).epsilon(1e-15));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> us(1.2, 4.0), uk(0.1, 10.0),
      uz(0.5, 20.0);
  for (int i = 0; i < 100; ++i) {
    const double sigma = us(rng), K = uk(rng), z0 = uz(rng);
    const double w = doubling_window(z0, K, sigma);
    CHECK(w > 0.0);
    // the bound evaluated at the window end is exactly 2 z0
    const ComparisonBound b = comparison_bound(z0, K, sigma, w);
    REQUIRE_FALSE(b.blew_up);
    CHECK(b.value == doctest::Approx(2.0 * z0).epsilon(1e-12));
    // scale law: window(lambda z0) = lambda^{1-sigma} window(z0)
    const double lam = 3.5;
    CHECK(doubling_window(lam * z0, K, sigma) ==
          doctest::Approx(std::pow(lam, 1.0 - sigma) * w).epsilon(1e-13));
    // monotonicity: larger state or stronger forcing shortens the window
    CHECK(doubling_window(2.0 * z0, K, sigma) < w);
    CHECK(doubling_window(z0, 2.0 * K, sigma) < w);
  }
  CHECK_THROWS_AS(doubling_window(1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(doubling_window(-1.0, 1.0, 2.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
TEST_CASE("derivative samples: exact on quadratics, errors on bad grids") {
  std::vector<double> t, v;
  sample_fn(0.0, 1.0, 0.1, [](double x) { return 3.0 * x * x - x + 2.0; }, t, v);
  const std::vector<double> d = derivative_samples(t, v);
  REQUIRE(d.size() == v.size());
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(d[k] == doctest::Approx(6.0 * t[k] - 1.0).epsilon(1e-10));

  std::vector<double> bad_t = {0.0, 0.1, 0.25, 0.3};
  std::vector<double> bad_v = {1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(derivative_samples(bad_t, bad_v), std::invalid_argument);
  CHECK_THROWS_AS(derivative_samples({0.0, 0.1}, {1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("estimate_K: analytic cubic-growth fixture") {
  // y(t) = (1 - 2t)^{-1/2} solves y' = y^3 exactly, so K = 1
  const auto y = [](double x) { return 1.0 / std::sqrt(1.0 - 2.0 * x); };
  std::vector<double> t, v;
  sample_fn(0.0, 0.4, 1e-4, y, t, v);
  const double k1 = estimate_K(t, v, 3.0);
  CHECK(k1 >= 0.99);
  CHECK(k1 <= 1.01);

  // halving h improves the estimate at second order
  std::vector<double> t2, v2;
  sample_fn(0.0, 0.4, 2e-4, y, t2, v2);
  const double k2 = estimate_K(t2, v2, 3.0);
  CHECK(std::fabs(k1 - 1.0) < std::fabs(k2 - 1.0));
  CHECK(std::fabs(k2 - 1.0) / std::fabs(k1 - 1.0) ==
        doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("estimate_K: flat and decreasing series cost nothing") {
  std::vector<double> t, v;
  sample_fn(0.0, 1.0, 0.01, [](double) { return 5.0; }, t, v);
  CHECK(estimate_K(t, v, 3.0) == 0.0);

  sample_fn(0.0, 1.0, 0.01, [](double x) { return 2.0 + std::exp(-x); }, t, v);
  CHECK(estimate_K(t, v, 3.0) == 0.0);

  CHECK_THROWS_AS(estimate_K({0.0, 0.1}, {1.0, 2.0}, 3.0),
                  std::invalid_argument);
  sample_fn(0.0, 1.0, 0.01, [](double x) { return x - 0.5; }, t, v);
  CHECK_THROWS_AS(estimate_K(t, v, 3.0), std::invalid_argument);  // nonpositive
}

TEST_CASE("estimate_K: trajectory wrapper matches the raw series") {
  const auto y = [](double x) { return 1.0 / std::sqrt(1.0 - 2.0 * x); };
  std::vector<double> t, v;
  sample_fn(0.0, 0.3, 1e-3, y, t, v);
  const Trajectory traj = traj_of(t, v);
  CHECK(estimate_K(traj, 3.0) == doctest::Approx(estimate_K(t, v, 3.0)));
}

// ---------------------------------------------------------------------------
TEST_CASE("term estimates: homogeneous rest state has zero constants") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 16;
  cfg.n0_preset = "uniform";
  cfg.n0_value = 1.0;
  cfg.c0_preset = "uniform";
  cfg.c0_value = 1.0;
  cfg.u0_preset = "zero";
  cfg.phi_preset = "zero";
  cfg.dt = 1e-3;
  cfg.t_end = 0.05;
  cfg.sample_stride = 10;
  const SimulationResult res = simulate(cfg);
  REQUIRE_FALSE(res.blew_up);
  REQUIRE(res.trajectory.samples.size() >= 3);

  const TermEstimateReport rep = check_term_estimates(res.trajectory);
  CHECK(rep.mu == doctest::Approx(cfg.mu));
  CHECK(rep.sigma == doctest::Approx(3.0));
  CHECK(rep.k_emp == 0.0);
  CHECK(rep.c_combined == 0.0);
  REQUIRE(rep.per_eta.size() == 3);
  for (const EtaConstants& ec : rep.per_eta) {
    CHECK(ec.c_chemo_pair == 0.0);
    CHECK(ec.c_convection == 0.0);
    CHECK(ec.c_gradient_coupling == 0.0);
    CHECK(ec.c_buoyancy == 0.0);
  }
}

TEST_CASE("term estimates: active run gives finite eta-monotone constants") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.n0_preset = "gaussian";
  cfg.n0_mass = 20.0;
  cfg.c0_preset = "gaussian";
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.3;
  cfg.phi_preset = "sine";
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  cfg.sample_stride = 10;
  const SimulationResult res = simulate(cfg);
  REQUIRE_FALSE(res.blew_up);

  const TermEstimateReport rep = check_term_estimates(res.trajectory);
  CHECK(std::isfinite(rep.c_combined));
  CHECK(rep.c_combined >= 0.0);
  CHECK(std::isfinite(rep.k_emp));
  REQUIRE(rep.per_eta.size() == 3);
  // a larger dissipation budget can only shrink the leftover constant
  for (std::size_t i = 0; i + 1 < rep.per_eta.size(); ++i) {
    CHECK(rep.per_eta[i].eta < rep.per_eta[i + 1].eta);
    CHECK(rep.per_eta[i + 1].c_chemo_pair <= rep.per_eta[i].c_chemo_pair);
    CHECK(rep.per_eta[i + 1].c_convection <= rep.per_eta[i].c_convection);
    CHECK(rep.per_eta[i + 1].c_gradient_coupling <=
          rep.per_eta[i].c_gradient_coupling);
    CHECK(rep.per_eta[i + 1].c_buoyancy <= rep.per_eta[i].c_buoyancy);
  }
  for (const EtaConstants& ec : rep.per_eta) {
    CHECK(std::isfinite(ec.c_chemo_pair));
    CHECK(std::isfinite(ec.c_convection));
    CHECK(std::isfinite(ec.c_gradient_coupling));
    CHECK(std::isfinite(ec.c_buoyancy));
  }

  // and the combined constant actually closes the inequality at every sample:
  // y' + D/C <= C S within roundoff slack
  const auto& s = res.trajectory.samples;
  std::vector<double> t(s.size()), y(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) t[k] = s[k].t, y[k] = s[k].y;
  const std::vector<double> yp = derivative_samples(t, y);
  const double C = rep.c_combined * (1.0 + 1e-12) + 1e-300;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double w = std::pow(s[k].y1, rep.mu - 1.0);
    const double d = w * (s[k].diss_n + s[k].diss_c) + s[k].diss_u;
    const double src = w * (s[k].cross_n3_gc2 + s[k].cross_n2_gc4 +
                            s[k].cross_gc6_gu) +
                       s[k].cross_conv + s[k].cross_buoy;
    CHECK(yp[k] + d / C <= C * src + 1e-9 * (1.0 + std::fabs(yp[k]) + d));
  }
}

TEST_CASE("term estimates: input validation") {
  // cross terms disabled: named, actionable error
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 16;
  cfg.record_cross_terms = false;
  cfg.dt = 1e-3;
  cfg.t_end = 0.03;
  cfg.sample_stride = 10;
  const SimulationResult res = simulate(cfg);
  try {
    check_term_estimates(res.trajectory);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cross_n3_gc2") != std::string::npos);
    CHECK(msg.find("cross_buoy") != std::string::npos);
  }

  // too short
  Trajectory tiny = traj_of({0.0, 0.1}, {1.0, 1.0});
  for (auto& smp : tiny.samples) smp.cross_present = true;
  CHECK_THROWS_AS(check_term_estimates(tiny), std::invalid_argument);

  // bad eta
  Trajectory t3 = traj_of({0.0, 0.1, 0.2}, {1.0, 1.0, 1.0});
  for (auto& smp : t3.samples) smp.cross_present = true;
  CHECK_THROWS_AS(check_term_estimates(t3, {0.0}), std::invalid_argument);
}

TEST_CASE("term estimates: hand-built series reproduces the quadratic root") {
  // constant y with one positive-slope bump; all weights trivial (y1 = 1,
  // mu = 1 so w = 1), so the per-sample constants can be checked by hand
  Trajectory traj;
  traj.mu = 1.0;
  const double h = 0.1;
  for (int k = 0; k < 5; ++k) {
    FunctionalSample s;
    s.t = k * h;
    s.y1 = 1.0;
    s.y = 2.0;
    s.diss_n = 1.0;
    s.diss_c = 2.0;
    s.diss_u = 3.0;
    s.cross_n3_gc2 = 0.5;
    s.cross_n2_gc4 = 0.25;
    s.cross_gc6_gu = 0.25;
    s.cross_conv = 1.0;
    s.cross_buoy = 1.0;
    s.cross_present = true;
    traj.samples.push_back(s);
  }
  // y constant: y' = 0 at every sample, D = 6, S = 3
  // smallest C: C^2 S = D => C = sqrt(2)
  const TermEstimateReport rep = check_term_estimates(traj, {0.5});
  CHECK(rep.c_combined == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // chemo: excess = 0.75 - 0.5*3 < 0 -> 0; convection: 1 - 1.5 < 0 -> 0
  // gradients: 0.25 - 1 < 0 -> 0; buoyancy: 1 - 1.5 < 0 -> 0
  REQUIRE(rep.per_eta.size() == 1);
  CHECK(rep.per_eta[0].c_chemo_pair == 0.0);
  CHECK(rep.per_eta[0].c_convection == 0.0);
  CHECK(rep.per_eta[0].c_gradient_coupling == 0.0);
  CHECK(rep.per_eta[0].c_buoyancy == 0.0);
  // with a stingier eta the leftovers appear, normalized by y^power
  const TermEstimateReport rep2 = check_term_estimates(traj, {0.1});
  // chemo: (0.75 - 0.3)/2^{(3+2)/3}; convection: (1 - 0.3)/2^3
  // gradients: (0.25 - 0.2)/2^3; buoyancy: (1 - 0.3)/2^{1/2}
  CHECK(rep2.per_eta[0].c_chemo_pair ==
        doctest::Approx(0.45 / std::pow(2.0, 5.0 / 3.0)).epsilon(1e-12));
  CHECK(rep2.per_eta[0].c_convection == doctest::Approx(0.7 / 8.0).epsilon(1e-12));
  CHECK(rep2.per_eta[0].c_gradient_coupling ==
        doctest::Approx(0.05 / 8.0).epsilon(1e-12));
  CHECK(rep2.per_eta[0].c_buoyancy ==
        doctest::Approx(0.7 / std::sqrt(2.0)).epsilon(1e-12));
}
