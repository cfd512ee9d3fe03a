#include <cmath>
#include <limits>

#include "cns/diagnostics.hpp"
#include "cns/model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cns;
using testsupport::fill;
using testsupport::random_solenoidal;
using testsupport::rel_l2;

namespace {
constexpr double kPi = kTwoPi / 2.0;
}

// ---------------------------------------------------------------------
// regularization function
// ---------------------------------------------------------------------

TEST_CASE("regularization function and its derivative") {
  CHECK(f_eps(3.7, 0.0) == 3.7);
  CHECK(f_eps_prime(3.7, 0.0) == 1.0);
  CHECK(f_eps(0.0, 0.5) == 0.0);

  // hand value: log(1 + 0.5*2)/0.5 = 2 log 2
  CHECK(f_eps(2.0, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(f_eps_prime(2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));

  // concave below identity, derivative consistent by finite differences
  for (double s : {0.1, 1.0, 7.5}) {
    CHECK(f_eps(s, 0.2) <= s);
    const double h = 1e-6;
    const double fd = (f_eps(s + h, 0.2) - f_eps(s - h, 0.2)) / (2 * h);
    CHECK(fd == doctest::Approx(f_eps_prime(s, 0.2)).epsilon(1e-8));
  }

  // eps -> 0 recovers identity smoothly
  CHECK(f_eps(4.0, 1e-9) == doctest::Approx(4.0).epsilon(1e-8));
}

// ---------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------

TEST_CASE("config parsing, overrides, canonical form, hash") {
  const std::string text =
      "# run setup\n"
      "dims = 2\n"
      "n = 32          # grid\n"
      "eps = 0.05\n"
      "\n"
      "u0_preset = taylor-green\n"
      "u0_amplitude = 0.25\n";
  RunConfig cfg = parse_config_text(text);
  CHECK(cfg.dims == 2);
  CHECK(cfg.n == 32);
  CHECK(cfg.eps == 0.05);
  CHECK(cfg.u0_preset == "taylor-green");
  CHECK(cfg.u0_amplitude == 0.25);
  CHECK(cfg.dt == 1e-3);  // untouched default

  CHECK_THROWS_AS(parse_config_text("nope = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("eps = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("just a line\n"), std::invalid_argument);

  apply_override(cfg, "dt=5e-4");
  CHECK(cfg.dt == 5e-4);
  CHECK_THROWS_AS(apply_override(cfg, "dt"), std::invalid_argument);

  // canonical form round-trips through the parser
  const RunConfig back = parse_config_text(canonical_config(cfg));
  CHECK(config_hash(back) == config_hash(cfg));

  // hash is stable and sensitive
  const std::string h0 = config_hash(cfg);
  CHECK(h0.size() == 16);
  CHECK(config_hash(cfg) == h0);
  RunConfig other = cfg;
  other.eps = 0.051;
  CHECK(config_hash(other) != h0);

  // validation catches bad geometry and presets
  RunConfig bad = cfg;
  bad.n = 20;  // not divisible enough for the dealias mask? still even: fine
  bad.dims = 4;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.n0_preset = "spike";
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.phi_axis = 2;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

// ---------------------------------------------------------------------
// initial data
// ---------------------------------------------------------------------

TEST_CASE("initial data presets honor their contracts") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.n0_preset = "gaussian";
  cfg.n0_mass = 17.0;
  cfg.c0_preset = "gaussian";
  cfg.c0_value = 1.0;
  cfg.c0_amplitude = 0.5;
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.3;

  SimulationState st = make_initial_data(cfg);
  const ScalarField n = to_physical(st.n);
  const ScalarField c = to_physical(st.c);

  CHECK(integral(n) == doctest::Approx(17.0).epsilon(1e-13));
  CHECK(min_val(n) >= -1e-12);  // spectral truncation ripple only
  CHECK(max_val(c) <= 1.5 + 1e-12);
  CHECK(min_val(c) >= 1.0 - 1e-12);

  // velocity is divergence-free with the requested amplitude
  CHECK(solenoidal_residual(st.u.v) <= 1e-10);
  CHECK(max_abs(st.u.v) == doctest::Approx(0.3).epsilon(1e-6));

  SUBCASE("random presets are reproducible and well-behaved") {
    cfg.n0_preset = "random";
    cfg.n0_value = 2.0;
    cfg.u0_preset = "random";
    cfg.u0_amplitude = 0.4;
    cfg.seed = 7;
    SimulationState a = make_initial_data(cfg);
    SimulationState b = make_initial_data(cfg);
    CHECK(rel_l2(to_physical(a.n), to_physical(b.n)) == 0.0);
    CHECK(min_val(to_physical(a.n)) > 0.5);  // positive by construction
    CHECK(solenoidal_residual(a.u.v) <= 1e-10);
    CHECK(max_abs(a.u.v) == doctest::Approx(0.4).epsilon(1e-12));
    cfg.seed = 8;
    SimulationState d = make_initial_data(cfg);
    CHECK(rel_l2(to_physical(a.n), to_physical(d.n)) > 1e-3);
  }
}

TEST_CASE("potential gradient preset") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 16;
  cfg.phi_preset = "sine";
  cfg.phi_amplitude = 0.7;
  cfg.phi_axis = 1;
  VectorField gp = make_grad_phi(cfg);
  // phi = A sin(y) on the 2pi box: d/dy = A cos(y), no x-component
  CHECK(max_abs(gp.comp[0]) == 0.0);
  CHECK(max_abs(gp.comp[1]) == doctest::Approx(0.7).epsilon(1e-12));
  cfg.phi_preset = "zero";
  VectorField z = make_grad_phi(cfg);
  CHECK(max_abs(z.comp[0]) == 0.0);
  CHECK(max_abs(z.comp[1]) == 0.0);
}

// ---------------------------------------------------------------------
// stepper exactness on decoupled states
// ---------------------------------------------------------------------

namespace {

SimulationState blank_state(const Grid& g, double eps) {
  SimulationState st;
  st.eps = eps;
  st.n = ScalarField(g, Rep::spectral);
  st.c = ScalarField(g, Rep::spectral);
  st.u.v = make_vector_field(g, Rep::spectral);
  return st;
}

}  // namespace

TEST_CASE("pure diffusion is reproduced to machine accuracy") {
  const Grid g{2, 32, kTwoPi};
  SimulationState st = blank_state(g, 0.1);
  // n = 2 + cos(3x): with c and u identically zero every nonlinear term
  // vanishes and the density obeys the plain heat equation
  st.n = to_spectral(
      fill(g, [](double x, double, double) { return 2.0 + std::cos(3.0 * x); }));
  VectorField gphi = make_vector_field(g, Rep::physical);

  const double dt = 1e-2;
  Stepper stepper(g, dt, st.eps, gphi);
  for (int k = 0; k < 25; ++k) stepper.step(st);

  const double t = 25 * dt;
  const ScalarField expect = fill(g, [&](double x, double, double) {
    return 2.0 + std::exp(-9.0 * t) * std::cos(3.0 * x);
  });
  CHECK(rel_l2(to_physical(st.n), expect) <= 1e-14);
  CHECK(max_abs(st.u.v) == 0.0);
  CHECK(max_abs(st.c) == 0.0);
}

TEST_CASE("spatially uniform state reduces to the scalar decay ODE") {
  const Grid g{2, 16, kTwoPi};
  const double eps = 0.1, nbar = 1.0, cbar = 2.0;
  SimulationState st = blank_state(g, eps);
  ScalarField n0(g, Rep::physical), c0(g, Rep::physical);
  for (auto& v : n0.phys) v = nbar;
  for (auto& v : c0.phys) v = cbar;
  st.n = to_spectral(n0);
  st.c = to_spectral(c0);
  VectorField gphi = make_vector_field(g, Rep::physical);

  const double dt = 1e-3, T = 0.5;
  Stepper stepper(g, dt, eps, gphi);
  const int steps = int(T / dt + 0.5);
  for (int k = 0; k < steps; ++k) stepper.step(st);

  // dc/dt = -F_eps(nbar) c, n frozen; the midpoint rule carries an
  // O(dt^2) global error, about 7e-8 relative at this step size
  const double lam = f_eps(nbar, eps);
  const double expect = cbar * std::exp(-lam * T);
  const ScalarField cT = to_physical(st.c);
  CHECK(max_val(cT) == doctest::Approx(expect).epsilon(1e-6));
  CHECK(min_val(cT) == doctest::Approx(expect).epsilon(1e-6));
  CHECK(max_val(to_physical(st.n)) == doctest::Approx(nbar).epsilon(1e-14));
}

TEST_CASE("Taylor-Green vortex decays at the exact viscous rate") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.eps = 0.1;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  cfg.sample_stride = 20;
  cfg.n0_preset = "uniform";
  cfg.n0_value = 0.0;  // empty density: no chemotaxis, no buoyancy
  cfg.c0_preset = "uniform";
  cfg.c0_value = 1.0;
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.5;
  cfg.phi_preset = "zero";

  SimulationResult res = simulate(cfg);
  REQUIRE_FALSE(res.blew_up);
  const Trajectory& tr = res.trajectory;
  REQUIRE(tr.samples.size() == 11);
  CHECK(tr.spacing_uniform());

  // single-shell vortex: convection projects away, kinetic energy decays
  // as exp(-4t) (both active modes sit on |k|^2 = 2)
  const double k0 = tr.samples[0].kinetic;
  CHECK(k0 == doctest::Approx(0.25 * kPi * kPi).epsilon(1e-12));
  for (const auto& s : tr.samples) {
    CHECK(s.kinetic ==
          doctest::Approx(k0 * std::exp(-4.0 * s.t)).epsilon(1e-10));
  }
}

// ---------------------------------------------------------------------
// structural properties of the full right-hand side
// ---------------------------------------------------------------------

namespace {

SimulationState coupled_fixture(const Grid& g, double eps, unsigned seed) {
  RunConfig cfg;
  cfg.dims = g.dims;
  cfg.n = g.n;
  cfg.box = g.box;
  cfg.eps = eps;
  cfg.seed = seed;
  cfg.n0_preset = "gaussian";
  cfg.n0_mass = 10.0;
  cfg.n0_width = 3.0;
  cfg.c0_preset = "gaussian";
  cfg.c0_value = 1.0;
  cfg.c0_amplitude = 0.5;
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.5;
  return make_initial_data(cfg);
}

}  // namespace

TEST_CASE("convection term is orthogonal to the velocity") {
  for (int dims : {2, 3}) {
    const Grid g{dims, dims == 2 ? 32 : 16, kTwoPi};
    SimulationState st = blank_state(g, 0.2);
    st.u = random_solenoidal(g, 11u, /*band_limited=*/true);
    st.n = ScalarField(g, Rep::spectral);
    st.c = ScalarField(g, Rep::spectral);

    const SolenoidalField conv = convection_term(st);
    const double ip = inner(conv.v, st.u.v);
    const double scale = l2_norm(st.u.v) * l2_norm(conv.v) + 1e-30;
    CHECK(std::abs(ip) <= 1e-12 * scale + 1e-14);
    CHECK(solenoidal_residual(conv.v) <= 1e-10 * (1.0 + max_abs(conv.v)));
  }
}

TEST_CASE("projected sources stay solenoidal") {
  const Grid g{2, 32, kTwoPi};
  SimulationState st = coupled_fixture(g, 0.1, 3);
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.phi_preset = "sine";
  cfg.phi_amplitude = 0.5;
  const VectorField gphi = make_grad_phi(cfg);

  const SolenoidalField b = buoyancy_term(st, gphi);
  CHECK(solenoidal_residual(b.v) <= 1e-10 * (1.0 + max_abs(b.v)));
  const SolenoidalField r = rhs_u(st, gphi);
  CHECK(solenoidal_residual(r.v) <= 1e-10 * (1.0 + max_abs(r.v)));
}

TEST_CASE("one step matches the right-hand side to second order") {
  const Grid g{2, 32, kTwoPi};
  RunConfig pcfg;
  pcfg.dims = 2;
  pcfg.n = 32;
  pcfg.phi_preset = "sine";
  pcfg.phi_amplitude = 0.5;
  const VectorField gphi = make_grad_phi(pcfg);

  auto defect = [&](double dt) {
    SimulationState st = coupled_fixture(g, 0.1, 5);
    const ScalarField rn = rhs_n(st);
    const ScalarField rc = rhs_c(st);
    const SolenoidalField ru = rhs_u(st, gphi);
    SimulationState fwd = st;
    imex_step(fwd, dt, gphi);
    // defect = v(dt) - v(0) - dt * rhs(v(0)), should shrink like dt^2
    double worst = 0.0;
    auto meas = [&](const ScalarField& a, const ScalarField& b,
                    const ScalarField& r) {
      ScalarField d = a;
      for (std::size_t i = 0; i < d.spec.size(); ++i)
        d.spec[i] -= b.spec[i] + dt * r.spec[i];
      worst = std::max(worst, l2_norm(d));
    };
    meas(fwd.n, st.n, rn);
    meas(fwd.c, st.c, rc);
    for (int dcomp = 0; dcomp < 2; ++dcomp)
      meas(fwd.u.v.comp[dcomp], st.u.v.comp[dcomp], ru.v.comp[dcomp]);
    return worst;
  };

  const double d1 = defect(2e-4);
  const double d2 = defect(1e-4);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.25));
}

// ---------------------------------------------------------------------
// conservation, monitors, blow-up handling
// ---------------------------------------------------------------------

TEST_CASE("mass is conserved to machine accuracy in a fully coupled run") {
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.eps = 0.1;
  cfg.dt = 1e-3;
  cfg.t_end = 0.3;
  cfg.sample_stride = 30;
  cfg.n0_preset = "gaussian";
  cfg.n0_mass = 20.0;
  cfg.n0_width = 4.0;
  cfg.c0_preset = "gaussian";
  cfg.c0_value = 1.0;
  cfg.c0_amplitude = 0.5;
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.5;
  cfg.phi_preset = "sine";
  cfg.phi_amplitude = 0.5;

  SimulationResult res = simulate(cfg);
  REQUIRE_FALSE(res.blew_up);
  const Trajectory& tr = res.trajectory;
  CHECK(tr.mass_drift_max <= 1e-13);
  CHECK(tr.config_hash == config_hash(cfg));

  // the maximum principle for c and positivity of n hold up to discretization
  CHECK(tr.c_overshoot_max <= kMaxPrincipleTol);
  CHECK(tr.n_undershoot_max <= kPositivityTol);
  CHECK(tr.cfl_max < 0.5);  // sane step size for this preset
  CHECK(std::isfinite(tr.samples.back().quasi_energy));
}

TEST_CASE("3d coupled run stays healthy") {
  RunConfig cfg;
  cfg.dims = 3;
  cfg.n = 16;
  cfg.eps = 0.1;
  cfg.dt = 2e-3;
  cfg.t_end = 0.05;
  cfg.sample_stride = 5;
  cfg.n0_preset = "gaussian";
  cfg.n0_mass = 10.0;
  cfg.n0_width = 2.0;
  cfg.u0_preset = "taylor-green";
  cfg.u0_amplitude = 0.3;
  cfg.phi_preset = "sine";

  SimulationResult res = simulate(cfg);
  REQUIRE_FALSE(res.blew_up);
  CHECK(res.trajectory.mass_drift_max <= 1e-13);
  CHECK(res.trajectory.samples.size() == 6);
  CHECK(all_finite(res.final_state.u.v));
}

TEST_CASE("an unstable step size is reported as blow-up, not garbage") {
  // a single-shell vortex would be an exact solution, so use a multi-mode
  // random velocity where the convection term is genuinely active
  RunConfig cfg;
  cfg.dims = 2;
  cfg.n = 32;
  cfg.eps = 0.01;
  cfg.dt = 1.0;  // wildly beyond the advective stability limit
  cfg.t_end = 40.0;
  cfg.sample_stride = 1;
  cfg.n0_preset = "uniform";
  cfg.n0_value = 1.0;
  cfg.c0_preset = "gaussian";
  cfg.u0_preset = "random";
  cfg.u0_amplitude = 50.0;
  cfg.phi_preset = "zero";

  SimulationResult res = simulate(cfg);
  CHECK(res.blew_up);
  CHECK(res.trajectory.blow_up);
  CHECK(res.blow_up_time > 0.0);
  CHECK(res.trajectory.samples.size() >= 1);
  for (const auto& s : res.trajectory.samples) CHECK(std::isfinite(s.y));
}

TEST_CASE("cfl number tracks the advective speed") {
  const Grid g{2, 32, kTwoPi};
  SimulationState st = blank_state(g, 0.0);
  ScalarField n0(g, Rep::physical), c0(g, Rep::physical);
  for (auto& v : n0.phys) v = 1.0;
  for (auto& v : c0.phys) v = 1.0;
  st.n = to_spectral(n0);
  st.c = to_spectral(c0);
  VectorField u0 = make_vector_field(g, Rep::physical);
  u0.comp[0] = fill(g, [](double, double y, double) { return std::sin(y); });
  st.u = SolenoidalField::wrap_checked(to_spectral(u0));

  // uniform c has no chemotactic drift, so cfl = dt * max|u| / h
  const double dt = 1e-2;
  CHECK(cfl_number(st, dt) ==
        doctest::Approx(dt * 1.0 / g.spacing()).epsilon(1e-6));
}
