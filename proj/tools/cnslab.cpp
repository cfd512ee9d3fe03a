// ============================================================================
//  cnslab -- command-line laboratory for the regularized chemotaxis-flow
//  system: run simulations, summarize trajectories, estimate inequality
//  constants, and tabulate singular-set premeasures.
//
//  Exit codes: 0 success, 1 usage error, 2 numerical failure or blow-up,
//  3 inapplicable criterion (e.g. a <= s, or an integrability certificate
//  that cannot exist).  Every run is deterministic for a fixed config and
//  seed; reports embed the config hash and never embed clocks or hosts.
//
//  Default output locations resolve against $CNSLAB_OUTPUT_ROOT (".", when
//  unset); explicit -o/--report paths are used verbatim.
// ============================================================================
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "cns/diagnostics.hpp"
#include "cns/hausdorff.hpp"
#include "cns/model.hpp"
#include "cns/odi.hpp"
#include "cns/report.hpp"
#include "cns/trajectory.hpp"

namespace {

using namespace cns;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitInapplicable = 3;

std::string output_root() {
  const char* r = std::getenv("CNSLAB_OUTPUT_ROOT");
  return (r != nullptr && *r != '\0') ? std::string(r) : std::string(".");
}

std::string rooted(const std::string& name) {
  const std::filesystem::path root(output_root());
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  return (root / name).string();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string config;
  std::vector<std::string> sets;
  std::string output;
  std::string final_state;
};

int run_simulate(const SimulateOpts& o) {
  RunConfig cfg;
  try {
    cfg = load_config_file(o.config);
    for (const std::string& kv : o.sets) apply_override(cfg, kv);
    validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::string out = o.output.empty() ? rooted("trajectory.csv") : o.output;
  try {
    const SimulationResult res = simulate(cfg);
    write_trajectory_csv(out, res.trajectory);
    if (!o.final_state.empty()) {
      const ScalarField np = to_physical(res.final_state.n);
      const ScalarField cp = to_physical(res.final_state.c);
      const VectorField up = to_physical(res.final_state.u.v);
      std::vector<const ScalarField*> comps = {&np, &cp};
      for (const ScalarField& c : up.comp) comps.push_back(&c);
      write_snapshot(o.final_state, comps, res.final_state.t);
    }
    const Trajectory& tr = res.trajectory;
    std::cout << "simulate: config " << tr.config_hash << "  grid " << cfg.dims
              << "d n=" << cfg.n << "  eps " << cfg.eps << "\n"
              << "  samples " << tr.samples.size() << "  final t "
              << res.final_state.t << "  cfl max " << tr.cfl_max << "\n"
              << "  mass drift " << tr.mass_drift_max << "  c overshoot "
              << tr.c_overshoot_max << "  n undershoot "
              << tr.n_undershoot_max << "\n"
              << "  wrote " << out << "\n";
    if (res.blew_up) {
      std::cerr << "blow-up detected at t = " << res.blow_up_time
                << " (partial trajectory written)\n";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitNumerical;
  }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOpts {
  std::string trajectory;
  std::string report;
};

int run_analyze(const AnalyzeOpts& o) {
  Trajectory traj;
  TrajectorySummary sum;
  try {
    traj = read_trajectory_csv(o.trajectory);
    sum = summarize(traj);
  } catch (const std::exception& e) {
    std::cerr << "analyze error: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::string out =
      o.report.empty() ? rooted("analyze-report.json") : o.report;
  write_text_file(out, to_json(sum));
  std::cout << "analyze: config " << sum.config_hash << "  samples "
            << sum.samples << "  t in [" << sum.t_first << ", " << sum.t_last
            << "]\n"
            << "  y in [" << sum.y_min << ", " << sum.y_max << "]  mass "
            << sum.mass_first << " -> " << sum.mass_last << "\n"
            << "  mass drift " << sum.mass_drift_max << "  c overshoot "
            << sum.c_overshoot_max << "  blow-up "
            << (sum.blow_up ? "yes" : "no") << "\n"
            << "  wrote " << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify-odi
// ---------------------------------------------------------------------------

struct VerifyOdiOpts {
  std::string trajectory;
  double sigma = 3.0;
  double p = 3.0;
  double alpha = 1.0;
  std::vector<double> etas = {0.1, 0.25, 0.5};
  std::string report;
};

int run_verify_odi(const VerifyOdiOpts& o) {
  try {
    if (!(o.sigma > 1.0)) throw std::invalid_argument("sigma must be > 1");
    exponents(o.p, o.alpha);  // validate the (p, alpha) domain up front
  } catch (const std::exception& e) {
    std::cerr << "verify-odi usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  Trajectory traj;
  try {
    traj = read_trajectory_csv(o.trajectory);
  } catch (const std::exception& e) {
    std::cerr << "verify-odi error: " << e.what() << "\n";
    return kExitUsage;
  }
  OdiReport rep;
  try {
    rep = verify_odi(traj, o.sigma, o.p, o.alpha, o.etas);
  } catch (const std::exception& e) {
    std::cerr << "verify-odi failed: " << e.what() << "\n";
    return kExitNumerical;
  }
  const std::string out =
      o.report.empty() ? rooted("verify-odi-report.json") : o.report;
  write_text_file(out, to_json(rep));
  std::cout << "verify-odi: config " << rep.config_hash << "  sigma "
            << rep.sigma << "  K_emp " << rep.k_emp << "\n";
  if (rep.terms_present) {
    std::cout << "  combined constant " << rep.terms.c_combined << " at power "
              << rep.terms.sigma << "  (mu " << rep.terms.mu << ")\n";
    for (const EtaConstants& e : rep.terms.per_eta)
      std::cout << "  eta " << e.eta << ": chemo " << e.c_chemo_pair
                << "  convection " << e.c_convection << "  gradients "
                << e.c_gradient_coupling << "  buoyancy " << e.c_buoyancy
                << "\n";
  } else {
    std::cout << "  term estimates omitted, missing columns:";
    for (const std::string& c : rep.omissions) std::cout << " " << c;
    std::cout << "\n";
  }
  std::cout << "  wrote " << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate-dimension
// ---------------------------------------------------------------------------

struct EstimateOpts {
  std::string trajectory;
  double s = 1.0;
  double a = 2.0;
  double C = 1.0;
  std::vector<double> deltas = {1.6e-2, 8e-3, 4e-3, 2e-3, 1e-3};
  std::optional<double> seed_threshold;
  std::optional<double> tail_start;
  bool no_tail = false;
  std::string report;
  std::string gnuplot;
};

int run_estimate_dimension(const EstimateOpts& o) {
  if (!(o.s > 0.0) || !(o.a > o.s)) {
    std::cerr << "estimate-dimension is inapplicable for s = " << o.s
              << ", a = " << o.a
              << ": the premeasure exponent d = 1 - s/a requires a > s > 0\n";
    return kExitInapplicable;
  }
  if (o.deltas.size() < 2) {
    std::cerr << "need at least two --delta meshes to fit a decay slope\n";
    return kExitUsage;
  }
  Trajectory traj;
  try {
    traj = read_trajectory_csv(o.trajectory);
  } catch (const std::exception& e) {
    std::cerr << "estimate-dimension error: " << e.what() << "\n";
    return kExitUsage;
  }
  DimensionRequest req;
  req.s = o.s;
  req.a = o.a;
  req.C = o.C;
  req.deltas = o.deltas;
  req.seed_threshold = o.seed_threshold;
  req.tail_start = o.tail_start;
  req.disable_tail = o.no_tail;
  DimensionReport rep;
  try {
    rep = estimate_dimension(traj, req);
  } catch (const std::exception& e) {
    std::cerr << "estimate-dimension failed: " << e.what() << "\n";
    return kExitNumerical;
  }
  const std::string out =
      o.report.empty() ? rooted("dimension-report.json") : o.report;
  write_text_file(out, to_json(rep));
  if (!o.gnuplot.empty()) {
    std::ostringstream gp;
    gp << "# delta pieces premeasure  (d = " << rep.d << ")\n";
    for (const DimensionRow& r : rep.table)
      gp << r.delta << " " << r.pieces << " " << r.premeasure << "\n";
    write_text_file(o.gnuplot, gp.str());
  }
  std::cout << "estimate-dimension: d = " << rep.d << "  (s = " << rep.s
            << ", a = " << rep.a << ", C = " << rep.C << ")\n"
            << "  config " << rep.config_hash << "  L^s certificate "
            << rep.ls_value << "\n"
            << "  singular samples " << rep.singular_samples << " in "
            << rep.singular_components << " components";
  if (rep.empty_seeds) std::cout << "  [warning: no usable seeds]";
  if (rep.boundary_flagged) std::cout << "  [boundary component]";
  std::cout << "\n  delta / pieces / premeasure:\n";
  for (const DimensionRow& r : rep.table)
    std::cout << "    " << r.delta << "  " << r.pieces << "  " << r.premeasure
              << "\n";
  std::cout << "  decay slope " << rep.decay_slope << "\n"
            << "  verdict: " << rep.verdict << "\n"
            << "  wrote " << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep-epsilon
// ---------------------------------------------------------------------------

struct SweepOpts {
  std::string config;
  std::vector<std::string> sets;
  std::vector<double> eps;
  std::string report;
};

int run_sweep(const SweepOpts& o) {
  if (o.eps.size() < 2) {
    std::cerr << "sweep-epsilon needs at least two --eps values\n";
    return kExitUsage;
  }
  RunConfig base;
  try {
    base = load_config_file(o.config);
    for (const std::string& kv : o.sets) apply_override(base, kv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  struct Member {
    double eps = 0.0;
    bool ok = false;
    bool blew_up = false;
    std::string hash;
    std::string error;
    Trajectory traj;
    SimulationState final_state;
  };
  std::vector<Member> runs;
  for (std::size_t i = 0; i < o.eps.size(); ++i) {
    Member m;
    m.eps = o.eps[i];
    RunConfig cfg = base;
    cfg.eps = o.eps[i];
    try {
      validate(cfg);
      m.hash = config_hash(cfg);
      SimulationResult res = simulate(cfg);
      m.traj = std::move(res.trajectory);
      m.final_state = std::move(res.final_state);
      m.blew_up = res.blew_up;
      m.ok = !res.blew_up;
      write_trajectory_csv(rooted("sweep-run" + std::to_string(i) + ".csv"),
                           m.traj);
    } catch (const std::exception& e) {
      m.error = e.what();
    }
    runs.push_back(std::move(m));
  }

  // adjacent-pair distances: sup over samples of |y_a - y_b| and sup over
  // grid points of the final-state field differences
  nlohmann::ordered_json j;
  j["report"] = "sweep-epsilon";
  j["eps"] = o.eps;
  nlohmann::ordered_json jruns = nlohmann::ordered_json::array();
  for (const Member& m : runs) {
    nlohmann::ordered_json r;
    r["eps"] = m.eps;
    r["ok"] = m.ok;
    r["blow_up"] = m.blew_up;
    r["config_hash"] = m.hash;
    r["samples"] = m.traj.samples.size();
    if (!m.error.empty()) r["error"] = m.error;
    jruns.push_back(r);
  }
  j["runs"] = jruns;

  auto sup_field = [](const ScalarField& a, const ScalarField& b) {
    const ScalarField pa = to_physical(a), pb = to_physical(b);
    double m = 0.0;
    for (std::size_t i = 0; i < pa.phys.size(); ++i)
      m = std::max(m, std::abs(pa.phys[i] - pb.phys[i]));
    return m;
  };

  bool all_pairs_ok = true;
  std::vector<double> y_sups;
  nlohmann::ordered_json jpairs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const Member& a = runs[i];
    const Member& b = runs[i + 1];
    nlohmann::ordered_json p;
    p["eps_a"] = a.eps;
    p["eps_b"] = b.eps;
    if (a.ok && b.ok && a.traj.samples.size() == b.traj.samples.size()) {
      double ys = 0.0;
      for (std::size_t k = 0; k < a.traj.samples.size(); ++k)
        ys = std::max(ys, std::abs(a.traj.samples[k].y - b.traj.samples[k].y));
      double ns = sup_field(a.final_state.n, b.final_state.n);
      double cs = sup_field(a.final_state.c, b.final_state.c);
      double us = 0.0;
      for (int d = 0; d < a.final_state.u.v.dims(); ++d)
        us = std::max(us, sup_field(a.final_state.u.v.comp[d],
                                    b.final_state.u.v.comp[d]));
      p["y_sup"] = ys;
      p["n_sup"] = ns;
      p["c_sup"] = cs;
      p["u_sup"] = us;
      y_sups.push_back(ys);
    } else {
      p["skipped"] = "member run failed";
      all_pairs_ok = false;
    }
    jpairs.push_back(p);
  }
  j["pairs"] = jpairs;

  const std::string out =
      o.report.empty() ? rooted("sweep-report.json") : o.report;
  write_text_file(out, j.dump(2) + "\n");

  std::cout << "sweep-epsilon over {";
  for (std::size_t i = 0; i < o.eps.size(); ++i)
    std::cout << (i ? ", " : "") << o.eps[i];
  std::cout << "}\n";
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    std::cout << "  d(" << runs[i].eps << ", " << runs[i + 1].eps << ")";
    if (i < y_sups.size() && runs[i].ok && runs[i + 1].ok)
      std::cout << "  y sup " << y_sups[i] << "\n";
    else
      std::cout << "  skipped\n";
  }
  for (const Member& m : runs)
    if (!m.ok)
      std::cout << "  run eps=" << m.eps << " failed: "
                << (m.error.empty() ? "blow-up" : m.error) << "\n";
  std::cout << "  wrote " << out << "\n";
  return all_pairs_ok ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
  std::vector<double> times;
  int cantor_level = -1;
  bool snap_times = false;
  double horizon = 1.0;
  double spacing = 1e-3;
  double baseline = 1.0;
  double beta = 0.45;
  double cap = 1e6;
  double ls_exponent = 0.0;
  std::string output;
};

int run_synth(const SynthOpts& o) {
  SynthSpec spec;
  spec.singular_times = o.times;
  if (o.cantor_level >= 0) {
    const std::vector<double> pts = cantor_endpoints(o.cantor_level);
    spec.singular_times.insert(spec.singular_times.end(), pts.begin(),
                               pts.end());
  }
  if (o.snap_times)
    for (double& s : spec.singular_times)
      s = std::round(s / o.spacing) * o.spacing;
  spec.horizon = o.horizon;
  spec.h = o.spacing;
  spec.baseline = o.baseline;
  spec.beta = o.beta;
  spec.cap = o.cap;
  spec.ls_exponent = o.ls_exponent;
  SyntheticTrajectory syn;
  try {
    syn = synthesize(spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << "synth rejected: " << e.what() << "\n";
    return std::string(e.what()).find("certificate") != std::string::npos
               ? kExitInapplicable
               : kExitUsage;
  }
  const std::string out = o.output.empty() ? rooted("synthetic.csv") : o.output;
  write_trajectory_csv(out, to_trajectory(syn));
  double zmin = syn.z.front(), zmax = syn.z.front();
  for (double z : syn.z) {
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  }
  std::cout << "synth: " << syn.t.size() << " samples on [0, " << spec.horizon
            << "]  z in [" << zmin << ", " << zmax << "]  sources "
            << spec.singular_times.size() << "\n"
            << "  wrote " << out << "\n";
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{
      "cnslab: numerical laboratory for a regularized chemotaxis-flow "
      "system (simulation, inequality constants, singular-set premeasures)"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "run the solver on a config and record a trajectory");
  c_sim->add_option("--config", sim.config, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  c_sim->add_option("--set", sim.sets, "override, e.g. --set eps=0.05")
      ->allow_extra_args(false);
  c_sim->add_option("-o,--output", sim.output,
                    "trajectory CSV path (default $CNSLAB_OUTPUT_ROOT/"
                    "trajectory.csv)");
  c_sim->add_option("--final-state", sim.final_state,
                    "also dump the final fields as a text snapshot");

  AnalyzeOpts ana;
  CLI::App* c_ana =
      app.add_subcommand("analyze", "summarize a recorded trajectory");
  c_ana->add_option("trajectory", ana.trajectory, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ana->add_option("--report", ana.report, "JSON report path");

  VerifyOdiOpts ver;
  CLI::App* c_ver = app.add_subcommand(
      "verify-odi",
      "estimate the constants of the superlinear inequality on a trajectory");
  c_ver->add_option("trajectory", ver.trajectory, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ver->add_option("--sigma", ver.sigma, "power in y' <= K y^sigma");
  c_ver->add_option("--p", ver.p, "density integrability parameter");
  c_ver->add_option("--alpha", ver.alpha, "gradient integrability parameter");
  c_ver->add_option("--eta", ver.etas, "absorption fractions for the term-wise constants");
  c_ver->add_option("--report", ver.report, "JSON report path");

  EstimateOpts est;
  CLI::App* c_est = app.add_subcommand(
      "estimate-dimension",
      "propagate the regular set, cover the rest, tabulate premeasures");
  c_est->add_option("trajectory", est.trajectory, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_est->add_option("--s", est.s, "integrability exponent of the certificate");
  c_est->add_option("--a", est.a, "window exponent in C z^-a");
  c_est->add_option("--C", est.C, "window constant");
  c_est->add_option("--delta", est.deltas, "cover meshes (>= 2 values)");
  c_est->add_option("--seed-threshold", est.seed_threshold,
                    "seed only samples with z below this (default: all)");
  c_est->add_option("--tail-start", est.tail_start,
                    "declare (tail, horizon] regular by fiat");
  c_est->add_flag("--no-tail", est.no_tail,
                  "disable the synthetic-run tail policy");
  c_est->add_option("--report", est.report, "JSON report path");
  c_est->add_option("--gnuplot", est.gnuplot,
                    "also write the premeasure table as gnuplot data");

  SweepOpts swp;
  CLI::App* c_swp = app.add_subcommand(
      "sweep-epsilon", "rerun one config across regularization strengths");
  c_swp->add_option("--config", swp.config, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  c_swp->add_option("--set", swp.sets, "override applied to every member")
      ->allow_extra_args(false);
  c_swp->add_option("--eps", swp.eps, "epsilon values (>= 2)");
  c_swp->add_option("--report", swp.report, "JSON report path");

  SynthOpts syn;
  CLI::App* c_syn = app.add_subcommand(
      "synth", "write a synthetic trajectory with prescribed singular times");
  c_syn->add_option("--singular-times", syn.times, "singular time list");
  c_syn->add_option("--cantor-level", syn.cantor_level,
                    "add the endpoints of the level-L middle-thirds set");
  c_syn->add_flag("--snap-times", syn.snap_times,
                  "round singular times onto the sample grid first");
  c_syn->add_option("--horizon", syn.horizon, "time horizon");
  c_syn->add_option("--spacing", syn.spacing, "sample spacing");
  c_syn->add_option("--baseline", syn.baseline, "profile baseline (>= 1)");
  c_syn->add_option("--beta", syn.beta, "spike exponent |t - sigma|^-beta");
  c_syn->add_option("--cap", syn.cap, "profile cap");
  c_syn->add_option("--ls-exponent", syn.ls_exponent,
                    "request an L^s certificate at synthesis");
  c_syn->add_option("-o,--output", syn.output, "trajectory CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_ana->parsed()) return run_analyze(ana);
    if (c_ver->parsed()) return run_verify_odi(ver);
    if (c_est->parsed()) return run_estimate_dimension(est);
    if (c_swp->parsed()) return run_sweep(swp);
    if (c_syn->parsed()) return run_synth(syn);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
