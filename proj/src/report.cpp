// ============================================================================
//  report.cpp -- analysis pipelines and JSON emission for the CLI
// ============================================================================
#include "cns/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cns/diagnostics.hpp"
#include "json.hpp"

namespace cns {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& cross_columns() {
  static const std::vector<std::string> cols = {
      "cross_n3_gc2", "cross_n2_gc4", "cross_gc6_gu", "cross_conv",
      "cross_buoy"};
  return cols;
}

ordered_json exponents_json(const ExponentTable& e) {
  ordered_json j;
  j["p"] = e.p;
  j["alpha"] = e.alpha;
  j["s1"] = e.s1;
  j["s2"] = e.s2;
  j["theta1"] = e.theta1;
  j["theta2_lower"] = e.theta2_lower;
  j["mu"] = e.mu;
  j["theta1_mu"] = e.theta1_mu;
  j["theta"] = e.theta;
  return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

// ---------------------------------------------------------------------------
// verify-odi
// ---------------------------------------------------------------------------

OdiReport verify_odi(const Trajectory& traj, double sigma, double p,
                     double alpha, const std::vector<double>& etas) {
  if (!(sigma > 1.0))
    throw std::invalid_argument("verify-odi: sigma must be > 1");
  OdiReport rep;
  rep.config_hash = traj.config_hash;
  rep.sigma = sigma;
  rep.exponents = exponents(p, alpha);
  rep.k_emp = estimate_K(traj, sigma);
  const bool cross =
      !traj.samples.empty() && traj.samples.front().cross_present;
  if (cross) {
    rep.terms = check_term_estimates(traj, etas);
    rep.terms_present = true;
  } else {
    rep.omissions = cross_columns();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// estimate-dimension
// ---------------------------------------------------------------------------

double fitted_decay_slope(const std::vector<DimensionRow>& table) {
  std::vector<double> x, y;
  for (const DimensionRow& row : table)
    if (row.premeasure > 0.0) {
      x.push_back(std::log(row.delta));
      y.push_back(std::log(row.premeasure));
    }
  if (x.size() < 2) return 0.0;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return 0.0;
  return sxy / sxx;
}

std::string dimension_verdict(const std::vector<DimensionRow>& table,
                              double slope_margin) {
  const bool all_zero =
      std::all_of(table.begin(), table.end(),
                  [](const DimensionRow& r) { return r.premeasure == 0.0; });
  if (all_zero) return "consistent with H^d = 0";
  std::size_t positive = 0;
  for (const DimensionRow& r : table)
    if (r.premeasure > 0.0) ++positive;
  if (positive < 2) return "inconclusive";
  return fitted_decay_slope(table) > slope_margin ? "consistent with H^d = 0"
                                                  : "inconclusive";
}

DimensionReport estimate_dimension(const Trajectory& traj,
                                   const DimensionRequest& req) {
  if (!(req.s > 0.0) || !(req.a > req.s))
    throw std::invalid_argument(
        "estimate-dimension is inapplicable unless a > s > 0: the premeasure "
        "exponent d = 1 - s/a must be positive");
  if (req.deltas.size() < 2)
    throw std::invalid_argument(
        "estimate-dimension needs at least two cover meshes to fit a decay "
        "slope");
  for (double d : req.deltas)
    if (!(d > 0.0))
      throw std::invalid_argument("cover meshes must be positive");
  if (traj.samples.size() < 2)
    throw std::invalid_argument("trajectory too short for the cover pipeline");

  std::vector<double> t, z;
  t.reserve(traj.samples.size());
  z.reserve(traj.samples.size());
  for (const FunctionalSample& s : traj.samples) {
    t.push_back(s.t);
    z.push_back(s.y);
  }

  DimensionReport rep;
  rep.config_hash = traj.config_hash;
  rep.s = req.s;
  rep.a = req.a;
  rep.C = req.C;
  rep.d = dimension_bound(req.s, req.a);
  rep.ls_value = ls_norm(traj, "y", req.s);

  // seeds: every sample by default (all recorded values are finite anchors);
  // a threshold restricts anchoring to the quiet part of the profile
  std::vector<double> seeds;
  if (req.seed_threshold) {
    for (std::size_t k = 0; k < t.size(); ++k)
      if (z[k] < *req.seed_threshold) seeds.push_back(t[k]);
  } else {
    seeds = t;
  }

  // tail policy: synthetic profiles declare the last quarter regular by fiat
  std::optional<double> tail = req.tail_start;
  if (!tail && traj.synthetic && !req.disable_tail)
    tail = t.front() + 0.75 * (t.back() - t.front());

  const RegularSet reg = propagate_regular_set(t, z, req.C, req.a, seeds, tail);
  rep.tail_start = reg.tail_start;
  rep.empty_seeds = reg.empty_seeds;
  rep.singular_components = reg.singular_components().size();
  for (char c : reg.regular)
    if (!c) ++rep.singular_samples;

  for (double delta : req.deltas) {
    const CoverEstimate cov = cover_singular_set(reg, z, req.C, req.a, delta);
    rep.boundary_flagged = rep.boundary_flagged || cov.boundary_flagged;
    rep.table.push_back({delta, cov.pieces.size(), premeasure(cov, rep.d)});
  }
  rep.decay_slope = fitted_decay_slope(rep.table);
  rep.verdict = dimension_verdict(rep.table);
  return rep;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

TrajectorySummary summarize(const Trajectory& traj) {
  if (traj.samples.empty())
    throw std::invalid_argument("cannot summarize an empty trajectory");
  TrajectorySummary s;
  s.config_hash = traj.config_hash;
  s.samples = traj.samples.size();
  s.t_first = traj.samples.front().t;
  s.t_last = traj.samples.back().t;
  s.spacing = traj.samples.size() > 1 ? traj.spacing() : 0.0;
  s.synthetic = traj.synthetic;
  s.blow_up = traj.blow_up;
  s.y_first = traj.samples.front().y;
  s.y_last = traj.samples.back().y;
  s.y_min = s.y_first;
  s.y_max = s.y_first;
  s.quasi_present = true;
  for (const FunctionalSample& r : traj.samples) {
    s.y_min = std::min(s.y_min, r.y);
    s.y_max = std::max(s.y_max, r.y);
    s.floor_hits_total += r.floor_hits;
    s.clip_hits_total += r.clip_hits;
    s.quasi_present = s.quasi_present && r.quasi_present;
  }
  s.mass_first = traj.samples.front().mass;
  s.mass_last = traj.samples.back().mass;
  s.kinetic_first = traj.samples.front().kinetic;
  s.kinetic_last = traj.samples.back().kinetic;
  s.cfl_max = traj.cfl_max;
  s.mass_drift_max = traj.mass_drift_max;
  s.c_overshoot_max = traj.c_overshoot_max;
  s.n_undershoot_max = traj.n_undershoot_max;
  s.cross_present = traj.samples.front().cross_present;
  if (traj.samples.size() > 1 && !traj.synthetic) {
    s.energy_present = true;
    s.energy_residual_rel =
        energy_residual(traj, 0, traj.samples.size() - 1).relative;
  }
  return s;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

std::string to_json(const OdiReport& rep) {
  ordered_json j;
  j["report"] = "verify-odi";
  j["config_hash"] = rep.config_hash;
  j["sigma"] = rep.sigma;
  j["k_emp"] = rep.k_emp;
  j["exponents"] = exponents_json(rep.exponents);
  if (rep.terms_present) {
    ordered_json t;
    t["mu"] = rep.terms.mu;
    t["sigma"] = rep.terms.sigma;
    t["k_emp"] = rep.terms.k_emp;
    t["c_combined"] = rep.terms.c_combined;
    ordered_json per = ordered_json::array();
    for (const EtaConstants& e : rep.terms.per_eta) {
      ordered_json row;
      row["eta"] = e.eta;
      row["c_chemo_pair"] = e.c_chemo_pair;
      row["c_convection"] = e.c_convection;
      row["c_gradient_coupling"] = e.c_gradient_coupling;
      row["c_buoyancy"] = e.c_buoyancy;
      per.push_back(row);
    }
    t["per_eta"] = per;
    j["terms"] = t;
  }
  j["omissions"] = rep.omissions;
  return dump(j);
}

std::string to_json(const DimensionReport& rep) {
  ordered_json j;
  j["report"] = "estimate-dimension";
  j["config_hash"] = rep.config_hash;
  j["d"] = rep.d;
  j["s"] = rep.s;
  j["a"] = rep.a;
  j["C"] = rep.C;
  j["ls_certificate"] = rep.ls_value;
  if (rep.tail_start)
    j["tail_start"] = *rep.tail_start;
  else
    j["tail_start"] = nullptr;
  j["empty_seeds"] = rep.empty_seeds;
  j["boundary_flagged"] = rep.boundary_flagged;
  j["singular_samples"] = rep.singular_samples;
  j["singular_components"] = rep.singular_components;
  ordered_json table = ordered_json::array();
  for (const DimensionRow& row : rep.table) {
    ordered_json r;
    r["delta"] = row.delta;
    r["pieces"] = row.pieces;
    r["premeasure"] = row.premeasure;
    table.push_back(r);
  }
  j["premeasure_table"] = table;
  j["decay_slope"] = rep.decay_slope;
  j["verdict"] = rep.verdict;
  return dump(j);
}

std::string to_json(const TrajectorySummary& rep) {
  ordered_json j;
  j["report"] = "analyze";
  j["config_hash"] = rep.config_hash;
  j["samples"] = rep.samples;
  j["t_first"] = rep.t_first;
  j["t_last"] = rep.t_last;
  j["spacing"] = rep.spacing;
  j["synthetic"] = rep.synthetic;
  j["blow_up"] = rep.blow_up;
  ordered_json y;
  y["first"] = rep.y_first;
  y["last"] = rep.y_last;
  y["min"] = rep.y_min;
  y["max"] = rep.y_max;
  j["y"] = y;
  ordered_json health;
  health["cfl_max"] = rep.cfl_max;
  health["mass_drift_max"] = rep.mass_drift_max;
  health["c_overshoot_max"] = rep.c_overshoot_max;
  health["n_undershoot_max"] = rep.n_undershoot_max;
  health["floor_hits_total"] = rep.floor_hits_total;
  health["clip_hits_total"] = rep.clip_hits_total;
  j["health"] = health;
  j["mass_first"] = rep.mass_first;
  j["mass_last"] = rep.mass_last;
  j["kinetic_first"] = rep.kinetic_first;
  j["kinetic_last"] = rep.kinetic_last;
  j["cross_present"] = rep.cross_present;
  j["quasi_present"] = rep.quasi_present;
  if (rep.energy_present)
    j["energy_residual_rel"] = rep.energy_residual_rel;
  else
    j["energy_residual_rel"] = nullptr;
  return dump(j);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("short write: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cns
