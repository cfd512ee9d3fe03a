// ============================================================================
//  hausdorff.cpp -- regular-set propagation, greedy covers, premeasures
// ============================================================================
#include "cns/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cns {

namespace {

double uniform_spacing(const std::vector<double>& t) {
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

// maximal runs [first, last] of samples with mask == value
std::vector<std::pair<std::size_t, std::size_t>> runs_of(
    const std::vector<char>& mask, char value) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t k = 0;
  while (k < mask.size()) {
    if (mask[k] != value) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j + 1 < mask.size() && mask[j + 1] == value) ++j;
    runs.emplace_back(k, j);
    k = j + 1;
  }
  return runs;
}

}  // namespace

double dimension_bound(double s, double a) {
  if (!(s > 0.0) || !(a > s))
    throw std::invalid_argument("dimension_bound: need a > s > 0");
  return 1.0 - s / a;
}

// --- RegularSet --------------------------------------------------------------

double RegularSet::spacing() const { return uniform_spacing(t); }

std::vector<Interval> RegularSet::intervals() const {
  std::vector<Interval> out;
  for (const auto& [i, j] : runs_of(regular, 1)) {
    if (j == i) continue;  // an isolated sample has no open extent
    double lo = t[i];
    // a run that begins right after T* represents the fiat tail (T*, T)
    if (tail_start && t[i] > *tail_start && (i == 0 || t[i - 1] <= *tail_start))
      lo = *tail_start;
    out.push_back({lo, t[j]});
  }
  return out;
}

std::vector<Interval> RegularSet::singular_components() const {
  std::vector<Interval> out;
  for (const auto& [i, j] : runs_of(regular, 0)) out.push_back({t[i], t[j]});
  return out;
}

// --- propagation -------------------------------------------------------------

RegularSet propagate_regular_set(const std::vector<double>& t,
                                 const std::vector<double>& z, double C,
                                 double a, const std::vector<double>& seeds,
                                 std::optional<double> tail_start) {
  if (t.size() != z.size())
    throw std::invalid_argument("propagate_regular_set: size mismatch");
  const double h = uniform_spacing(t);
  if (!(C > 0.0) || !(a > 0.0))
    throw std::invalid_argument("propagate_regular_set: need C > 0, a > 0");
  for (double v : z)
    if (!(v >= 1.0))
      throw std::invalid_argument("propagate_regular_set: z must be >= 1");

  std::set<std::size_t> seed_idx;
  for (double s : seeds) {
    if (s < t.front() - 0.5 * h || s > t.back() + 0.5 * h)
      throw std::invalid_argument("propagate_regular_set: seed outside horizon");
    const auto idx = static_cast<std::size_t>(
        std::llround((s - t.front()) / h));
    seed_idx.insert(std::min(idx, t.size() - 1));
  }

  RegularSet reg;
  reg.horizon = t.back();
  reg.t = t;
  reg.tail_start = tail_start;
  reg.empty_seeds = seeds.empty();
  reg.regular.assign(t.size(), 0);

  for (std::size_t k = 0; k < t.size(); ++k) {
    bool ok = seed_idx.count(k) > 0;
    if (tail_start && t[k] > *tail_start) ok = true;
    if (!ok && k > 0 && reg.regular[k - 1]) {
      const double z_eff = std::max(z[k - 1], z[k]);
      ok = C * std::pow(z_eff, -a) > h;
    }
    reg.regular[k] = ok ? 1 : 0;
  }
  return reg;
}

// --- covering ----------------------------------------------------------------

CoverEstimate cover_singular_set(const RegularSet& reg,
                                 const std::vector<double>& z, double C,
                                 double a, double delta) {
  if (z.size() != reg.t.size())
    throw std::invalid_argument("cover_singular_set: size mismatch");
  if (!(delta > 0.0))
    throw std::invalid_argument("cover_singular_set: delta must be > 0");
  if (!(C > 0.0) || !(a > 0.0))
    throw std::invalid_argument("cover_singular_set: need C > 0, a > 0");
  const std::vector<double>& t = reg.t;
  const double h = uniform_spacing(t);

  CoverEstimate cov;
  cov.delta = delta;
  const auto runs = runs_of(reg.regular, 0);

  std::size_t r = 0;
  while (r < runs.size()) {
    const std::size_t first = runs[r].first;
    const std::size_t anchor = first == 0 ? 0 : first - 1;
    if (first == 0) cov.boundary_flagged = true;
    const double ta = t[anchor];
    const double window = C * std::pow(z[anchor], -a);

    double target = t[runs[r].second];
    std::size_t r_end = r + 1;
    double piece = 0.0;
    long k = 0;
    for (;;) {
      const double l_nat = std::max(window, target - ta + h);
      piece = std::min(l_nat, delta);
      k = std::max<long>(1, static_cast<long>(
                                std::ceil((target - ta) / piece - 1e-12)));
      const double end = ta + static_cast<double>(k) * piece;
      // absorb later components that the laid span reaches
      bool grew = false;
      while (r_end < runs.size() && t[runs[r_end].first] <= end) {
        if (t[runs[r_end].second] > target) {
          target = t[runs[r_end].second];
          grew = true;
        }
        ++r_end;
      }
      if (!grew) break;
    }
    for (long i = 0; i < k; ++i)
      cov.pieces.push_back(
          {ta + static_cast<double>(i) * piece,
           ta + static_cast<double>(i + 1) * piece});
    cov.components_covered += r_end - r;
    r = r_end;
  }

  // inclusion check: every singular sample must land in some piece
  std::size_t p = 0;
  for (std::size_t k2 = 0; k2 < t.size(); ++k2) {
    if (reg.regular[k2]) continue;
    const double slack = 1e-12 * std::max(1.0, std::abs(t[k2]));
    while (p < cov.pieces.size() && cov.pieces[p].hi < t[k2] - slack) ++p;
    if (p >= cov.pieces.size() || cov.pieces[p].lo > t[k2] + slack)
      throw std::logic_error("cover_singular_set: inclusion check failed");
  }
  return cov;
}

double premeasure(const CoverEstimate& cover, double d) {
  if (!(d >= 0.0)) throw std::invalid_argument("premeasure: d must be >= 0");
  double s = 0.0;
  for (const Interval& iv : cover.pieces) s += std::pow(iv.length(), d);
  return s;
}

// --- box counting ------------------------------------------------------------

std::size_t box_count(const std::vector<double>& points, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("box_count: delta must be > 0");
  std::set<long long> boxes;
  for (double x : points)
    boxes.insert(static_cast<long long>(std::floor(x / delta)));
  return boxes.size();
}

double box_counting_dimension(const std::vector<double>& points,
                              const std::vector<double>& scales) {
  if (points.empty())
    throw std::invalid_argument("box_counting_dimension: empty point set");
  if (scales.size() < 2)
    throw std::invalid_argument("box_counting_dimension: need >= 2 scales");
  std::vector<double> x, y;
  for (double delta : scales) {
    x.push_back(-std::log(delta));
    y.push_back(std::log(static_cast<double>(box_count(points, delta))));
  }
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) xm += x[i], ym += y[i];
  xm /= static_cast<double>(x.size());
  ym /= static_cast<double>(y.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("box_counting_dimension: scales must differ");
  return sxy / sxx;
}

// --- synthesis ---------------------------------------------------------------

SyntheticTrajectory synthesize(const SynthSpec& spec) {
  if (!(spec.beta > 0.0)) throw std::invalid_argument("synthesize: beta must be > 0");
  if (!(spec.baseline >= 1.0))
    throw std::invalid_argument("synthesize: baseline must be >= 1");
  if (!(spec.cap > spec.baseline))
    throw std::invalid_argument("synthesize: cap must exceed the baseline");
  if (!(spec.h > 0.0) || !(spec.horizon > spec.h))
    throw std::invalid_argument("synthesize: need 0 < h < horizon");
  if (spec.ls_exponent < 0.0)
    throw std::invalid_argument("synthesize: ls_exponent must be >= 0");
  if (spec.ls_exponent > 0.0 && spec.ls_exponent * spec.beta >= 1.0)
    throw std::invalid_argument(
        "synthesize: profile |t - sigma|^{-beta} is not L^s when s*beta >= 1; "
        "an L^s certificate cannot be issued for these parameters");
  for (double s : spec.singular_times)
    if (s < 0.0 || s > spec.horizon)
      throw std::invalid_argument("synthesize: singular time outside horizon");

  const auto n = static_cast<std::size_t>(
      std::llround(spec.horizon / spec.h));
  SyntheticTrajectory out;
  out.spec = spec;
  out.t.resize(n + 1);
  out.z.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double tk = static_cast<double>(k) * spec.h;
    double v = spec.baseline;
    for (double s : spec.singular_times) {
      const double dist = std::abs(tk - s);
      if (dist == 0.0) {
        v = spec.cap;
        break;
      }
      v += std::pow(dist, -spec.beta);
      if (v >= spec.cap) {
        v = spec.cap;
        break;
      }
    }
    out.t[k] = tk;
    out.z[k] = std::min(v, spec.cap);
  }
  return out;
}

std::vector<double> cantor_endpoints(int level, double lo, double hi) {
  if (level < 0) throw std::invalid_argument("cantor_endpoints: level must be >= 0");
  if (!(hi > lo)) throw std::invalid_argument("cantor_endpoints: need hi > lo");
  std::vector<Interval> ivs = {{lo, hi}};
  for (int l = 0; l < level; ++l) {
    std::vector<Interval> next;
    next.reserve(2 * ivs.size());
    for (const Interval& iv : ivs) {
      const double w = iv.length() / 3.0;
      next.push_back({iv.lo, iv.lo + w});
      next.push_back({iv.hi - w, iv.hi});
    }
    ivs = std::move(next);
  }
  std::vector<double> pts;
  pts.reserve(2 * ivs.size());
  for (const Interval& iv : ivs) {
    pts.push_back(iv.lo);
    pts.push_back(iv.hi);
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

Trajectory to_trajectory(const SyntheticTrajectory& synth) {
  Trajectory traj;
  traj.synthetic = true;
  traj.dt = synth.spec.h;
  traj.sample_stride = 1;
  traj.samples.reserve(synth.t.size());
  for (std::size_t k = 0; k < synth.t.size(); ++k) {
    FunctionalSample s;
    s.t = synth.t[k];
    s.y1 = 0.0;
    s.y2 = synth.z[k] - 1.0;
    s.y = synth.z[k];
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace cns
