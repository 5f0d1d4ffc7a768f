#include "hypercauchy/causal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hypercauchy/io.hpp"

namespace hypercauchy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string short_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

}  // namespace

bool regions_equal(const CausalRegion& a, const CausalRegion& b) {
  return a.lo == b.lo && a.hi == b.hi && a.slice == b.slice;
}

bool regions_overlap(const CausalRegion& a, const CausalRegion& b) {
  return std::max(a.lo, b.lo) < std::min(a.hi, b.hi);
}

double CausalPlan::temporal(double t) const { return std::log(t); }

CausalRegion CausalPlan::region(int i, int n) const {
  if (n < 1 || n > n_max) throw std::out_of_range("region: step out of range");
  const auto& row = regions[static_cast<std::size_t>(n - 1)];
  if (i < 1 || static_cast<std::size_t>(i) > row.size())
    throw std::out_of_range("region: band index out of range");
  return row[static_cast<std::size_t>(i - 1)];
}

CausalRegion CausalPlan::annulus(int i) const {
  if (i < 1 || static_cast<std::size_t>(i) > radii.size())
    throw std::out_of_range("annulus: index out of range");
  CausalRegion d;
  d.lo = i == 1 ? 0.0 : radii[static_cast<std::size_t>(i - 2)];
  d.hi = radii[static_cast<std::size_t>(i - 1)];
  d.slice = 0;
  return d;
}

CausalPlan plan(const std::vector<double>& radii, double r1, int n_max) {
  if (n_max < 1) throw std::invalid_argument("plan: n_max must be at least 1");
  if (radii.size() < static_cast<std::size_t>(n_max) + 1)
    throw std::invalid_argument(
        "plan: need n_max + 1 radii so the final terminal band exists");
  if (radii.front() <= 0.0)
    throw std::invalid_argument("plan: radii must be positive");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (radii[k] <= radii[k - 1])
      throw std::invalid_argument("plan: radii must be strictly increasing");
  if (!(r1 < std::log(radii.front())))
    throw std::invalid_argument(
        "plan: r1 must lie below ln R_1, the top of D^+(C_1)");

  CausalPlan p;
  p.radii = radii;
  p.r1 = r1;
  p.n_max = n_max;
  p.r_seq.resize(static_cast<std::size_t>(n_max) + 1);
  p.t_seq.resize(static_cast<std::size_t>(n_max) + 1);
  p.tau_seq.resize(static_cast<std::size_t>(n_max));
  p.r_seq[0] = r1;
  p.t_seq[0] = std::exp(r1);
  for (int k = 1; k <= n_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    // Lowest temporal value on the lateral boundary of K_{k+1} reachable
    // from the closure of C_k: the cones meet at t = (R_{k+1} - R_k) / 2.
    p.tau_seq[ku - 1] = std::log((radii[ku] - radii[ku - 1]) / 2.0);
    p.r_seq[ku] = std::min(p.r_seq[ku - 1] - 1.0, p.tau_seq[ku - 1]);
    p.t_seq[ku] = std::exp(p.r_seq[ku]);
  }

  p.regions.resize(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    auto& row = p.regions[static_cast<std::size_t>(n - 1)];
    row.resize(static_cast<std::size_t>(n) + 1);
    row[0] = CausalRegion{0.0, radii[0], 0};
    for (int i = 2; i <= n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      // Backward cone of the part of S_{i-1} outside K_{i-1}, traced down to
      // the initial slice and clipped to C_i. The inner radius is clamped at
      // zero: once the two backward cones overlap the band fills the whole
      // exhaustion interval.
      row[iu - 1] = CausalRegion{
          std::max(0.0, radii[iu - 2] - 2.0 * p.t_seq[iu - 2]), radii[iu - 1],
          0};
    }
    // Terminal band: the same backward cone stopped on S_{n+1} instead of
    // the initial slice, hence outward-unbounded.
    const auto nu = static_cast<std::size_t>(n);
    row[nu] = CausalRegion{
        std::max(0.0, radii[nu - 1] - 2.0 * p.t_seq[nu - 1] + p.t_seq[nu]),
        kInf, n + 1};
  }
  return p;
}

std::vector<bool> verify_separation(const CausalPlan& p) {
  std::vector<bool> verdicts;
  if (p.n_max < 2) return verdicts;
  verdicts.resize(static_cast<std::size_t>(p.n_max) - 1);
  for (int n = 1; n < p.n_max; ++n) {
    const auto nu = static_cast<std::size_t>(n);
    verdicts[nu - 1] =
        p.radii[nu] - 2.0 * p.t_seq[nu] >= p.radii[nu - 1];
  }
  return verdicts;
}

bool verify_stabilization(const CausalPlan& p) {
  if (p.n_max < 4)
    throw std::invalid_argument(
        "verify_stabilization: need at least 4 steps for a nontrivial check");
  // Step-independence: every band with index i must agree exactly across all
  // steps n, m > i + 1 where both families carry it on the initial slice.
  for (int i = 1; i <= p.n_max - 2; ++i) {
    const CausalRegion ref = p.region(i, i + 2);
    for (int n = i + 3; n <= p.n_max; ++n)
      if (!regions_equal(ref, p.region(i, n))) return false;
  }
  // Annulus property against the stabilized family: no band other than A_i
  // and A_{i+1} may meet D_i. The converse is not required: the sliver
  // D_i cap A_{i+1} has width 2 t_i, which collapses below the representable
  // spacing at R_i once the slice times outrun the mantissa.
  for (int i = 1; i <= p.n_max - 1; ++i) {
    const CausalRegion d = p.annulus(i);
    for (int j = 1; j <= p.n_max; ++j) {
      if (j == i || j == i + 1) continue;
      if (regions_overlap(d, p.region(j, p.n_max))) return false;
    }
  }
  return true;
}

ControlSequence propagate_bounds(const CausalPlan& p, double delta,
                                 const BoundPropagator& propagator) {
  if (!(delta > 0.0))
    throw std::invalid_argument("propagate_bounds: delta must be positive");
  if (!propagator)
    throw std::invalid_argument("propagate_bounds: propagator must be set");

  const auto require_positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(
          std::string("propagate_bounds: propagator produced a nonpositive "
                      "bound on ") +
          what);
    return v;
  };

  // Probe the propagator for monotonicity in its bound argument on the
  // geometries it will actually see: an inner split, an outer split, and an
  // initial-slice band.
  {
    const CausalRegion term = p.regions.front().back();
    const double edge = p.radii[1] - p.t_seq[1];
    const CausalRegion probes[] = {
        CausalRegion{term.lo, edge, term.slice},
        CausalRegion{edge, kInf, term.slice},
        p.regions.front().front(),
    };
    const double lows[] = {delta / 4.0, delta / 2.0};
    const double highs[] = {delta / 2.0, delta};
    for (const auto& reg : probes)
      for (int k = 0; k < 2; ++k) {
        const double at_low = require_positive(propagator(reg, lows[k]),
                                               "a probe region");
        const double at_high = require_positive(propagator(reg, highs[k]),
                                                "a probe region");
        if (at_low > at_high)
          throw std::invalid_argument(
              "propagate_bounds: propagator is not monotone in the bound");
      }
  }

  ControlSequence cs;
  cs.delta = delta;
  cs.a_table.resize(static_cast<std::size_t>(p.n_max));
  // Base: the budget on S_1 splits evenly between the part inside K_1 and
  // the rest, one target per step-1 region.
  cs.a_table[0] = {delta / 2.0, delta / 2.0};
  for (int n = 1; n < p.n_max; ++n) {
    const auto nu = static_cast<std::size_t>(n);
    const std::vector<double>& prev = cs.a_table[nu - 1];
    const double target = prev.back();
    const CausalRegion term = p.regions[nu - 1].back();
    // Split of the step-n terminal band along the boundary of K_{n+1} on its
    // carrier slice S_{n+1}.
    const double edge = p.radii[nu] - p.t_seq[nu];
    const CausalRegion inner{term.lo, edge, term.slice};
    const CausalRegion outer{edge, kInf, term.slice};
    std::vector<double>& row = cs.a_table[nu];
    row.assign(prev.begin(), prev.end() - 1);
    // The inner part is reached from the new initial-slice band, the outer
    // part from the new terminal band; each gets its own budget.
    row.push_back(require_positive(propagator(inner, target), "an inner split"));
    row.push_back(require_positive(propagator(outer, target), "an outer split"));
  }

  const std::vector<double>& last = cs.a_table[static_cast<std::size_t>(p.n_max) - 1];
  cs.a_limits.assign(last.begin(), last.end() - 1);

  // Pointwise budget per band: integrated budget over the square root of the
  // band's length; each annulus takes the smaller of the two bands it meets.
  if (p.n_max >= 2) {
    cs.b_table.resize(static_cast<std::size_t>(p.n_max) - 1);
    const auto pointwise = [&](int j) {
      const CausalRegion a = p.region(j, p.n_max);
      const double length = 2.0 * (a.hi - a.lo);
      return cs.a_limits[static_cast<std::size_t>(j - 1)] / std::sqrt(length);
    };
    for (int i = 1; i <= p.n_max - 1; ++i)
      cs.b_table[static_cast<std::size_t>(i - 1)] =
          std::min(pointwise(i), pointwise(i + 1));
  }
  return cs;
}

std::string plan_csv(const CausalPlan& p) {
  CsvTable table({"n", "r_n", "t_n", "i", "carrier", "lo", "hi"});
  for (int n = 1; n <= p.n_max; ++n) {
    const auto nu = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < p.regions[nu - 1].size(); ++i) {
      const CausalRegion& reg = p.regions[nu - 1][i];
      table.add_row({std::to_string(n), format_real(p.r_seq[nu - 1]),
                     format_real(p.t_seq[nu - 1]), std::to_string(i + 1),
                     std::to_string(reg.slice), format_real(reg.lo),
                     format_real(reg.hi)});
    }
  }
  return table.to_string();
}

std::string plan_diagram(const CausalPlan& p) {
  std::ostringstream os;
  os << "causal plan: " << p.n_max << " steps, r1 = " << short_real(p.r1)
     << "\n";
  os << "slice ladder (T = ln t):\n";
  for (int n = 1; n <= p.n_max + 1; ++n) {
    const auto nu = static_cast<std::size_t>(n);
    os << "  S_" << n << "  r = " << short_real(p.r_seq[nu - 1])
       << "  t = " << short_real(p.t_seq[nu - 1]) << "\n";
  }

  constexpr int kWidth = 60;
  const double scale = p.radii[static_cast<std::size_t>(p.n_max) - 1];
  const auto column = [&](double x) {
    return static_cast<int>(std::lround(x / scale * kWidth));
  };
  os << "initial-slice bands, |x| from 0 to " << short_real(scale)
     << " ('[' closed, ')' open):\n";
  for (int i = 1; i <= p.n_max; ++i) {
    const CausalRegion a = p.region(i, p.n_max);
    const int c0 = column(a.lo);
    const int c1 = std::max(column(a.hi), c0 + 1);
    os << "  A_" << i << (i < 10 ? " " : "") << " ";
    os << std::string(static_cast<std::size_t>(c0), ' ') << '[';
    if (c1 - c0 > 1) os << std::string(static_cast<std::size_t>(c1 - c0 - 1), '=');
    os << ")\n";
  }

  os << "annuli:\n";
  for (int i = 1; i <= p.n_max - 1; ++i) {
    const CausalRegion d = p.annulus(i);
    os << "  D_" << i << " = [" << short_real(d.lo) << ", " << short_real(d.hi)
       << ")  meets";
    for (int j = 1; j <= p.n_max; ++j)
      if (regions_overlap(d, p.region(j, p.n_max))) os << " A_" << j;
    os << "\n";
  }

  os << "terminal bands:\n";
  for (int n = 1; n <= p.n_max; ++n) {
    const CausalRegion term = p.regions[static_cast<std::size_t>(n - 1)].back();
    os << "  step " << n << ": |x| >= " << short_real(term.lo) << "  on S_"
       << term.slice << "\n";
  }
  return os.str();
}

}  // namespace hypercauchy
