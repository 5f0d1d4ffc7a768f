#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hypercauchy {

// Closed-form causal bookkeeping on the upper half-plane of 1+1 Minkowski
// space. The initial slice S_inf is {t = 0}, exhausted by the symmetric
// intervals C_n = (-R_n, R_n); the temporal function is T(t, x) = ln t, so
// the auxiliary slices S_n = {t = t_n} with t_n = e^{r_n} accumulate at the
// initial slice from above. Every causal set used here (J^+, J^-, the
// domains of dependence K_n = D^+(C_n)) reduces to interval arithmetic in
// |x|, which keeps all endpoints in log-exp closed form.

// Symmetric band {lo <= |x| < hi} on a constant-t slice, closed at the inner
// radius and open at the outer one; hi may be +inf (terminal bands are
// outward half-lines). lo == 0 degenerates to the single interval (-hi, hi).
struct CausalRegion {
  double lo = 0.0;
  double hi = 0.0;
  int slice = 0;  // 0: the initial slice; k > 0: S_k at t = t_k
};

// Exact endpoint-and-carrier equality.
bool regions_equal(const CausalRegion& a, const CausalRegion& b);

// Nonempty intersection of the |x| bands, ignoring carriers.
bool regions_overlap(const CausalRegion& a, const CausalRegion& b);

struct CausalPlan {
  std::vector<double> radii;  // R_1 < R_2 < ...; at least n_max + 1 entries
  double r1 = 0.0;
  int n_max = 0;
  std::vector<double> r_seq;    // r_1 > r_2 > ...; n_max + 1 entries
  std::vector<double> t_seq;    // t_n = e^{r_n}; n_max + 1 entries
  std::vector<double> tau_seq;  // tau_n = ln((R_{n+1} - R_n) / 2); n_max entries
  // regions[n-1] holds the step-n family A_1 .. A_{n+1}: the first n bands
  // sit on the initial slice, the last is the terminal band on S_{n+1}.
  std::vector<std::vector<CausalRegion>> regions;

  double temporal(double t) const;         // T(t, x) = ln t
  CausalRegion region(int i, int n) const;  // A_i at step n, both 1-based
  // Annulus D_i between consecutive exhaustion sets: D_1 = C_1 and
  // D_i = C_i \ C_{i-1} for i >= 2, half-open like every band here.
  CausalRegion annulus(int i) const;
};

// Builds the slice ladder and region families for n_max steps. r1 must lie
// below ln R_1, the supremum of the temporal function over D^+(C_1), so that
// S_1 meets that domain; each later level is r_{n+1} = min(r_n - 1, tau_n),
// where tau_n is the infimum of T on the part of the lateral boundary of
// K_{n+1} visible from the closure of C_n. radii must be strictly increasing,
// positive, and provide n_max + 1 entries so the final terminal band exists.
CausalPlan plan(const std::vector<double>& radii, double r1, int n_max);

// Per-step verdicts, n = 1 .. n_max - 1: the backward cone of S_{n+1}
// outside K_{n+1} misses C_n, which reduces to R_{n+1} - 2 t_{n+1} >= R_n.
// Reads the stored sequences, so tampering with a plan is observable.
std::vector<bool> verify_separation(const CausalPlan& p);

// Checks that the stored families are step-independent where they overlap
// (exact endpoint equality of A_i across steps m, n > i + 1) and that no
// band of the stabilized family other than A_i and A_{i+1} meets the
// annulus D_i. Requires n_max >= 4 so at least one nontrivial pair exists.
bool verify_stabilization(const CausalPlan& p);

// Maps (region geometry, target bound on the evolved side) to the initial
// bound that suffices to reach it. Must be monotone in the bound argument
// and return positive values for positive targets.
using BoundPropagator = std::function<double(const CausalRegion&, double)>;

struct ControlSequence {
  double delta = 0.0;
  // a_table[n-1] holds a_1 .. a_{n+1} for step n: sup norms budgeted to the
  // region family of that step, the last entry on the terminal band.
  std::vector<std::vector<double>> a_table;
  // Stabilized per-band limits a_i for the initial-slice family, i = 1 .. n_max.
  std::vector<double> a_limits;
  // Pointwise budget on each annulus D_i, i = 1 .. n_max - 1. Each band's
  // integrated budget converts to a pointwise one through the square root of
  // that band's length; the annulus takes the smaller of the two bands it
  // meets.
  std::vector<double> b_table;
};

// Runs the bound induction over the plan. The base step splits delta evenly
// over the two step-1 regions without consulting the propagator; each later
// step feeds the previous terminal bound through the propagator on the inner
// part (terminal band clipped to K_{n+1}) to budget the new initial-slice
// band, and on the outer part (terminal band minus K_{n+1}) to budget the
// new terminal band. The propagator is probed for monotonicity and
// positivity on sample pairs before use.
ControlSequence propagate_bounds(const CausalPlan& p, double delta,
                                 const BoundPropagator& propagator);

// One row per (step, band): n, r_n, t_n, i, carrier slice, lo, hi.
std::string plan_csv(const CausalPlan& p);

// Plain-text layout: slice ladder, initial-slice bands drawn to scale,
// annuli with the bands they meet, and the per-step terminal bands.
std::string plan_diagram(const CausalPlan& p);

}  // namespace hypercauchy
