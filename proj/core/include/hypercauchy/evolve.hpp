#pragma once

#include <span>
#include <vector>

#include "hypercauchy/grid.hpp"
#include "hypercauchy/system.hpp"

namespace hypercauchy {

struct SolveControls {
  double rk_abs_tol = 1e-10;
  double rk_rel_tol = 1e-10;
  double max_step = 0.05;
  // First C1-norm crossing that counts as breakdown; 0 = 1000x the initial
  // C1 norm (unbounded when the initial norm is zero).
  double c1_breakdown_threshold = 0.0;
  double snapshot_interval = 0.05;
  int k_monitor = 4;  // Sobolev order logged
};

enum class Termination { reached_t_end, breakdown, step_failure };

// Snapshots of one run. Logs align with `times`; on breakdown or step
// failure the final entry sits at the step where the run stopped, so the
// last time is not necessarily a snapshot-grid point.
struct Trajectory {
  double t_start = 0.0;
  std::vector<double> times;
  std::vector<Field> states;
  std::vector<double> hk_log;               // ||u(t)||_{H^k_monitor}
  std::vector<double> c1_log;               // grid-sampled C1 norm
  std::vector<double> energy_weighted_log;  // a0-weighted squared H^k energy
  Termination terminated_by = Termination::reached_t_end;
};

// a0-weighted squared Sobolev energy sum_{|alpha|<=k} <a0(t,x,Ju) d^a u, d^a u>;
// plain squared Sobolev norm when a0 is the identity.
double weighted_energy(const HyperbolicSystem& sys, const Mollifier& m, double t, const Field& u,
                       int k);

// Integrates a0 du/dt = J[sum a_j d_j(Ju) + g](t,x,Ju) from t_start to t_end
// with classic Runge-Kutta under step-doubling error control. Monitors are
// logged every snapshot_interval; the C1 threshold is checked after every
// accepted step and stops the run at the crossing. The step controller
// declares failure below 1e-12 * t_end. Identical inputs give bitwise
// identical output.
Trajectory integrate(const HyperbolicSystem& sys, const Field& f, const Mollifier& m, double t_end,
                     const SolveControls& ctl, double t_start = 0.0);

struct FamilyReport {
  std::vector<double> epsilons;       // as given, strictly decreasing
  std::vector<Trajectory> members;    // one per epsilon
  std::vector<double> pairwise_gaps;  // sup over common snapshots of the L2 gap
  double fitted_order = 0.0;          // log-log slope of gap against epsilon
  bool has_order = false;             // needs >= 2 positive gaps
  bool complete = false;              // every member reached t_end
  std::size_t accepted_index = 0;     // finest-epsilon member
};

// Runs integrate once per mollification width and measures the convergence
// of the family as epsilon shrinks. Members run concurrently.
FamilyReport solve_family(const HyperbolicSystem& sys, const Field& f,
                          std::span<const double> eps_schedule, double t_end,
                          const SolveControls& ctl);

struct BreakdownReport {
  bool broke_down = false;
  bool step_failed = false;       // controller died before any crossing
  double breakdown_time = 0.0;    // meaningful when broke_down
  double last_time = 0.0;         // how far the run got
  double threshold = 0.0;         // resolved C1 threshold
  double t_max = 0.0;
  Trajectory trajectory;
};

// Unmollified scan for the first C1 threshold crossing up to t_max.
BreakdownReport breakdown_scan(const HyperbolicSystem& sys, const Field& f,
                               const SolveControls& ctl, double t_max);

struct LifetimePoint {
  double amplitude = 0.0;
  double hk_norm = 0.0;  // ||a * f_base||_{H^k_monitor}
  double lifetime = 0.0;
  bool censored = false;  // survived to t_max
};

// Breakdown scan per amplitude against the zero reference solution; requires
// a semilinear punctured system. Throws if the observed lifetimes fail to be
// nonincreasing in the initial norm.
std::vector<LifetimePoint> lifetime_curve(const HyperbolicSystem& sys, const Field& f_base,
                                          std::span<const double> amplitudes,
                                          const SolveControls& ctl, double t_max);

struct DivergenceReport {
  std::vector<double> divergences;  // sup over common snapshots, per perturbation
  double max_divergence = 0.0;
  bool repeat_bitwise_identical = false;
};

// Solves from f and from each f + delta; also repeats the base run and
// checks bitwise reproducibility.
DivergenceReport uniqueness_probe(const HyperbolicSystem& sys, const Field& f,
                                  std::span<const Field> delta_perturbations, const Mollifier& m,
                                  double t_end, const SolveControls& ctl);

struct AuditReport {
  std::vector<double> rates;     // clamped growth of E per interval, / (1+E)
  std::vector<double> phi;       // monotone envelope of the rates at each c1
  std::vector<double> envelope;  // Gronwall-type bound grown from E(0)
  double max_violation = 0.0;    // how far the energy escapes the envelope
  bool satisfied = false;
};

// Differentiates the logged weighted energy and fits a single monotone rate
// function of the C1 norm such that dE/dt <= phi(c1) * (1 + E) holds across
// the run; the integrated envelope must dominate the energy log.
AuditReport energy_inequality_audit(const Trajectory& traj);

// Exact equality of every time, state coefficient, and logged monitor.
bool bitwise_equal(const Trajectory& a, const Trajectory& b);

}  // namespace hypercauchy
