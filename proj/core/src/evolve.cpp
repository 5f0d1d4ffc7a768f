#include "hypercauchy/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hypercauchy/parallel.hpp"

namespace hypercauchy {

namespace {

void check_controls(const SolveControls& ctl) {
  if (!(ctl.rk_abs_tol > 0.0) || !(ctl.rk_rel_tol > 0.0))
    throw std::invalid_argument("SolveControls: tolerances must be positive");
  if (!(ctl.max_step > 0.0)) throw std::invalid_argument("SolveControls: max_step must be positive");
  if (!(ctl.snapshot_interval > 0.0))
    throw std::invalid_argument("SolveControls: snapshot_interval must be positive");
  if (ctl.k_monitor < 0) throw std::invalid_argument("SolveControls: k_monitor must be >= 0");
  if (ctl.c1_breakdown_threshold < 0.0)
    throw std::invalid_argument("SolveControls: threshold must be >= 0");
}

double resolve_threshold(const SolveControls& ctl, const Field& f) {
  double c1 = c1_norm(f);
  if (ctl.c1_breakdown_threshold == 0.0) {
    return c1 > 0.0 ? 1e3 * c1 : std::numeric_limits<double>::infinity();
  }
  if (ctl.c1_breakdown_threshold <= c1)
    throw std::invalid_argument("SolveControls: threshold must exceed the initial C1 norm");
  return ctl.c1_breakdown_threshold;
}

// One classic fourth-order step of size h starting from the supplied k1.
Field rk4_step(const HyperbolicSystem& sys, const Mollifier& m, double t, const Field& y, double h,
               const Field& k1) {
  Field stage = y;
  stage.axpy(0.5 * h, k1);
  Field k2 = mollified_rhs(sys, m, t + 0.5 * h, stage);
  stage = y;
  stage.axpy(0.5 * h, k2);
  Field k3 = mollified_rhs(sys, m, t + 0.5 * h, stage);
  stage = y;
  stage.axpy(h, k3);
  Field k4 = mollified_rhs(sys, m, t + h, stage);
  Field out = y;
  out.axpy(h / 6.0, k1);
  out.axpy(h / 3.0, k2);
  out.axpy(h / 3.0, k3);
  out.axpy(h / 6.0, k4);
  return out;
}

void enumerate_alphas(int dim, int k, std::vector<std::vector<int>>& out) {
  out.clear();
  if (dim == 1) {
    for (int a = 0; a <= k; ++a) out.push_back({a});
  } else {
    for (int a1 = 0; a1 <= k; ++a1)
      for (int a2 = 0; a1 + a2 <= k; ++a2) out.push_back({a1, a2});
  }
}

void log_snapshot(Trajectory& traj, const HyperbolicSystem& sys, const Mollifier& m, double t,
                  const Field& y, int k) {
  traj.times.push_back(t);
  traj.hk_log.push_back(sobolev_norm(y, k));
  traj.c1_log.push_back(c1_norm(y));
  traj.energy_weighted_log.push_back(weighted_energy(sys, m, t, y, k));
  traj.states.push_back(y);
}

}  // namespace

double weighted_energy(const HyperbolicSystem& sys, const Mollifier& m, double t, const Field& u,
                       int k) {
  if (!sys.a0) {
    double s = sobolev_norm(u, k);
    return s * s;
  }
  const int w = sys.width;
  Field smooth = mollify(u, m);
  GridSpec wspec = u.spec().with_width(w * w, ScalarKind::complex_valued);
  Field weight = nodewise(wspec, {&smooth},
                          [&](const double* x, const cdouble* const* in, cdouble* out) {
                            CoefficientContext ctx{t, x, in[0]};
                            sys.a0(ctx, out);
                          });
  std::vector<std::vector<int>> alphas;
  enumerate_alphas(u.spec().dim, k, alphas);
  double acc = 0.0;
  for (const auto& alpha : alphas) {
    Field d = partial(u, alpha);
    acc += weighted_inner(d, d, weight).real();
  }
  return acc;
}

Trajectory integrate(const HyperbolicSystem& sys, const Field& f, const Mollifier& m, double t_end,
                     const SolveControls& ctl, double t_start) {
  check_controls(ctl);
  if (f.width() != sys.width || f.spec().dim != sys.dim)
    throw std::invalid_argument("integrate: field does not match system shape");
  if (!(t_end >= t_start)) throw std::invalid_argument("integrate: t_end before t_start");
  const double threshold = resolve_threshold(ctl, f);
  const int k = ctl.k_monitor;
  const double h_floor = 1e-12 * std::abs(t_end);

  Trajectory traj;
  traj.t_start = t_start;
  log_snapshot(traj, sys, m, t_start, f, k);

  Field y = f;
  double t = t_start;
  double h = std::min(ctl.max_step, ctl.snapshot_interval);
  long snap = 1;

  while (t < t_end) {
    const double t_next = std::min(t_start + double(snap) * ctl.snapshot_interval, t_end);
    while (t < t_next) {
      const bool clipped = t_next - t <= h;
      const double h_try = clipped ? t_next - t : h;

      Field k1 = mollified_rhs(sys, m, t, y);
      Field big = rk4_step(sys, m, t, y, h_try, k1);
      Field mid = rk4_step(sys, m, t, y, 0.5 * h_try, k1);
      Field k1b = mollified_rhs(sys, m, t + 0.5 * h_try, mid);
      Field fine = rk4_step(sys, m, t + 0.5 * h_try, mid, 0.5 * h_try, k1b);

      big -= fine;
      const double err = l2_norm(big) / 15.0;
      const double tol = ctl.rk_abs_tol + ctl.rk_rel_tol * l2_norm(fine);

      if (std::isfinite(err) && err <= tol) {
        t = clipped ? t_next : t + h_try;
        y = std::move(fine);
        const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 5.0);
        h = std::min(ctl.max_step, h_try * grow);
        // The extension criterion watches the C1 norm after every step so a
        // crossing cannot hide (or blow past the pole) inside one interval.
        if (c1_norm(y) > threshold) {
          log_snapshot(traj, sys, m, t, y, k);
          traj.terminated_by = Termination::breakdown;
          return traj;
        }
      } else {
        // A non-finite estimate (stage blew past a pole) shrinks at the cap.
        const double fac =
            std::isfinite(err) ? std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 5.0) : 0.2;
        h = h_try * fac;
        if (h < h_floor) {
          if (t > traj.times.back()) log_snapshot(traj, sys, m, t, y, k);
          traj.terminated_by = Termination::step_failure;
          return traj;
        }
      }
    }
    log_snapshot(traj, sys, m, t_next, y, k);
    ++snap;
  }
  traj.terminated_by = Termination::reached_t_end;
  return traj;
}

FamilyReport solve_family(const HyperbolicSystem& sys, const Field& f,
                          std::span<const double> eps_schedule, double t_end,
                          const SolveControls& ctl) {
  if (eps_schedule.empty()) throw std::invalid_argument("solve_family: empty schedule");
  for (std::size_t i = 0; i + 1 < eps_schedule.size(); ++i)
    if (!(eps_schedule[i] > eps_schedule[i + 1]))
      throw std::invalid_argument("solve_family: schedule must be strictly decreasing");
  for (double e : eps_schedule)
    if (!(e >= 0.0)) throw std::invalid_argument("solve_family: negative epsilon");

  FamilyReport rep;
  rep.epsilons.assign(eps_schedule.begin(), eps_schedule.end());
  const std::size_t n = rep.epsilons.size();
  rep.members.resize(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    rep.members[i] = integrate(sys, f, Mollifier(rep.epsilons[i]), t_end, ctl);
  });

  rep.complete = true;
  for (const Trajectory& tr : rep.members)
    rep.complete = rep.complete && tr.terminated_by == Termination::reached_t_end;
  rep.accepted_index = n - 1;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Trajectory& a = rep.members[i];
    const Trajectory& b = rep.members[i + 1];
    const std::size_t common = std::min(a.states.size(), b.states.size());
    double gap = 0.0;
    for (std::size_t j = 0; j < common; ++j) gap = std::max(gap, l2_norm(a.states[j] - b.states[j]));
    rep.pairwise_gaps.push_back(gap);
  }

  // Least-squares slope of log gap against log epsilon (coarser member).
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.pairwise_gaps.size(); ++i) {
    if (rep.pairwise_gaps[i] > 0.0 && rep.epsilons[i] > 0.0) {
      lx.push_back(std::log(rep.epsilons[i]));
      ly.push_back(std::log(rep.pairwise_gaps[i]));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= double(lx.size());
    my /= double(lx.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    if (den > 0.0) {
      rep.fitted_order = num / den;
      rep.has_order = true;
    }
  }
  return rep;
}

BreakdownReport breakdown_scan(const HyperbolicSystem& sys, const Field& f,
                               const SolveControls& ctl, double t_max) {
  BreakdownReport rep;
  rep.t_max = t_max;
  rep.threshold = resolve_threshold(ctl, f);
  SolveControls fixed = ctl;
  fixed.c1_breakdown_threshold =
      std::isinf(rep.threshold) ? 0.0 : rep.threshold;  // keep auto for zero data
  rep.trajectory = integrate(sys, f, Mollifier(), t_max, fixed);
  rep.last_time = rep.trajectory.times.back();
  switch (rep.trajectory.terminated_by) {
    case Termination::breakdown:
      rep.broke_down = true;
      rep.breakdown_time = rep.last_time;
      break;
    case Termination::step_failure:
      rep.step_failed = true;
      break;
    case Termination::reached_t_end:
      break;
  }
  return rep;
}

std::vector<LifetimePoint> lifetime_curve(const HyperbolicSystem& sys, const Field& f_base,
                                          std::span<const double> amplitudes,
                                          const SolveControls& ctl, double t_max) {
  if (!sys.semilinear || !sys.punctured)
    throw std::invalid_argument(
        "lifetime_curve: needs a semilinear punctured system (zero reference solution)");
  if (amplitudes.empty()) throw std::invalid_argument("lifetime_curve: no amplitudes");

  std::vector<LifetimePoint> points(amplitudes.size());
  parallel_for(static_cast<std::int64_t>(amplitudes.size()), [&](std::int64_t i) {
    const double a = amplitudes[i];
    Field g = a * f_base;
    BreakdownReport rep = breakdown_scan(sys, g, ctl, t_max);
    LifetimePoint p;
    p.amplitude = a;
    p.hk_norm = sobolev_norm(g, ctl.k_monitor);
    if (rep.broke_down) {
      p.lifetime = rep.breakdown_time;
    } else if (rep.step_failed) {
      p.lifetime = rep.last_time;
    } else {
      p.lifetime = t_max;
      p.censored = true;
    }
    points[i] = p;
  });

  // Smaller data must not die sooner; tolerate only step-resolution jitter.
  std::vector<LifetimePoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const LifetimePoint& a, const LifetimePoint& b) { return a.hk_norm < b.hk_norm; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double slack = 1e-6 * (1.0 + sorted[i].lifetime);
    if (sorted[i + 1].lifetime > sorted[i].lifetime + slack &&
        sorted[i + 1].hk_norm > sorted[i].hk_norm)
      throw std::runtime_error("lifetime_curve: lifetimes increase with the initial norm");
  }
  return points;
}

DivergenceReport uniqueness_probe(const HyperbolicSystem& sys, const Field& f,
                                  std::span<const Field> delta_perturbations, const Mollifier& m,
                                  double t_end, const SolveControls& ctl) {
  DivergenceReport rep;
  Trajectory base = integrate(sys, f, m, t_end, ctl);
  Trajectory again = integrate(sys, f, m, t_end, ctl);
  rep.repeat_bitwise_identical = bitwise_equal(base, again);

  for (const Field& d : delta_perturbations) {
    Trajectory perturbed = integrate(sys, f + d, m, t_end, ctl);
    const std::size_t common = std::min(base.states.size(), perturbed.states.size());
    double div = 0.0;
    for (std::size_t j = 0; j < common; ++j)
      div = std::max(div, l2_norm(base.states[j] - perturbed.states[j]));
    rep.divergences.push_back(div);
    rep.max_divergence = std::max(rep.max_divergence, div);
  }
  return rep;
}

AuditReport energy_inequality_audit(const Trajectory& traj) {
  AuditReport rep;
  const std::size_t n = traj.times.size();
  if (n == 0) {
    rep.satisfied = true;
    return rep;
  }
  const std::vector<double>& E = traj.energy_weighted_log;
  const std::vector<double>& c1 = traj.c1_log;

  rep.rates.resize(n > 1 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    rep.rates[i] = std::max(0.0, (E[i + 1] - E[i]) / dt) / (1.0 + E[i]);
  }

  // Monotone fit: phi(c) = max rate observed at a C1 level <= c.
  rep.phi.resize(rep.rates.size());
  for (std::size_t i = 0; i < rep.rates.size(); ++i) {
    double p = 0.0;
    for (std::size_t j = 0; j < rep.rates.size(); ++j)
      if (c1[j] <= c1[i]) p = std::max(p, rep.rates[j]);
    rep.phi[i] = p;
  }

  rep.envelope.resize(n);
  rep.envelope[0] = E[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    rep.envelope[i + 1] = (1.0 + rep.envelope[i]) * std::exp(rep.phi[i] * dt) - 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double viol = (E[i] - rep.envelope[i]) / (1.0 + rep.envelope[i]);
    rep.max_violation = std::max(rep.max_violation, viol);
  }
  rep.max_violation = std::max(rep.max_violation, 0.0);
  rep.satisfied = rep.max_violation <= 1e-9;
  return rep;
}

bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
  if (a.t_start != b.t_start || a.terminated_by != b.terminated_by) return false;
  if (a.times != b.times || a.hk_log != b.hk_log || a.c1_log != b.c1_log ||
      a.energy_weighted_log != b.energy_weighted_log)
    return false;
  if (a.states.size() != b.states.size()) return false;
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    if (!(a.states[i].spec() == b.states[i].spec())) return false;
    auto ca = a.states[i].coefficients();
    auto cb = b.states[i].coefficients();
    for (std::size_t j = 0; j < ca.size(); ++j)
      if (ca[j] != cb[j]) return false;
  }
  return true;
}

}  // namespace hypercauchy
