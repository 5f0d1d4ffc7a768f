#include "hypercauchy/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypercauchy/parallel.hpp"

namespace hypercauchy {
namespace {

using cdouble = std::complex<double>;
using RealFn = std::function<double(const GeomPoint&)>;
using Real4 = std::array<double, 4>;
using Vec4Fn = std::function<Real4(const GeomPoint&)>;
using Diag = std::array<double, 4>;
using DiagFn = std::function<Diag(const GeomPoint&)>;
using CVec = Eigen::VectorXcd;
using CVecFn = std::function<CVec(const GeomPoint&)>;

GeomPoint shifted(GeomPoint p, int axis, double delta) {
  p[static_cast<std::size_t>(axis)] += delta;
  return p;
}

// Central first derivative along one axis; exact truncation order matches
// FdOrder. Every nested use below passes the same h so the whole residual
// scales as h^order.
double d1(const RealFn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return (f(shifted(p, axis, h)) - f(shifted(p, axis, -h))) / (2.0 * h);
  }
  return (-f(shifted(p, axis, 2.0 * h)) + 8.0 * f(shifted(p, axis, h)) -
          8.0 * f(shifted(p, axis, -h)) + f(shifted(p, axis, -2.0 * h))) /
         (12.0 * h);
}

// Staggered (half-step) first difference, the conservative flux realization.
// Same order as d1 but a different truncation constant, so identities whose
// two sides would otherwise collapse to the same stencil on a flat chart
// keep a genuine h^order residual.
double d1s(const RealFn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return (f(shifted(p, axis, 0.5 * h)) - f(shifted(p, axis, -0.5 * h))) / h;
  }
  return (-f(shifted(p, axis, 1.5 * h)) + 27.0 * f(shifted(p, axis, 0.5 * h)) -
          27.0 * f(shifted(p, axis, -0.5 * h)) + f(shifted(p, axis, -1.5 * h))) /
         (24.0 * h);
}

// Direct second derivative; deliberately a different stencil from iterating
// d1 so that comparing the two realizations leaves an order-h^2 (or h^4) gap.
double d2(const RealFn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return (f(shifted(p, axis, h)) - 2.0 * f(p) + f(shifted(p, axis, -h))) /
           (h * h);
  }
  return (-f(shifted(p, axis, 2.0 * h)) + 16.0 * f(shifted(p, axis, h)) -
          30.0 * f(p) + 16.0 * f(shifted(p, axis, -h)) -
          f(shifted(p, axis, -2.0 * h))) /
         (12.0 * h * h);
}

template <class Arr>
Arr combine1(const Arr& fp, const Arr& fm, double h) {
  Arr out{};
  for (std::size_t i = 0; i < fp.size(); ++i) out[i] = (fp[i] - fm[i]) / (2.0 * h);
  return out;
}

template <class Arr>
Arr combine1_4(const Arr& f2p, const Arr& fp, const Arr& fm, const Arr& f2m, double h) {
  Arr out{};
  for (std::size_t i = 0; i < fp.size(); ++i) {
    out[i] = (-f2p[i] + 8.0 * fp[i] - 8.0 * fm[i] + f2m[i]) / (12.0 * h);
  }
  return out;
}

Real4 d1v(const Vec4Fn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return combine1(f(shifted(p, axis, h)), f(shifted(p, axis, -h)), h);
  }
  return combine1_4(f(shifted(p, axis, 2.0 * h)), f(shifted(p, axis, h)),
                    f(shifted(p, axis, -h)), f(shifted(p, axis, -2.0 * h)), h);
}

Diag d1diag(const DiagFn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return combine1(f(shifted(p, axis, h)), f(shifted(p, axis, -h)), h);
  }
  return combine1_4(f(shifted(p, axis, 2.0 * h)), f(shifted(p, axis, h)),
                    f(shifted(p, axis, -h)), f(shifted(p, axis, -2.0 * h)), h);
}

CVec cd1(const CVecFn& f, const GeomPoint& p, int axis, double h, FdOrder ord) {
  if (ord == FdOrder::second) {
    return (f(shifted(p, axis, h)) - f(shifted(p, axis, -h))) / (2.0 * h);
  }
  return (-f(shifted(p, axis, 2.0 * h)) + 8.0 * f(shifted(p, axis, h)) -
          8.0 * f(shifted(p, axis, -h)) + f(shifted(p, axis, -2.0 * h))) /
         (12.0 * h);
}

// Christoffel symbols of a diagonal metric, entries gamma[l][m][n] =
// Gamma^l_{mn}; all metric derivatives come from d1diag at step h.
struct Gamma {
  double v[4][4][4] = {};
};

Gamma christoffels(const DiagFn& g, int dim, const GeomPoint& p, double h, FdOrder ord) {
  Diag d = g(p);
  Diag dd[4] = {};
  for (int mu = 0; mu < dim; ++mu) dd[mu] = d1diag(g, p, mu, h, ord);
  Gamma out;
  for (int l = 0; l < dim; ++l) {
    for (int m = 0; m < dim; ++m) {
      for (int n = 0; n < dim; ++n) {
        double val = 0.0;
        if (l == n) val += dd[m][static_cast<std::size_t>(l)];
        if (l == m) val += dd[n][static_cast<std::size_t>(l)];
        if (m == n) val -= dd[l][static_cast<std::size_t>(m)];
        out.v[l][m][n] = val / (2.0 * d[static_cast<std::size_t>(l)]);
      }
    }
  }
  return out;
}

double stencil_scale(FdOrder ord) { return ord == FdOrder::fourth ? 2.0 : 1.0; }

void require_box(const AnalyticField& f, std::span<const GeomPoint> points, int n,
                 double reach, const char* what) {
  for (const GeomPoint& p : points) {
    for (int axis = 0; axis < n; ++axis) {
      double lo = p[static_cast<std::size_t>(axis)] - reach;
      double hi = p[static_cast<std::size_t>(axis)] + reach;
      if (lo < f.box_lo || hi > f.box_hi) {
        throw std::out_of_range(std::string(what) +
                                ": stencil probes leave the analytic field box");
      }
    }
  }
}

RealFn scalar_fn(const AnalyticField& f) {
  return [&f](const GeomPoint& p) {
    cdouble v;
    f.evaluator(p, &v);
    return v.real();
  };
}

Vec4Fn covector_fn(const AnalyticField& f, int n) {
  return [&f, n](const GeomPoint& p) {
    cdouble buf[4] = {};
    f.evaluator(p, buf);
    Real4 out{};
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = buf[i].real();
    return out;
  };
}

CVecFn spinor_fn(const AnalyticField& f) {
  return [&f](const GeomPoint& p) {
    CVec v(f.width);
    f.evaluator(p, v.data());
    return v;
  };
}

double sign_eps(int mu) { return mu == 0 ? -1.0 : 1.0; }

struct SampleValue {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

using SampleFn = std::function<SampleValue(const GeomPoint&, double)>;

double guarded_order(double res, double res_half) {
  if (res > 0.0 && res_half > 0.0 && std::isfinite(res) && std::isfinite(res_half)) {
    return std::log2(res / res_half);
  }
  return 0.0;
}

void finish_aggregates(ResidualReport& report) {
  report.max_residual = 0.0;
  report.max_residual_half = 0.0;
  for (const ResidualSample& s : report.samples) {
    report.max_residual = std::max(report.max_residual, s.residual);
    report.max_residual_half = std::max(report.max_residual_half, s.residual_half);
  }
  report.estimated_order = guarded_order(report.max_residual, report.max_residual_half);
}

// Evaluates each (label, sample function) family at every point, once at the
// base step and once at half step, in parallel over point-family slots.
ResidualReport run_families(std::span<const GeomPoint> points, double h,
                            const std::vector<std::pair<std::string, SampleFn>>& families) {
  ResidualReport report{};
  report.h = h;
  std::size_t per = points.size();
  report.samples.resize(families.size() * per);
  parallel_for(static_cast<std::int64_t>(report.samples.size()), [&](std::int64_t idx) {
    std::size_t fi = static_cast<std::size_t>(idx) / per;
    std::size_t pi = static_cast<std::size_t>(idx) % per;
    const auto& fam = families[fi];
    SampleValue base = fam.second(points[pi], h);
    SampleValue half = fam.second(points[pi], 0.5 * h);
    ResidualSample& s = report.samples[static_cast<std::size_t>(idx)];
    s.label = fam.first;
    s.point = points[pi];
    s.lhs = base.lhs;
    s.rhs = base.rhs;
    s.residual = base.residual;
    s.residual_half = half.residual;
    s.order = guarded_order(s.residual, s.residual_half);
  });
  finish_aggregates(report);
  return report;
}

void check_dim(int n) {
  if (n < 2 || n > 4) throw std::invalid_argument("chart dimension must be 2, 3, or 4");
}

}  // namespace

AnalyticField analytic_scalar(std::function<double(const GeomPoint&)> f) {
  AnalyticField out;
  out.width = 1;
  out.evaluator = [fn = std::move(f)](const GeomPoint& p, cdouble* v) { v[0] = fn(p); };
  return out;
}

AnalyticField analytic_real(int width, std::function<void(const GeomPoint&, double*)> f) {
  if (width < 1 || width > 16) throw std::invalid_argument("field width must be in [1, 16]");
  AnalyticField out;
  out.width = width;
  out.evaluator = [fn = std::move(f), width](const GeomPoint& p, cdouble* v) {
    double buf[16] = {};
    fn(p, buf);
    for (int i = 0; i < width; ++i) v[i] = buf[i];
  };
  return out;
}

AnalyticField analytic_complex(int width,
                               std::function<void(const GeomPoint&, cdouble*)> f) {
  AnalyticField out;
  out.width = width;
  out.evaluator = std::move(f);
  return out;
}

MetricChart minkowski_chart(int dim) {
  check_dim(dim);
  MetricChart chart;
  chart.form = ChartForm::minkowski;
  chart.dim = dim;
  return chart;
}

MetricChart conformal_chart(AnalyticField exponent, int dim) {
  check_dim(dim);
  if (exponent.width != 1) throw std::invalid_argument("conformal exponent must be scalar");
  MetricChart chart;
  chart.form = ChartForm::conformally_flat;
  chart.dim = dim;
  chart.exponent = std::move(exponent);
  return chart;
}

MetricChart sliced_chart(AnalyticField lapse, AnalyticField slice_factor) {
  if (lapse.width != 1 || slice_factor.width != 1) {
    throw std::invalid_argument("sliced chart fields must be scalar");
  }
  MetricChart chart;
  chart.form = ChartForm::sliced;
  chart.dim = 4;
  chart.lapse = std::move(lapse);
  chart.slice_factor = std::move(slice_factor);
  return chart;
}

double max_residual_for(const ResidualReport& report, std::string_view label) {
  double out = 0.0;
  bool seen = false;
  for (const ResidualSample& s : report.samples) {
    if (s.label == label) {
      seen = true;
      out = std::max(out, s.residual);
    }
  }
  if (!seen) throw std::invalid_argument("no samples labeled " + std::string(label));
  return out;
}

double order_for(const ResidualReport& report, std::string_view label) {
  double res = 0.0;
  double half = 0.0;
  bool seen = false;
  for (const ResidualSample& s : report.samples) {
    if (s.label == label) {
      seen = true;
      res = std::max(res, s.residual);
      half = std::max(half, s.residual_half);
    }
  }
  if (!seen) throw std::invalid_argument("no samples labeled " + std::string(label));
  return guarded_order(res, half);
}

CsvTable residual_csv(const ResidualReport& report) {
  CsvTable table({"label", "t", "x1", "x2", "x3", "lhs", "rhs", "residual", "h",
                  "estimated_order"});
  for (const ResidualSample& s : report.samples) {
    table.add_row(std::vector<std::string>{
        s.label, format_real(s.point[0]), format_real(s.point[1]),
        format_real(s.point[2]), format_real(s.point[3]), format_real(s.lhs),
        format_real(s.rhs), format_real(s.residual), format_real(report.h),
        format_real(s.order)});
  }
  return table;
}

int spinor_width(int n) {
  check_dim(n);
  return n <= 3 ? 2 : 4;
}

std::vector<Eigen::MatrixXcd> clifford_gammas(int n) {
  check_dim(n);
  const cdouble im(0.0, 1.0);
  Eigen::Matrix2cd s1, s2, s3;
  s1 << 0, 1, 1, 0;
  s2 << 0, -im, im, 0;
  s3 << 1, 0, 0, -1;
  std::vector<Eigen::MatrixXcd> out;
  if (n <= 3) {
    out.push_back(s1);
    out.push_back(im * s2);
    if (n == 3) out.push_back(im * s3);
    return out;
  }
  Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(4, 4);
  g0.diagonal() << 1, 1, -1, -1;
  out.push_back(g0);
  for (const Eigen::Matrix2cd& s : {s1, s2, s3}) {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(4, 4);
    g.block<2, 2>(0, 2) = s;
    g.block<2, 2>(2, 0) = -s;
    out.push_back(g);
  }
  return out;
}

ResidualReport check_conformal_codifferential(const AnalyticField& omega,
                                              const AnalyticField& expo, int n,
                                              std::span<const GeomPoint> points) {
  check_dim(n);
  const int m = n * (n - 1) / 2;
  if (omega.width != m) {
    throw std::invalid_argument("2-form width must be n(n-1)/2 independent entries");
  }
  if (expo.width != 1) throw std::invalid_argument("conformal exponent must be scalar");

  const double h = omega.fd_step;
  const FdOrder ord = omega.fd_order;
  const double reach = 2.5 * stencil_scale(ord) * h;
  require_box(omega, points, n, reach, "check_conformal_codifferential: omega");
  require_box(expo, points, n, reach, "check_conformal_codifferential: expo");

  RealFn u = scalar_fn(expo);

  // Full antisymmetric matrix from the packed upper triangle.
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  }
  auto omega_entry = [&omega, &pairs, m](const GeomPoint& p, int mu, int nu) {
    if (mu == nu) return 0.0;
    cdouble buf[6] = {};
    omega.evaluator(p, buf);
    for (int k = 0; k < m; ++k) {
      if (pairs[static_cast<std::size_t>(k)].first == std::min(mu, nu) &&
          pairs[static_cast<std::size_t>(k)].second == std::max(mu, nu)) {
        double v = buf[k].real();
        return mu < nu ? v : -v;
      }
    }
    return 0.0;
  };

  DiagFn rescaled = [&u, n](const GeomPoint& p) {
    double w = std::exp(2.0 * u(p));
    Diag d{-w, w, w, w};
    for (int i = n; i < 4; ++i) d[static_cast<std::size_t>(i)] = 1.0;
    return d;
  };

  SampleFn fn = [&, n](const GeomPoint& p, double step) {
    Gamma gam = christoffels(rescaled, n, p, step, ord);
    double up = u(p);

    // Inverse-metric contraction factors averaged over the stencil endpoints.
    // Base-point factors would cancel the conformal weight exactly in floating
    // point at the invariant dimension and leave no order signal; the symmetric
    // average is exact on constant metrics and order-consistent otherwise.
    double gsym[4] = {};
    for (int mu = 0; mu < n; ++mu) {
      auto avg = [&](double s) {
        double fp = 1.0 / rescaled(shifted(p, mu, s))[static_cast<std::size_t>(mu)];
        double fm = 1.0 / rescaled(shifted(p, mu, -s))[static_cast<std::size_t>(mu)];
        return 0.5 * (fp + fm);
      };
      if (ord == FdOrder::second) {
        gsym[mu] = avg(step);
      } else {
        gsym[mu] = (4.0 * avg(step) - avg(2.0 * step)) / 3.0;
      }
    }

    // Cache omega(p) and its first derivatives once per sample.
    double w0[4][4] = {};
    double dw[4][4][4] = {};
    for (int mu = 0; mu < n; ++mu) {
      for (int nu = mu + 1; nu < n; ++nu) {
        w0[mu][nu] = omega_entry(p, mu, nu);
        w0[nu][mu] = -w0[mu][nu];
        for (int ax = 0; ax < n; ++ax) {
          double dv = d1([&](const GeomPoint& q) { return omega_entry(q, mu, nu); }, p,
                         ax, step, ord);
          dw[ax][mu][nu] = dv;
          dw[ax][nu][mu] = -dv;
        }
      }
    }
    double du[4] = {};
    for (int ax = 0; ax < n; ++ax) du[ax] = d1(u, p, ax, step, ord);

    double lhs_max = 0.0;
    double rhs_max = 0.0;
    double res = 0.0;
    for (int nu = 0; nu < n; ++nu) {
      double lhs = 0.0;
      for (int mu = 0; mu < n; ++mu) {
        double cov = dw[mu][mu][nu];
        for (int lam = 0; lam < n; ++lam) {
          cov -= gam.v[lam][mu][mu] * w0[lam][nu];
          cov -= gam.v[lam][mu][nu] * w0[mu][lam];
        }
        lhs -= cov * gsym[mu];
      }
      double flat = 0.0;
      double hook = 0.0;
      for (int mu = 0; mu < n; ++mu) {
        flat -= sign_eps(mu) * dw[mu][mu][nu];
        hook += sign_eps(mu) * du[mu] * w0[mu][nu];
      }
      double rhs = std::exp(-2.0 * up) * (flat - (n - 4) * hook);
      lhs_max = std::max(lhs_max, std::abs(lhs));
      rhs_max = std::max(rhs_max, std::abs(rhs));
      res = std::max(res, std::abs(lhs - rhs));
    }
    return SampleValue{lhs_max, rhs_max, res};
  };

  return run_families(points, h, {{"codifferential", fn}});
}

ResidualReport check_dirac_covariance(CovarianceKind kind, const AnalyticField& psi,
                                      const AnalyticField& potential,
                                      const AnalyticField& param, int n, double mu,
                                      std::span<const GeomPoint> points) {
  check_dim(n);
  const int w = spinor_width(n);
  if (psi.width != w) throw std::invalid_argument("spinor width mismatch");
  if (potential.width != n) throw std::invalid_argument("potential must have n components");
  if (param.width != 1) throw std::invalid_argument("parameter field must be scalar");

  const double h = psi.fd_step;
  const FdOrder ord = psi.fd_order;
  const double reach = kind == CovarianceKind::current_scaling
                           ? 0.0
                           : 2.5 * stencil_scale(ord) * h;
  require_box(psi, points, n, reach, "check_dirac_covariance: psi");
  require_box(potential, points, n, reach, "check_dirac_covariance: potential");
  require_box(param, points, n, reach, "check_dirac_covariance: param");

  const std::vector<Eigen::MatrixXcd> gammas = clifford_gammas(n);
  CVecFn psi_at = spinor_fn(psi);
  Vec4Fn pot_at = covector_fn(potential, n);
  RealFn par = scalar_fn(param);
  const cdouble im(0.0, 1.0);

  auto covector_action = [&gammas, n](const Real4& xi) {
    Eigen::MatrixXcd act = -xi[0] * gammas[0];
    for (int j = 1; j < n; ++j) act += xi[static_cast<std::size_t>(j)] * gammas[static_cast<std::size_t>(j)];
    return act;
  };

  // D^A psi = -gamma0 d0 psi + sum_j gammaj dj psi - i mu (A.) psi.
  auto dirac_apply = [&](const CVecFn& field, const Vec4Fn& pot, const GeomPoint& p,
                         double step) {
    CVec out = -(gammas[0] * cd1(field, p, 0, step, ord));
    for (int j = 1; j < n; ++j) {
      out += gammas[static_cast<std::size_t>(j)] * cd1(field, p, j, step, ord);
    }
    out -= im * mu * (covector_action(pot(p)) * field(p));
    return out;
  };

  if (kind == CovarianceKind::current_scaling) {
    // Timelike current of the conformally reweighted spinor against the
    // rescaled Clifford action; no differentiation involved.
    ResidualReport report{};
    report.h = 0.0;
    report.samples.resize(points.size());
    std::vector<double> us(points.size());
    std::vector<double> logs(points.size());
    parallel_for(static_cast<std::int64_t>(points.size()), [&](std::int64_t idx) {
      const GeomPoint& p = points[static_cast<std::size_t>(idx)];
      double up = par(p);
      CVec base = psi_at(p);
      CVec bar = std::exp(-0.5 * (n - 1) * up) * base;
      double jt = (base.adjoint() * gammas[0] * gammas[0] * base)(0).real();
      double jt_bar = std::exp(up) * (bar.adjoint() * gammas[0] * gammas[0] * bar)(0).real();
      double scaled = std::exp(-(n - 2) * up) * jt;
      ResidualSample& s = report.samples[static_cast<std::size_t>(idx)];
      s.label = "current";
      s.point = p;
      s.lhs = jt_bar;
      s.rhs = scaled;
      s.residual = std::abs(jt_bar - scaled);
      s.residual_half = s.residual;
      s.order = 0.0;
      us[static_cast<std::size_t>(idx)] = up;
      logs[static_cast<std::size_t>(idx)] = (jt > 0.0 && jt_bar > 0.0)
                                                ? std::log(jt_bar / jt)
                                                : std::numeric_limits<double>::quiet_NaN();
    });
    double su = 0.0, sy = 0.0, suu = 0.0, suy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(logs[i])) continue;
      su += us[i];
      sy += logs[i];
      suu += us[i] * us[i];
      suy += us[i] * logs[i];
      ++count;
    }
    double denom = count ? suu - su * su / static_cast<double>(count) : 0.0;
    report.fitted_slope = denom > 0.0 ? (suy - su * sy / static_cast<double>(count)) / denom : 0.0;
    report.has_fitted_slope = true;
    finish_aggregates(report);
    report.estimated_order = 0.0;
    return report;
  }

  SampleFn fn;
  if (kind == CovarianceKind::gauge) {
    fn = [&, n](const GeomPoint& p, double step) {
      CVecFn twisted = [&](const GeomPoint& q) {
        return CVec(std::exp(im * mu * par(q)) * psi_at(q));
      };
      Vec4Fn pot_shift = [&](const GeomPoint& q) {
        Real4 a = pot_at(q);
        for (int ax = 0; ax < n; ++ax) {
          a[static_cast<std::size_t>(ax)] += d1(par, q, ax, step, ord);
        }
        return a;
      };
      CVec lhs = dirac_apply(twisted, pot_shift, p, step);
      CVec rhs = std::exp(im * mu * par(p)) * dirac_apply(psi_at, pot_at, p, step);
      return SampleValue{lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff(),
                         (lhs - rhs).cwiseAbs().maxCoeff()};
    };
  } else {
    fn = [&, n](const GeomPoint& p, double step) {
      CVecFn bar = [&](const GeomPoint& q) {
        return CVec(std::exp(-0.5 * (n - 1) * par(q)) * psi_at(q));
      };
      double up = par(p);
      Real4 du{};
      for (int ax = 0; ax < n; ++ax) du[static_cast<std::size_t>(ax)] = d1(par, p, ax, step, ord);
      CVec lhs = dirac_apply(bar, pot_at, p, step);
      lhs += 0.5 * (n - 1) * (covector_action(du) * bar(p));
      lhs *= std::exp(-up);
      CVec rhs = std::exp(-0.5 * (n + 1) * up) * dirac_apply(psi_at, pot_at, p, step);
      return SampleValue{lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff(),
                         (lhs - rhs).cwiseAbs().maxCoeff()};
    };
  }
  const char* label = kind == CovarianceKind::gauge ? "gauge" : "conformal";
  return run_families(points, h, {{label, fn}});
}

namespace {

// Shared geometry for the initial-slice identities on the sliced chart
// g = -beta dt^2 + a^2 delta. All metric data is diagonal.
struct SliceGeom {
  Vec4Fn A;
  RealFn beta;
  RealFn afac;
  FdOrder ord;

  Diag gfull(const GeomPoint& q) const {
    double b = beta(q);
    double a = afac(q);
    return Diag{-b, a * a, a * a, a * a};
  }
  // Slice metric of t = 0, frozen in time so its connection is tangential.
  Diag gslice(const GeomPoint& q) const {
    GeomPoint s = q;
    s[0] = 0.0;
    double a = afac(s);
    return Diag{1.0, a * a, a * a, a * a};
  }
  DiagFn gfull_fn() const {
    return [this](const GeomPoint& q) { return gfull(q); };
  }
  DiagFn gslice_fn() const {
    return [this](const GeomPoint& q) { return gslice(q); };
  }
  Gamma gam(const GeomPoint& q, double h) const {
    return christoffels(gfull_fn(), 4, q, h, ord);
  }
  Gamma gamS(const GeomPoint& q, double h) const {
    return christoffels(gslice_fn(), 4, q, h, ord);
  }

  // (grad_mu A)_nu in coordinates.
  Real4 covd(const GeomPoint& q, int mu, double h) const {
    Gamma g = gam(q, h);
    Real4 da = d1v(A, q, mu, h, ord);
    Real4 a = A(q);
    Real4 out{};
    for (int nu = 0; nu < 4; ++nu) {
      double v = da[static_cast<std::size_t>(nu)];
      for (int lam = 0; lam < 4; ++lam) v -= g.v[lam][mu][nu] * a[static_cast<std::size_t>(lam)];
      out[static_cast<std::size_t>(nu)] = v;
    }
    return out;
  }

  // Divergence through the metric density: d*A = -|g|^{-1/2} d_mu(|g|^{1/2} g^{mumu} A_mu),
  // differenced in staggered flux form.
  double dstar_direct(const GeomPoint& q, double h) const {
    Diag d = gfull(q);
    double wq = std::sqrt(std::abs(d[0] * d[1] * d[2] * d[3]));
    double s = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
      RealFn flux = [this, mu](const GeomPoint& r) {
        Diag dr = gfull(r);
        double wr = std::sqrt(std::abs(dr[0] * dr[1] * dr[2] * dr[3]));
        Real4 ar = A(r);
        return wr * ar[static_cast<std::size_t>(mu)] / dr[static_cast<std::size_t>(mu)];
      };
      s -= d1s(flux, q, mu, h, ord);
    }
    return s / wq;
  }

  // Slice codifferential of a tangential covector through the slice density.
  double dstarS(const Vec4Fn& field, const GeomPoint& q, double h) const {
    Diag d = gslice(q);
    double wq = std::sqrt(d[1] * d[2] * d[3]);
    double s = 0.0;
    for (int i = 1; i < 4; ++i) {
      RealFn flux = [this, &field, i](const GeomPoint& r) {
        Diag dr = gslice(r);
        double wr = std::sqrt(dr[1] * dr[2] * dr[3]);
        Real4 fr = field(r);
        return wr * fr[static_cast<std::size_t>(i)] / dr[static_cast<std::size_t>(i)];
      };
      s -= d1(flux, q, i, h, ord);
    }
    return s / wq;
  }
};

}  // namespace

ResidualReport check_constraints_3p1(const AnalyticField& potential,
                                     const MetricChart& chart,
                                     std::span<const GeomPoint> points) {
  if (potential.width != 4) throw std::invalid_argument("potential must have 4 components");
  if (chart.dim != 4) throw std::invalid_argument("initial-slice identities need dim 4");
  if (chart.form == ChartForm::conformally_flat) {
    throw std::invalid_argument("initial-slice identities need a minkowski or sliced chart");
  }

  const double h = potential.fd_step;
  const FdOrder ord = potential.fd_order;
  const double reach = 2.5 * stencil_scale(ord) * h;

  std::vector<GeomPoint> slice_points(points.begin(), points.end());
  for (GeomPoint& p : slice_points) p[0] = 0.0;

  require_box(potential, slice_points, 4, reach, "check_constraints_3p1: potential");
  if (chart.form == ChartForm::sliced) {
    require_box(chart.lapse, slice_points, 4, reach, "check_constraints_3p1: lapse");
    require_box(chart.slice_factor, slice_points, 4, reach,
                "check_constraints_3p1: slice_factor");
  }

  SliceGeom geom;
  geom.A = covector_fn(potential, 4);
  geom.ord = ord;
  if (chart.form == ChartForm::minkowski) {
    geom.beta = [](const GeomPoint&) { return 1.0; };
    geom.afac = [](const GeomPoint&) { return 1.0; };
  } else {
    geom.beta = scalar_fn(chart.lapse);
    geom.afac = scalar_fn(chart.slice_factor);
  }

  bool unit_lapse = true;
  for (const GeomPoint& p : slice_points) {
    if (std::abs(geom.beta(p) - 1.0) > 1e-12) unit_lapse = false;
  }

  auto cs = [&geom](const GeomPoint& q) { return 1.0 / geom.afac(q); };
  auto c0 = [&geom](const GeomPoint& q) { return 1.0 / std::sqrt(geom.beta(q)); };

  // Split form of the divergence restricted to the slice:
  // (1/beta) (grad_t A)(d_t) - sum_j (grad_{e_j} A)(e_j).
  auto rhs_eq1 = [&](const GeomPoint& p, double step) {
    Real4 B = geom.covd(p, 0, step);
    double out = B[0] / geom.beta(p);
    double c2 = cs(p) * cs(p);
    for (int j = 1; j < 4; ++j) {
      out -= c2 * geom.covd(p, j, step)[static_cast<std::size_t>(j)];
    }
    return out;
  };

  // Split form of d_t d*A restricted to the slice, with the source slot
  // carrying the connection d'Alembertian assembled from its orthonormal
  // frame definition. Also returns the tangential-Laplacian building blocks
  // needed by the unit-lapse simplification.
  struct Eq2Parts {
    double general = 0.0;
    double wave = 0.0;      // (Box A)(d_t)
    double curvature = 0.0; // spatial curvature contraction against A
  };
  auto rhs_eq2 = [&](const GeomPoint& p, double step) {
    Gamma G = geom.gam(p, step);
    Real4 Ap = geom.A(p);
    Real4 covd_p[4];
    for (int mu = 0; mu < 4; ++mu) covd_p[mu] = geom.covd(p, mu, step);
    const Real4& Bp = covd_p[0];
    double beta_p = geom.beta(p);
    double cs_p = cs(p);
    double c2 = cs_p * cs_p;
    Diag gdot = d1diag(geom.gfull_fn(), p, 0, step, ord);
    Diag d = geom.gfull(p);

    Vec4Fn Bfn = [&geom, step](const GeomPoint& q) { return geom.covd(q, 0, step); };

    // Iterated frame derivatives grad_{e_mu} grad_{e_mu} A applied to d_t.
    double iterated[4] = {};
    for (int mu = 0; mu < 4; ++mu) {
      auto cmu = [&](const GeomPoint& q) { return mu == 0 ? c0(q) : cs(q); };
      Vec4Fn Cmu = [&geom, &cmu, mu, step](const GeomPoint& q) {
        Real4 v = geom.covd(q, mu, step);
        double c = cmu(q);
        for (double& x : v) x *= c;
        return v;
      };
      Real4 Cp = Cmu(p);
      double dC0 = d1v(Cmu, p, mu, step, ord)[0];
      double corr = 0.0;
      for (int lam = 0; lam < 4; ++lam) corr += G.v[lam][mu][0] * Cp[static_cast<std::size_t>(lam)];
      iterated[mu] = cmu(p) * (dC0 - corr);
    }

    // T1: tangential trace Laplacian of A evaluated on d_t (slice connection
    // supplies the trace correction).
    Gamma GS = geom.gamS(p, step);
    double t1 = 0.0;
    for (int j = 1; j < 4; ++j) {
      RealFn csS = [&](const GeomPoint& q) {
        GeomPoint s = q;
        s[0] = 0.0;
        return 1.0 / geom.afac(s);
      };
      double dcs = d1(csS, p, j, step, ord);
      Real4 Vj{};
      Vj[static_cast<std::size_t>(j)] += csS(p) * dcs;
      for (int k = 1; k < 4; ++k) {
        Vj[static_cast<std::size_t>(k)] += csS(p) * csS(p) * GS.v[k][j][j];
      }
      double along = 0.0;
      for (int k = 1; k < 4; ++k) along += Vj[static_cast<std::size_t>(k)] * covd_p[k][0];
      t1 -= along - iterated[j];
    }

    // T2: frame divergence of the time-covariant derivative.
    double t2 = 0.0;
    for (int j = 1; j < 4; ++j) {
      double dB = d1v(Bfn, p, j, step, ord)[static_cast<std::size_t>(j)];
      double corr = 0.0;
      for (int lam = 0; lam < 4; ++lam) corr += G.v[lam][j][j] * Bp[static_cast<std::size_t>(lam)];
      t2 -= c2 * (dB - corr);
    }

    // T3, T4, T5: lapse gradient and slice-velocity couplings. The lapse
    // gradient pairs with half the time-covariant derivative; the frame
    // evolution normal components cancel the remaining half.
    double trg = 0.0;
    for (int i = 1; i < 4; ++i) trg += gdot[static_cast<std::size_t>(i)] / d[static_cast<std::size_t>(i)];
    double t3 = -trg / (2.0 * beta_p) * Bp[0];
    Real4 gradb{};
    for (int i = 1; i < 4; ++i) {
      gradb[static_cast<std::size_t>(i)] = d1(geom.beta, p, i, step, ord) / d[static_cast<std::size_t>(i)];
    }
    double t4 = 0.0;
    for (int i = 1; i < 4; ++i) {
      t4 += gradb[static_cast<std::size_t>(i)] * Bp[static_cast<std::size_t>(i)];
    }
    t4 /= 2.0 * beta_p;
    double t5 = 0.0;
    for (int i = 1; i < 4; ++i) {
      t5 += 0.5 * covd_p[i][static_cast<std::size_t>(i)] * gdot[static_cast<std::size_t>(i)] /
            (d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)]);
    }

    // T6: curvature contraction sum_j A(R(d_t, e_j) e_j) from derivative and
    // quadratic Christoffel terms.
    auto dgamma = [&](int axis) {
      Gamma out;
      if (ord == FdOrder::second) {
        Gamma gp = geom.gam(shifted(p, axis, step), step);
        Gamma gm = geom.gam(shifted(p, axis, -step), step);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
              out.v[a][b][c] = (gp.v[a][b][c] - gm.v[a][b][c]) / (2.0 * step);
      } else {
        Gamma g2p = geom.gam(shifted(p, axis, 2.0 * step), step);
        Gamma gp = geom.gam(shifted(p, axis, step), step);
        Gamma gm = geom.gam(shifted(p, axis, -step), step);
        Gamma g2m = geom.gam(shifted(p, axis, -2.0 * step), step);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
              out.v[a][b][c] = (-g2p.v[a][b][c] + 8.0 * gp.v[a][b][c] -
                                8.0 * gm.v[a][b][c] + g2m.v[a][b][c]) /
                               (12.0 * step);
      }
      return out;
    };
    Gamma dG[4];
    for (int axis = 0; axis < 4; ++axis) dG[axis] = dgamma(axis);
    double t6 = 0.0;
    for (int j = 1; j < 4; ++j) {
      for (int rho = 0; rho < 4; ++rho) {
        double r = dG[0].v[rho][j][j] - dG[j].v[rho][0][j];
        for (int lam = 0; lam < 4; ++lam) {
          r += G.v[rho][0][lam] * G.v[lam][j][j] - G.v[rho][j][lam] * G.v[lam][0][j];
        }
        t6 += c2 * Ap[static_cast<std::size_t>(rho)] * r;
      }
    }

    // T7: connection d'Alembertian (Box A)(d_t) over the orthonormal frame.
    double t7 = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
      auto cmu = [&](const GeomPoint& q) { return mu == 0 ? c0(q) : cs(q); };
      double cp = cmu(p);
      Real4 Wmu{};
      Wmu[static_cast<std::size_t>(mu)] += cp * d1(cmu, p, mu, step, ord);
      for (int lam = 0; lam < 4; ++lam) {
        Wmu[static_cast<std::size_t>(lam)] += cp * cp * G.v[lam][mu][mu];
      }
      double along = 0.0;
      for (int lam = 0; lam < 4; ++lam) along += Wmu[static_cast<std::size_t>(lam)] * covd_p[lam][0];
      t7 += sign_eps(mu) * (along - iterated[mu]);
    }

    Eq2Parts parts;
    parts.wave = t7;
    parts.curvature = t6;
    parts.general = t1 + t2 + t3 + t4 + t5 + t6 + t7;
    return parts;
  };

  // Unit-lapse simplification of both identities through the Weingarten map
  // W = (1/2) g_S^{-1} (d g_t / dt); shares the curvature and wave slots.
  auto remark_eq1 = [&](const GeomPoint& p, double step) {
    RealFn a0fn = [&geom](const GeomPoint& q) { return geom.A(q)[0]; };
    Diag gs = geom.gslice(p);
    Diag gdot = d1diag(geom.gfull_fn(), p, 0, step, ord);
    double trW = 0.0;
    for (int i = 1; i < 4; ++i) {
      trW += 0.5 * gdot[static_cast<std::size_t>(i)] / gs[static_cast<std::size_t>(i)];
    }
    return d1(a0fn, p, 0, step, ord) + geom.dstarS(geom.A, p, step) + trW * geom.A(p)[0];
  };
  auto remark_eq2 = [&](const GeomPoint& p, double step, const Eq2Parts& parts) {
    Real4 Ap = geom.A(p);
    Diag gs = geom.gslice(p);
    Gamma GS = geom.gamS(p, step);

    RealFn a0fn = [&geom](const GeomPoint& q) { return geom.A(q)[0]; };
    double ws = std::sqrt(gs[1] * gs[2] * gs[3]);
    double lap = 0.0;
    for (int i = 1; i < 4; ++i) {
      RealFn flux = [&, i](const GeomPoint& r) {
        Diag dr = geom.gslice(r);
        double wr = std::sqrt(dr[1] * dr[2] * dr[3]);
        return wr * d1(a0fn, r, i, step, ord) / dr[static_cast<std::size_t>(i)];
      };
      lap -= d1(flux, p, i, step, ord);
    }
    lap /= ws;

    Vec4Fn Bfn = [&geom, step](const GeomPoint& q) { return geom.covd(q, 0, step); };
    double div_b = geom.dstarS(Bfn, p, step);

    // Weingarten entries as a (0,2) tensor; diagonal like the slice metric.
    auto wform = [&geom, step, this_ord = ord](const GeomPoint& q) {
      Diag gd = d1diag(geom.gfull_fn(), q, 0, step, this_ord);
      Real4 out{};
      for (int i = 1; i < 4; ++i) out[static_cast<std::size_t>(i)] = 0.5 * gd[static_cast<std::size_t>(i)];
      return out;
    };
    Real4 Wp = wform(p);

    double pair = 0.0;
    for (int i = 1; i < 4; ++i) {
      double grad_s = d1([&geom, i](const GeomPoint& q) { return geom.A(q)[static_cast<std::size_t>(i)]; },
                         p, i, step, ord);
      for (int k = 1; k < 4; ++k) grad_s -= GS.v[k][i][i] * Ap[static_cast<std::size_t>(k)];
      double gi = gs[static_cast<std::size_t>(i)];
      pair += grad_s * Wp[static_cast<std::size_t>(i)] / (gi * gi);
    }

    // Slice divergence of W contracted with the potential.
    double adsw = 0.0;
    for (int j = 1; j < 4; ++j) {
      double div_j = 0.0;
      for (int i = 1; i < 4; ++i) {
        double dW = i == j ? d1([&wform, j](const GeomPoint& q) {
                                 return wform(q)[static_cast<std::size_t>(j)];
                               },
                               p, i, step, ord)
                           : 0.0;
        double corr = 0.0;
        for (int l = 1; l < 4; ++l) {
          double wlj = l == j ? Wp[static_cast<std::size_t>(l)] : 0.0;
          double wil = i == l ? Wp[static_cast<std::size_t>(i)] : 0.0;
          corr += GS.v[l][i][i] * wlj + GS.v[l][i][j] * wil;
        }
        div_j -= (dW - corr) / gs[static_cast<std::size_t>(i)];
      }
      adsw += Ap[static_cast<std::size_t>(j)] * div_j / gs[static_cast<std::size_t>(j)];
    }

    return -lap + div_b - pair + adsw + parts.curvature + parts.wave;
  };

  struct PointResult {
    double lhs1, rhs1, lhs1_half, rhs1_half;
    double lhs2, rhs2, lhs2_half, rhs2_half;
    double r1m, r1m_half, r2m, r2m_half;
    double gap;
  };
  std::vector<PointResult> results(slice_points.size());
  parallel_for(static_cast<std::int64_t>(slice_points.size()), [&](std::int64_t idx) {
    const GeomPoint& p = slice_points[static_cast<std::size_t>(idx)];
    PointResult r{};
    for (int pass = 0; pass < 2; ++pass) {
      double step = pass == 0 ? h : 0.5 * h;
      double lhs1 = geom.dstar_direct(p, step);
      double rhs1 = rhs_eq1(p, step);
      double lhs2 = d1s([&geom, step](const GeomPoint& q) { return geom.dstar_direct(q, step); },
                        p, 0, step, ord);
      Eq2Parts parts = rhs_eq2(p, step);
      double r1m = 0.0, r2m = 0.0, gap = 0.0;
      if (unit_lapse) {
        r1m = remark_eq1(p, step);
        r2m = remark_eq2(p, step, parts);
        gap = std::max(std::abs(rhs1 - r1m), std::abs(parts.general - r2m));
      }
      if (pass == 0) {
        r.lhs1 = lhs1; r.rhs1 = rhs1; r.lhs2 = lhs2; r.rhs2 = parts.general;
        r.r1m = r1m; r.r2m = r2m; r.gap = gap;
      } else {
        r.lhs1_half = lhs1; r.rhs1_half = rhs1; r.lhs2_half = lhs2; r.rhs2_half = parts.general;
        r.r1m_half = r1m; r.r2m_half = r2m;
      }
    }
    results[static_cast<std::size_t>(idx)] = r;
  });

  ResidualReport report{};
  report.h = h;
  auto push = [&](const std::string& label, const GeomPoint& p, double lhs, double rhs,
                  double lhs_half, double rhs_half) {
    ResidualSample s;
    s.label = label;
    s.point = p;
    s.lhs = std::abs(lhs);
    s.rhs = std::abs(rhs);
    s.residual = std::abs(lhs - rhs);
    s.residual_half = std::abs(lhs_half - rhs_half);
    s.order = guarded_order(s.residual, s.residual_half);
    report.samples.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < results.size(); ++i) {
    push("eq1", slice_points[i], results[i].lhs1, results[i].rhs1, results[i].lhs1_half,
         results[i].rhs1_half);
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    push("eq2", slice_points[i], results[i].lhs2, results[i].rhs2, results[i].lhs2_half,
         results[i].rhs2_half);
  }
  if (unit_lapse) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      push("eq1_remark", slice_points[i], results[i].lhs1, results[i].r1m,
           results[i].lhs1_half, results[i].r1m_half);
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      push("eq2_remark", slice_points[i], results[i].lhs2, results[i].r2m,
           results[i].lhs2_half, results[i].r2m_half);
    }
    report.has_simplified_gap = true;
    for (const PointResult& r : results) {
      report.simplified_gap = std::max(report.simplified_gap, r.gap);
    }
  }
  finish_aggregates(report);
  return report;
}

ResidualReport check_obstruction(const AnalyticField& potential,
                                 std::span<const GeomPoint> points,
                                 double slice_period) {
  if (potential.width != 4) throw std::invalid_argument("potential must have 4 components");
  if (!(slice_period > 0.0)) throw std::invalid_argument("slice period must be positive");

  const double h = potential.fd_step;
  const FdOrder ord = potential.fd_order;
  const double reach = 2.5 * stencil_scale(ord) * h;

  std::vector<GeomPoint> slice_points(points.begin(), points.end());
  for (GeomPoint& p : slice_points) p[0] = 0.0;
  require_box(potential, slice_points, 4, reach, "check_obstruction: potential");

  Vec4Fn A = covector_fn(potential, 4);
  auto comp = [&A](int mu) {
    return [&A, mu](const GeomPoint& q) { return A(q)[static_cast<std::size_t>(mu)]; };
  };

  // Slice side: codifferential of nu -| dA built from first-derivative
  // stencils; chart side: the same flux from direct second differences, so
  // the gap carries the truncation-order signal.
  auto slice_side = [&](const GeomPoint& p, double step) {
    double s = 0.0;
    for (int i = 1; i < 4; ++i) {
      RealFn hook = [&, i](const GeomPoint& q) {
        return d1(comp(i), q, 0, step, ord) - d1(comp(0), q, i, step, ord);
      };
      s -= d1(hook, p, i, step, ord);
    }
    return s;
  };
  auto chart_side = [&](const GeomPoint& p, double step) {
    double s = 0.0;
    for (int j = 1; j < 4; ++j) {
      s -= d2(comp(0), p, j, step, ord);
      RealFn tder = [&, j](const GeomPoint& q) { return d1(comp(j), q, 0, step, ord); };
      s += d1(tder, p, j, step, ord);
    }
    return s;
  };

  SampleFn fn = [&](const GeomPoint& p, double step) {
    double lhs = slice_side(p, step);
    double rhs = chart_side(p, step);
    return SampleValue{std::abs(lhs), std::abs(rhs), std::abs(lhs + rhs)};
  };
  ResidualReport report = run_families(slice_points, h, {{"flux", fn}});

  // Flux quadrature over one periodic slice box: uniform grid, difference
  // step equal to one grid spacing, so every spatial difference quotient
  // telescopes and the total reduces to the boundary mismatch of A.
  const int q_nodes = 24;
  const double hq = slice_period / q_nodes;
  {
    double lo = -2.0 * stencil_scale(ord) * hq * 1.01;
    double hi = slice_period + 2.0 * stencil_scale(ord) * hq * 1.01;
    if (lo < potential.box_lo || hi > potential.box_hi) {
      throw std::out_of_range(
          "check_obstruction: quadrature stencil leaves the analytic field box");
    }
  }
  std::vector<double> cells(static_cast<std::size_t>(q_nodes) * q_nodes * q_nodes);
  parallel_for(static_cast<std::int64_t>(cells.size()), [&](std::int64_t idx) {
    int a = static_cast<int>(idx % q_nodes);
    int b = static_cast<int>((idx / q_nodes) % q_nodes);
    int c = static_cast<int>(idx / (q_nodes * q_nodes));
    GeomPoint p{0.0, a * hq, b * hq, c * hq};
    cells[static_cast<std::size_t>(idx)] = chart_side(p, hq);
  });
  double total = 0.0;
  for (double v : cells) total += v;
  report.slice_integral = total * hq * hq * hq;
  report.has_slice_integral = true;
  return report;
}

}  // namespace hypercauchy
