#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypercauchy/io.hpp"

namespace hypercauchy {

// Finite-difference verification of pointwise tensor identities on flat
// charts of R^{1,n-1}, n <= 4, with coordinates (t, x1, x2, x3) and metric
// signature (-, +, ..., +). Inputs are analytic fields supplied as closed
// forms; every derivative, Christoffel symbol, and curvature entry used by a
// checker is produced by central differences from those evaluators, so the
// residuals measure whether the two sides of an identity agree to the
// truncation order of the stencil.

using GeomPoint = std::array<double, 4>;  // unused trailing coordinates are 0

enum class FdOrder { second = 2, fourth = 4 };

// Closed-form field over the chart. `evaluator` must be pure and defined on
// the axis-aligned box [box_lo, box_hi]^n; checkers reject sample points whose
// stencil probes could leave the box. `width` counts value components:
// scalars 1, covectors n, 2-forms n(n-1)/2 (independent entries (mu, nu) with
// mu < nu, row-major), spinors spinor_width(n). Real quantities are carried in
// the real parts.
struct AnalyticField {
  std::function<void(const GeomPoint&, std::complex<double>*)> evaluator;
  int width = 1;
  double fd_step = 1e-3;
  FdOrder fd_order = FdOrder::second;
  double box_lo = -8.0;
  double box_hi = 8.0;
};

AnalyticField analytic_scalar(std::function<double(const GeomPoint&)> f);
AnalyticField analytic_real(int width,
                            std::function<void(const GeomPoint&, double*)> f);
AnalyticField analytic_complex(
    int width,
    std::function<void(const GeomPoint&, std::complex<double>*)> f);

enum class ChartForm { minkowski, conformally_flat, sliced };

// Diagonal metric charts: minkowski is eta; conformally_flat is e^{2u} eta
// with u = exponent; sliced is -beta dt^2 + a^2 delta_ij dx^i dx^j with
// beta = lapse > 0 and a = slice_factor > 0 on the test box.
struct MetricChart {
  ChartForm form = ChartForm::minkowski;
  int dim = 4;
  AnalyticField exponent;      // conformally_flat only
  AnalyticField lapse;         // sliced only
  AnalyticField slice_factor;  // sliced only
};

MetricChart minkowski_chart(int dim);
MetricChart conformal_chart(AnalyticField exponent, int dim);
MetricChart sliced_chart(AnalyticField lapse, AnalyticField slice_factor);

// One verified point. `lhs` and `rhs` are the largest component magnitudes of
// the two sides at the base step, `residual` their largest componentwise gap,
// `residual_half` the same gap recomputed with every stencil at h/2, and
// `order` = log2(residual / residual_half) when both gaps are resolvable.
struct ResidualSample {
  std::string label;
  GeomPoint point{};
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double residual_half = 0.0;
  double order = 0.0;
};

struct ResidualReport {
  std::vector<ResidualSample> samples;
  double h = 0.0;
  double max_residual = 0.0;
  double max_residual_half = 0.0;
  double estimated_order = 0.0;  // log2 of the aggregate h -> h/2 ratio

  double slice_integral = 0.0;  // flux quadrature, check_obstruction only
  bool has_slice_integral = false;

  double fitted_slope = 0.0;  // log-ratio regression, current_scaling only
  bool has_fitted_slope = false;

  double simplified_gap = 0.0;  // unit-lapse form vs general form, eq 2
  bool has_simplified_gap = false;
};

double max_residual_for(const ResidualReport& report, std::string_view label);
double order_for(const ResidualReport& report, std::string_view label);

// Columns: label, t, x1, x2, x3, lhs, rhs, residual, h, estimated_order.
CsvTable residual_csv(const ResidualReport& report);

// Spinor conventions: Clifford relation X.Y + Y.X = -2 g(X, Y), timelike
// gamma0 Hermitian with gamma0^2 = I, spacelike gammas anti-Hermitian with
// square -I. The pairing <phi, psi> = phi^* gamma0 psi makes the timelike
// current <gamma0 psi, psi> = |psi|^2 positive.
int spinor_width(int n);
std::vector<Eigen::MatrixXcd> clifford_gammas(int n);

// Verifies, at each point, that the codifferential of the 2-form omega for
// the rescaled metric e^{2u} eta (computed through the rescaled-metric
// Christoffel symbols) equals e^{-2u} (d* omega - (n-4) grad(u) -| omega)
// where d* and grad are flat. Steps and stencil order come from omega.
ResidualReport check_conformal_codifferential(const AnalyticField& omega,
                                              const AnalyticField& expo,
                                              int n,
                                              std::span<const GeomPoint> points);

enum class CovarianceKind { gauge, conformal, current_scaling };

// Flat-chart Dirac operator D = -gamma0 d_0 + sum_j gammaj d_j with minimal
// coupling D^A = D - i mu A. ; covector action xi. = sum_mu eps_mu xi_mu
// gamma_mu, eps = (-1, +1, ..., +1).
//   gauge:   D^{A + df}(e^{i mu f} psi) = e^{i mu f} D^A psi, f = param.
//   conformal: with u = param and phibar = e^{-(n-1)u/2} psi, the rescaled
//     operator e^{-u}(D^A phibar + (n-1)/2 du . phibar) equals
//     e^{-(n+1)u/2} D^A psi (explicit conformally flat spin connection).
//   current_scaling: the timelike current of phibar under the rescaled
//     Clifford action equals e^{-(n-2)u} times that of psi; the report's
//     fitted_slope is the least-squares slope of log(ratio) against u over
//     the points and should be -(n-2).
ResidualReport check_dirac_covariance(CovarianceKind kind,
                                      const AnalyticField& psi,
                                      const AnalyticField& potential,
                                      const AnalyticField& param,
                                      int n,
                                      double mu,
                                      std::span<const GeomPoint> points);

// Initial-slice divergence identities for a covector potential A on a sliced
// chart (n = 4), sampled on the t = 0 slice (the time entry of each point is
// ignored). Two residual families are reported:
//   eq1: the direct divergence d*A against its split form
//        (1/beta) (grad_t A)(d_t) - sum_j (grad_{e_j} A)(e_j)
//   eq2: the direct time derivative d_t d*A against the split form whose
//        source slot carries the connection d'Alembertian (Box A)(d_t)
//        computed from its own orthonormal-frame definition.
// When the lapse evaluates to 1 at every sample point, the unit-lapse
// simplification of eq2 (slice Laplacian, Weingarten map W, mean curvature H)
// is also assembled: its pointwise gap against the general form is
// `simplified_gap` and its own residual family is labeled "eq2_remark".
ResidualReport check_constraints_3p1(const AnalyticField& potential,
                                     const MetricChart& chart,
                                     std::span<const GeomPoint> points);

// Slice-normal flux identity on the flat chart: for F = dA and nu = d_t, the
// slice codifferential of nu -| F equals -(d* F)(nu) pointwise on t = 0.
// Additionally integrates (d* F)(nu) over [0, slice_period)^3 x {t = 0} with
// a uniform 24^3 grid whose difference step is one grid spacing, so the sum
// of every spatial difference quotient telescopes; for potentials periodic in
// the slice directions the integral must vanish (zero total flux).
ResidualReport check_obstruction(const AnalyticField& potential,
                                 std::span<const GeomPoint> points,
                                 double slice_period = 6.283185307179586477);

}  // namespace hypercauchy
