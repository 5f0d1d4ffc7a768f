#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hypercauchy/geometry.hpp"

using namespace hypercauchy;

namespace {

GeomPoint pt(double t, double x, double y, double z) { return GeomPoint{t, x, y, z}; }

std::vector<GeomPoint> sample_points() {
  return {pt(0.30, 0.40, -0.20, 0.10), pt(-0.20, 0.10, 0.50, -0.30),
          pt(0.00, -0.40, 0.20, 0.60), pt(0.10, 0.25, -0.35, 0.15)};
}

AnalyticField wave_2form(int n, double amp) {
  const int m = n * (n - 1) / 2;
  return analytic_real(m, [amp, m](const GeomPoint& p, double* out) {
    for (int k = 0; k < m; ++k) {
      out[k] = amp * std::sin(0.6 * p[0] - 0.4 * p[1] + 0.5 * p[2] - 0.3 * p[3] +
                              0.7 * (k + 1));
    }
  });
}

AnalyticField wave_exponent(double amp) {
  return analytic_scalar([amp](const GeomPoint& p) {
    return amp * std::sin(0.5 * p[0] + 0.6 * p[1] - 0.3 * p[2] + 0.4 * p[3]) +
           0.5 * amp * std::cos(0.3 * p[0] - 0.2 * p[1] + 0.5 * p[2] - 0.6 * p[3]);
  });
}

AnalyticField zero_scalar() {
  return analytic_scalar([](const GeomPoint&) { return 0.0; });
}

AnalyticField wave_spinor(int n, double amp) {
  const int w = spinor_width(n);
  return analytic_complex(w, [amp, w](const GeomPoint& p, std::complex<double>* out) {
    for (int c = 0; c < w; ++c) {
      double ph = 0.9 * (c + 1);
      out[c] = {amp * std::sin(0.5 * p[0] + 0.4 * p[1] - 0.3 * p[2] + 0.2 * p[3] + ph),
                amp * std::cos(0.6 * p[0] - 0.2 * p[1] + 0.4 * p[2] - 0.5 * p[3] - ph)};
    }
  });
}

AnalyticField wave_covector(int n, double amp) {
  return analytic_real(n, [amp, n](const GeomPoint& p, double* out) {
    for (int k = 0; k < n; ++k) {
      out[k] = amp * std::cos(0.4 * p[0] - 0.5 * p[1] + 0.3 * p[2] + 0.6 * p[3] +
                              1.1 * k);
    }
  });
}

AnalyticField wave_gauge_fn(double amp) {
  return analytic_scalar([amp](const GeomPoint& p) {
    return amp * std::sin(0.7 * p[0] + 0.5 * p[1] - 0.4 * p[2] + 0.3 * p[3]);
  });
}

AnalyticField wave_potential(double amp) {
  return analytic_real(4, [amp](const GeomPoint& p, double* out) {
    out[0] = amp * std::sin(0.5 * p[0] + 0.7 * p[1] - 0.4 * p[2] + 0.3 * p[3]);
    out[1] = amp * std::cos(0.4 * p[0] - 0.6 * p[1] + 0.5 * p[2] - 0.2 * p[3]);
    out[2] = amp * std::sin(0.3 * p[0] + 0.2 * p[1] - 0.7 * p[2] + 0.6 * p[3] + 0.4);
    out[3] = amp * std::cos(0.6 * p[0] - 0.3 * p[1] + 0.4 * p[2] - 0.5 * p[3] + 0.8);
  });
}

AnalyticField unit_lapse() {
  return analytic_scalar([](const GeomPoint&) { return 1.0; });
}

}  // namespace

TEST_CASE("clifford generators satisfy the signature relations") {
  for (int n = 2; n <= 4; ++n) {
    auto g = clifford_gammas(n);
    REQUIRE(static_cast<int>(g.size()) == n);
    const int w = spinor_width(n);
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(w, w);
    for (int mu = 0; mu < n; ++mu) {
      CHECK(g[mu].rows() == w);
      for (int nu = 0; nu < n; ++nu) {
        double eta = mu == nu ? (mu == 0 ? -1.0 : 1.0) : 0.0;
        Eigen::MatrixXcd anti = g[mu] * g[nu] + g[nu] * g[mu] + 2.0 * eta * id;
        CHECK(anti.norm() == 0.0);
      }
    }
    CHECK((g[0].adjoint() - g[0]).norm() == 0.0);
    for (int j = 1; j < n; ++j) CHECK((g[j].adjoint() + g[j]).norm() == 0.0);
  }
  CHECK(spinor_width(2) == 2);
  CHECK(spinor_width(3) == 2);
  CHECK(spinor_width(4) == 4);
}

TEST_CASE("codifferential reduces to the flat formula at zero exponent") {
  auto points = sample_points();
  for (int n : {2, 3}) {
    AnalyticField omega = wave_2form(n, 0.4);
    AnalyticField expo = zero_scalar();
    ResidualReport rep = check_conformal_codifferential(omega, expo, n, points);
    CHECK(rep.max_residual <= 1e-10);
  }
}

TEST_CASE("codifferential matches the conformal rescaling at order two") {
  auto points = sample_points();
  AnalyticField expo = wave_exponent(0.1);

  AnalyticField omega4 = wave_2form(4, 0.15);
  ResidualReport rep4 = check_conformal_codifferential(omega4, expo, 4, points);
  CHECK(rep4.max_residual > 0.0);
  CHECK(rep4.estimated_order >= 1.9);
  CHECK(rep4.estimated_order <= 2.2);

  AnalyticField omega3 = wave_2form(3, 0.15);
  ResidualReport rep3 = check_conformal_codifferential(omega3, expo, 3, points);
  CHECK(rep3.max_residual <= 1e-7);
  CHECK(rep3.estimated_order >= 1.9);
}

TEST_CASE("codifferential converges at fourth order when requested") {
  auto points = sample_points();
  AnalyticField omega = wave_2form(3, 0.15);
  omega.fd_step = 0.05;
  omega.fd_order = FdOrder::fourth;
  AnalyticField expo = wave_exponent(0.1);
  ResidualReport rep = check_conformal_codifferential(omega, expo, 3, points);
  double ratio = rep.max_residual / rep.max_residual_half;
  CHECK(ratio >= 13.6);
  CHECK(ratio <= 18.4);
}

TEST_CASE("stencil probes outside the field box are rejected") {
  AnalyticField omega = wave_2form(3, 0.2);
  omega.box_lo = -1.0;
  omega.box_hi = 1.0;
  AnalyticField expo = zero_scalar();
  std::vector<GeomPoint> points{pt(0.9995, 0.0, 0.0, 0.0)};
  CHECK_THROWS_AS(check_conformal_codifferential(omega, expo, 3, points),
                  std::out_of_range);
}

TEST_CASE("field width and dimension mismatches are rejected") {
  auto points = sample_points();
  AnalyticField omega = wave_2form(3, 0.2);
  AnalyticField expo = zero_scalar();
  CHECK_THROWS_AS(check_conformal_codifferential(omega, expo, 4, points),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_conformal_codifferential(omega, expo, 5, points),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_dirac_covariance(CovarianceKind::gauge, wave_spinor(4, 0.3),
                                         wave_covector(3, 0.3), wave_gauge_fn(0.3), 3,
                                         0.5, points),
                  std::invalid_argument);
  MetricChart conf = conformal_chart(wave_exponent(0.1), 4);
  CHECK_THROWS_AS(check_constraints_3p1(wave_potential(0.1), conf, points),
                  std::invalid_argument);
}

TEST_CASE("gauge transformation commutes with the coupled operator") {
  auto points = sample_points();
  for (int n : {2, 4}) {
    ResidualReport rep =
        check_dirac_covariance(CovarianceKind::gauge, wave_spinor(n, 0.4),
                               wave_covector(n, 0.3), wave_gauge_fn(0.3), n, 0.7, points);
    CHECK(rep.max_residual > 0.0);
    CHECK(rep.estimated_order >= 1.9);
    CHECK(rep.estimated_order <= 2.2);
  }
}

TEST_CASE("constant gauge functions commute exactly") {
  auto points = sample_points();
  AnalyticField f = analytic_scalar([](const GeomPoint&) { return 0.8; });
  ResidualReport rep = check_dirac_covariance(
      CovarianceKind::gauge, wave_spinor(3, 0.3), wave_covector(3, 0.3), f, 3, 0.7, points);
  CHECK(rep.max_residual <= 1e-12);
}

TEST_CASE("uncoupled operator ignores the gauge function") {
  auto points = sample_points();
  ResidualReport rep =
      check_dirac_covariance(CovarianceKind::gauge, wave_spinor(3, 0.4),
                             wave_covector(3, 0.3), wave_gauge_fn(0.4), 3, 0.0, points);
  CHECK(rep.max_residual <= 1e-14);
}

TEST_CASE("conformal weight balances the rescaled operator") {
  auto points = sample_points();
  for (int n : {2, 3, 4}) {
    ResidualReport rep =
        check_dirac_covariance(CovarianceKind::conformal, wave_spinor(n, 0.4),
                               wave_covector(n, 0.3), wave_exponent(0.1), n, 0.5, points);
    CHECK(rep.max_residual > 0.0);
    CHECK(rep.estimated_order >= 1.9);
    CHECK(rep.estimated_order <= 2.2);
  }
  ResidualReport trivial =
      check_dirac_covariance(CovarianceKind::conformal, wave_spinor(4, 0.4),
                             wave_covector(4, 0.3), zero_scalar(), 4, 0.5, points);
  CHECK(trivial.max_residual <= 1e-12);
}

TEST_CASE("current ratio follows the conformal exponent") {
  auto points = sample_points();
  for (int n : {3, 4}) {
    ResidualReport rep =
        check_dirac_covariance(CovarianceKind::current_scaling, wave_spinor(n, 0.8),
                               wave_covector(n, 0.3), wave_exponent(0.3), n, 0.0, points);
    REQUIRE(rep.has_fitted_slope);
    CHECK(rep.fitted_slope == doctest::Approx(-(n - 2.0)).epsilon(1e-3));
    CHECK(rep.max_residual <= 1e-12);
    CHECK(rep.h == 0.0);
  }
}

TEST_CASE("split divergence identities vanish on a zero potential") {
  auto points = sample_points();
  AnalyticField zero_potential = analytic_real(4, [](const GeomPoint&, double* out) {
    for (int k = 0; k < 4; ++k) out[k] = 0.0;
  });
  AnalyticField lapse = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.1 * std::sin(p[1]); });
  AnalyticField slice = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.05 * p[0] + 0.02 * std::cos(p[2]); });
  MetricChart chart = sliced_chart(lapse, slice);
  ResidualReport rep = check_constraints_3p1(zero_potential, chart, points);
  CHECK(max_residual_for(rep, "eq1") <= 1e-12);
  CHECK(max_residual_for(rep, "eq2") <= 1e-12);
}

TEST_CASE("flat-chart divergence identities converge at order two") {
  auto points = sample_points();
  MetricChart chart = minkowski_chart(4);
  ResidualReport rep = check_constraints_3p1(wave_potential(0.12), chart, points);
  CHECK(max_residual_for(rep, "eq1") > 0.0);
  CHECK(max_residual_for(rep, "eq1") <= 1e-7);
  CHECK(max_residual_for(rep, "eq2") <= 1e-7);
  CHECK(order_for(rep, "eq1") >= 1.9);
  CHECK(order_for(rep, "eq1") <= 2.2);
  CHECK(order_for(rep, "eq2") >= 1.9);
  CHECK(order_for(rep, "eq2") <= 2.2);
  REQUIRE(rep.has_simplified_gap);
  CHECK(rep.simplified_gap <= 1e-10);
  CHECK(order_for(rep, "eq1_remark") >= 1.9);
  CHECK(order_for(rep, "eq2_remark") >= 1.9);
}

TEST_CASE("unit-lapse simplification is h-independent on the flat chart") {
  auto points = sample_points();
  MetricChart chart = minkowski_chart(4);
  AnalyticField coarse = wave_potential(0.12);
  coarse.fd_step = 4e-3;
  ResidualReport rep_coarse = check_constraints_3p1(coarse, chart, points);
  AnalyticField fine = wave_potential(0.12);
  fine.fd_step = 1e-3;
  ResidualReport rep_fine = check_constraints_3p1(fine, chart, points);
  CHECK(rep_coarse.simplified_gap <= 1e-10);
  CHECK(rep_fine.simplified_gap <= 1e-10);
}

TEST_CASE("lapse and slice factor couplings keep second-order convergence") {
  auto points = sample_points();
  AnalyticField lapse = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.1 * std::sin(p[1]); });
  AnalyticField slice = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.05 * p[0]; });
  MetricChart chart = sliced_chart(lapse, slice);
  ResidualReport rep = check_constraints_3p1(wave_potential(0.12), chart, points);
  CHECK(max_residual_for(rep, "eq1") > 0.0);
  CHECK(order_for(rep, "eq1") >= 1.9);
  CHECK(order_for(rep, "eq1") <= 2.2);
  CHECK(order_for(rep, "eq2") >= 1.9);
  CHECK(order_for(rep, "eq2") <= 2.2);
  CHECK_FALSE(rep.has_simplified_gap);
}

TEST_CASE("unit-lapse simplification matches the direct divergence") {
  auto points = sample_points();
  AnalyticField slice = analytic_scalar([](const GeomPoint& p) {
    return 1.0 + 0.05 * p[0] + 0.05 * std::sin(p[1]);
  });
  MetricChart chart = sliced_chart(unit_lapse(), slice);
  AnalyticField potential = wave_potential(0.12);
  potential.fd_step = 2e-3;
  ResidualReport rep = check_constraints_3p1(potential, chart, points);
  REQUIRE(rep.has_simplified_gap);
  CHECK(order_for(rep, "eq1_remark") >= 1.9);
  CHECK(order_for(rep, "eq1_remark") <= 2.2);
  CHECK(order_for(rep, "eq2_remark") >= 1.9);
  CHECK(order_for(rep, "eq2_remark") <= 2.2);
}

TEST_CASE("slice flux identity is exact for closed potentials") {
  auto points = sample_points();
  AnalyticField constant = analytic_real(4, [](const GeomPoint&, double* out) {
    out[0] = 0.3;
    out[1] = -0.2;
    out[2] = 0.1;
    out[3] = 0.4;
  });
  ResidualReport rep = check_obstruction(constant, points);
  CHECK(rep.max_residual <= 1e-12);
  for (const ResidualSample& s : rep.samples) {
    CHECK(s.lhs <= 1e-12);
    CHECK(s.rhs <= 1e-12);
  }
  REQUIRE(rep.has_slice_integral);
  CHECK(std::abs(rep.slice_integral) <= 1e-12);
}

TEST_CASE("slice flux identity converges at order two") {
  auto points = sample_points();
  AnalyticField potential = analytic_real(4, [](const GeomPoint& p, double* out) {
    out[0] = 0.15 * std::sin(0.6 * p[0] + 0.8 * p[1] - 0.5 * p[2] + 0.7 * p[3]);
    out[1] = 0.15 * std::cos(0.5 * p[0] - 0.7 * p[1] + 0.6 * p[2] - 0.4 * p[3]);
    out[2] = 0.15 * std::sin(0.4 * p[0] + 0.5 * p[1] + 0.7 * p[2] - 0.6 * p[3] + 0.3);
    out[3] = 0.15 * std::cos(0.7 * p[0] - 0.4 * p[1] + 0.5 * p[2] + 0.8 * p[3] + 0.6);
  });
  ResidualReport rep = check_obstruction(potential, points);
  CHECK(rep.max_residual > 0.0);
  CHECK(rep.estimated_order >= 1.9);
  CHECK(rep.estimated_order <= 2.2);
}

TEST_CASE("periodic potentials carry zero total flux") {
  auto points = sample_points();
  AnalyticField periodic = analytic_real(4, [](const GeomPoint& p, double* out) {
    out[0] = 0.2 * std::sin(p[1]) * std::cos(p[2]) + 0.1 * std::sin(p[3]);
    out[1] = 0.15 * std::sin(p[2] + p[3]) + 0.05 * std::sin(p[0]);
    out[2] = 0.15 * std::cos(p[1] - p[3]) + 0.1 * std::cos(2.0 * p[2]);
    out[3] = 0.1 * std::sin(p[1] + 2.0 * p[2]) * std::cos(p[3]);
  });
  ResidualReport rep = check_obstruction(periodic, points);
  REQUIRE(rep.has_slice_integral);
  CHECK(std::abs(rep.slice_integral) <= 1e-8);

  AnalyticField lopsided = analytic_real(4, [](const GeomPoint& p, double* out) {
    out[0] = 0.05 * p[1] * p[1];
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 0.0;
  });
  ResidualReport rep2 = check_obstruction(lopsided, points);
  CHECK(std::abs(rep2.slice_integral) > 1.0);
}

TEST_CASE("residual tables carry one row per sample") {
  auto points = sample_points();
  MetricChart chart = minkowski_chart(4);
  ResidualReport rep = check_constraints_3p1(wave_potential(0.12), chart, points);
  CsvTable table = residual_csv(rep);
  CHECK(table.row_count() == rep.samples.size());
  std::string text = table.to_string();
  CHECK(text.rfind("label,t,x1,x2,x3,lhs,rhs,residual,h,estimated_order", 0) == 0);
}

TEST_CASE("reports are bitwise reproducible across runs") {
  auto points = sample_points();
  AnalyticField lapse = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.1 * std::sin(p[1]); });
  AnalyticField slice = analytic_scalar(
      [](const GeomPoint& p) { return 1.0 + 0.05 * p[0]; });
  MetricChart chart = sliced_chart(lapse, slice);
  AnalyticField potential = wave_potential(0.12);
  ResidualReport a = check_constraints_3p1(potential, chart, points);
  ResidualReport b = check_constraints_3p1(potential, chart, points);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].residual == b.samples[i].residual);
    CHECK(a.samples[i].order == b.samples[i].order);
  }
  CHECK(a.max_residual == b.max_residual);

  AnalyticField periodic = analytic_real(4, [](const GeomPoint& p, double* out) {
    out[0] = 0.2 * std::sin(p[1]) * std::cos(p[2]);
    out[1] = 0.15 * std::sin(p[2] + p[3]);
    out[2] = 0.15 * std::cos(p[1] - p[3]);
    out[3] = 0.1 * std::sin(p[1] + 2.0 * p[2]);
  });
  ResidualReport c = check_obstruction(periodic, points);
  ResidualReport d = check_obstruction(periodic, points);
  CHECK(c.slice_integral == d.slice_integral);
  CHECK(c.max_residual == d.max_residual);
}
