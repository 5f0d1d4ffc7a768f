#include "hypercauchy/system.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <iterator>
#include <limits>
#include <sstream>

namespace hypercauchy {

namespace {

using MatrixXcd = Eigen::MatrixXcd;
using Map = Eigen::Map<Eigen::MatrixXcd>;
using ConstMap = Eigen::Map<const Eigen::MatrixXcd>;

double hermitian_defect(const cdouble* m, int w) {
  double d = 0.0;
  for (int r = 0; r < w; ++r)
    for (int c = 0; c < w; ++c) d = std::max(d, std::abs(m[r + w * c] - std::conj(m[c + w * r])));
  return d;
}

}  // namespace

std::vector<SystemSample> sample_lattice(const HyperbolicSystem& sys,
                                         std::span<const std::vector<cdouble>> u_probes) {
  std::vector<SystemSample> samples;
  const int nx = 8;
  std::vector<std::vector<cdouble>> probes(u_probes.begin(), u_probes.end());
  probes.emplace_back(sys.width, cdouble{});  // always include u = 0
  for (double t : {0.0, 0.5, 1.0}) {
    for (int jx = 0; jx < nx; ++jx) {
      double x0 = tau * jx / nx;
      int ny = sys.dim == 2 ? nx : 1;
      for (int jy = 0; jy < ny; ++jy) {
        for (const auto& probe : probes) {
          if (std::ssize(probe) != sys.width)
            throw std::invalid_argument("sample_lattice: probe width mismatch");
          SystemSample s;
          s.t = t;
          s.x = {x0, tau * jy / nx};
          s.u = probe;
          samples.push_back(std::move(s));
        }
      }
    }
  }
  return samples;
}

ValidationReport validate_system(const HyperbolicSystem& sys,
                                 std::span<const SystemSample> samples) {
  if (samples.empty()) throw std::invalid_argument("validate_system: empty sample set");
  ValidationReport rep;
  rep.min_a0_eigenvalue = sys.a0 ? std::numeric_limits<double>::infinity() : 1.0;
  const int w = sys.width;
  std::vector<cdouble> buf(static_cast<std::size_t>(w) * w);

  for (const SystemSample& s : samples) {
    CoefficientContext ctx{s.t, s.x.data(), s.u.data()};
    if (sys.a0) {
      sys.a0(ctx, buf.data());
      rep.max_hermitian_defect_a0 = std::max(rep.max_hermitian_defect_a0,
                                             hermitian_defect(buf.data(), w));
      MatrixXcd m = ConstMap(buf.data(), w, w);
      MatrixXcd sym = 0.5 * (m + m.adjoint());
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sym, Eigen::EigenvaluesOnly);
      rep.min_a0_eigenvalue = std::min(rep.min_a0_eigenvalue, es.eigenvalues().minCoeff());
    }
    for (const auto& a : sys.a_spatial) {
      if (!a) continue;
      a(ctx, buf.data());
      rep.max_hermitian_defect_spatial = std::max(rep.max_hermitian_defect_spatial,
                                                  hermitian_defect(buf.data(), w));
    }
    if (sys.punctured && sys.source) {
      bool zero_state = true;
      for (int c = 0; c < w; ++c) zero_state = zero_state && s.u[c] == cdouble{};
      if (zero_state) {
        std::vector<cdouble> g(w);
        sys.source(ctx, g.data());
        for (int c = 0; c < w; ++c) rep.punctured_defect = std::max(rep.punctured_defect, std::abs(g[c]));
      }
    }
  }

  const bool herm_ok = rep.max_hermitian_defect_a0 <= 1e-10 &&
                       rep.max_hermitian_defect_spatial <= 1e-10;
  const bool floor_ok = rep.min_a0_eigenvalue >= sys.positivity_floor - 1e-12;
  const bool punct_ok = rep.punctured_defect <= 1e-12;
  rep.passed = herm_ok && floor_ok && punct_ok;

  std::ostringstream os;
  os << "hermitian defects a0=" << rep.max_hermitian_defect_a0
     << " spatial=" << rep.max_hermitian_defect_spatial
     << ", min a0 eigenvalue=" << rep.min_a0_eigenvalue
     << " (floor " << sys.positivity_floor << ")"
     << ", punctured defect=" << rep.punctured_defect;
  rep.detail = os.str();
  return rep;
}

HyperbolicSystem prolong_second_order(const SecondOrderOp& op) {
  const int n = op.dim;
  const int m = op.width;
  const int W = m * (2 + n);
  auto principal = op.principal;
  auto eval_principal = [principal, n](double t, const double* x, double* a) {
    if (principal) {
      principal(t, x, a);
    } else {
      for (int i = 0; i < n * n; ++i) a[i] = 0.0;
      for (int i = 0; i < n; ++i) a[i * n + i] = 1.0;
    }
  };

  // Symmetry check plus the positivity floor from a coarse (t, x) lattice.
  double min_eig = std::numeric_limits<double>::infinity();
  {
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    const int nx = 16;
    for (double t : {0.0, 0.5, 1.0}) {
      for (int jx = 0; jx < nx; ++jx) {
        int ny = n == 2 ? nx : 1;
        for (int jy = 0; jy < ny; ++jy) {
          double x[2] = {tau * jx / nx, tau * jy / nx};
          eval_principal(t, x, a.data());
          double defect = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) defect = std::max(defect, std::abs(a[i * n + j] - a[j * n + i]));
          if (defect > 1e-10)
            throw std::invalid_argument("prolong_second_order: principal part not symmetric");
          Eigen::MatrixXd mat = Eigen::Map<Eigen::MatrixXd>(a.data(), n, n);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (mat + mat.transpose()),
                                                            Eigen::EigenvaluesOnly);
          min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
      }
    }
    if (!(min_eig > 0))
      throw std::invalid_argument("prolong_second_order: principal part not positive");
  }

  HyperbolicSystem sys;
  sys.dim = n;
  sys.width = W;
  sys.semilinear = true;
  sys.punctured = op.punctured;
  sys.positivity_floor = std::min(1.0, min_eig);

  // Block layout: [u (m), u_t (m), u_x1 (m), ..., u_xn (m)].
  sys.a0 = [eval_principal, n, m, W](const CoefficientContext& ctx, cdouble* out) {
    std::fill(out, out + static_cast<std::size_t>(W) * W, cdouble{});
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    eval_principal(ctx.t, ctx.x, a.data());
    for (int c = 0; c < 2 * m; ++c) out[c + W * c] = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < m; ++c) {
          int r = (2 + i) * m + c;
          int col = (2 + j) * m + c;
          out[r + W * col] = a[i * n + j];
        }
  };

  sys.a_spatial.resize(n);
  for (int k = 0; k < n; ++k) {
    sys.a_spatial[k] = [eval_principal, n, m, W, k](const CoefficientContext& ctx, cdouble* out) {
      std::fill(out, out + static_cast<std::size_t>(W) * W, cdouble{});
      std::vector<double> a(static_cast<std::size_t>(n) * n);
      eval_principal(ctx.t, ctx.x, a.data());
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < m; ++c) {
          // (u_t, u_xj) entry A_kj and (u_xj, u_t) entry A_jk.
          int rt = m + c;
          int cxj = (2 + j) * m + c;
          out[rt + W * cxj] = a[k * n + j];
          out[cxj + W * rt] = a[j * n + k];
        }
    };
  }

  auto drift_spatial = op.drift_spatial;
  auto drift_time = op.drift_time;
  auto zeroth_linear = op.zeroth_linear;
  auto zeroth = op.zeroth;
  sys.source = [drift_spatial, drift_time, zeroth_linear, zeroth, n, m, W](
                   const CoefficientContext& ctx, cdouble* out) {
    std::fill(out, out + W, cdouble{});
    const cdouble* u = ctx.u;
    const cdouble* ut = ctx.u + m;
    // du/dt = u_t row.
    for (int c = 0; c < m; ++c) out[c] = ut[c];
    // d(u_t)/dt row: B_i u_xi + c u_t + d u + p(u).
    std::vector<cdouble> mat(static_cast<std::size_t>(m) * m);
    auto accumulate = [&](const MatrixCoefficient& coeff, const cdouble* vec) {
      if (!coeff) return;
      coeff(ctx, mat.data());
      for (int r = 0; r < m; ++r) {
        cdouble acc = 0.0;
        for (int c = 0; c < m; ++c) acc += mat[r + m * c] * vec[c];
        out[m + r] += acc;
      }
    };
    for (int i = 0; i < n; ++i) {
      if (i < std::ssize(drift_spatial)) accumulate(drift_spatial[i], ctx.u + (2 + i) * m);
    }
    accumulate(drift_time, ut);
    accumulate(zeroth_linear, u);
    if (zeroth) {
      std::vector<cdouble> p(m);
      zeroth(ctx, p.data());
      for (int r = 0; r < m; ++r) out[m + r] += p[r];
    }
  };
  return sys;
}

Field mollified_rhs(const HyperbolicSystem& sys, const Mollifier& m, double t, const Field& u) {
  if (u.width() != sys.width || u.spec().dim != sys.dim)
    throw std::invalid_argument("mollified_rhs: field does not match system shape");
  const int w = sys.width;
  const GridSpec& spec = u.spec();

  Field smooth = mollify(u, m);
  std::vector<Field> dsm;
  dsm.reserve(sys.dim);
  for (int d = 0; d < sys.dim; ++d) dsm.push_back(derivative(smooth, d));

  std::vector<const Field*> inputs;
  inputs.push_back(&smooth);
  for (const Field& f : dsm) inputs.push_back(&f);

  std::vector<cdouble> mat(static_cast<std::size_t>(w) * w);
  Field body = nodewise(
      spec, std::span<const Field* const>(inputs.data(), inputs.size()),
      [&](const double* x, const cdouble* const* in, cdouble* out) {
        CoefficientContext ctx{t, x, in[0]};
        std::fill(out, out + w, cdouble{});
        for (int d = 0; d < sys.dim; ++d) {
          const MatrixCoefficient& a = sys.a_spatial[d];
          if (!a) continue;
          a(ctx, mat.data());
          const cdouble* du = in[1 + d];
          for (int r = 0; r < w; ++r) {
            cdouble acc = 0.0;
            for (int c = 0; c < w; ++c) acc += mat[r + w * c] * du[c];
            out[r] += acc;
          }
        }
        if (sys.source) {
          std::vector<cdouble> g(w);
          sys.source(ctx, g.data());
          for (int r = 0; r < w; ++r) out[r] += g[r];
        }
      });

  Field rhs = mollify(body, m);
  if (!sys.a0) return rhs;

  Eigen::MatrixXcd a0(w, w);
  return nodewise(spec, {&smooth, &rhs},
                  [&](const double* x, const cdouble* const* in, cdouble* out) {
                    CoefficientContext ctx{t, x, in[0]};
                    sys.a0(ctx, a0.data());
                    Eigen::LLT<Eigen::MatrixXcd> llt(a0);
                    if (llt.info() != Eigen::Success) {
                      std::ostringstream os;
                      os << "mollified_rhs: a0 not positive definite at node (";
                      for (int d = 0; d < sys.dim; ++d) os << (d ? ", " : "") << x[d];
                      os << ")";
                      throw std::runtime_error(os.str());
                    }
                    Eigen::Map<const Eigen::VectorXcd> b(in[1], w);
                    Eigen::Map<Eigen::VectorXcd> sol(out, w);
                    sol = llt.solve(b);
                  });
}

HyperbolicSystem make_advection_system() {
  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = 1;
  sys.a_spatial.resize(1);
  sys.a_spatial[0] = [](const CoefficientContext&, cdouble* out) { out[0] = 1.0; };
  sys.semilinear = true;
  sys.punctured = true;
  return sys;
}

HyperbolicSystem make_pure_source_system() {
  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = 1;
  sys.a_spatial.resize(1);
  sys.source = [](const CoefficientContext& ctx, cdouble* out) { out[0] = ctx.u[0]; };
  sys.semilinear = true;
  sys.punctured = true;
  return sys;
}

HyperbolicSystem make_burgers_system() {
  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = 1;
  sys.a_spatial.resize(1);
  sys.a_spatial[0] = [](const CoefficientContext& ctx, cdouble* out) { out[0] = ctx.u[0]; };
  sys.semilinear = false;
  sys.punctured = true;
  return sys;
}

HyperbolicSystem make_transport_square_system() {
  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = 1;
  sys.a_spatial.resize(1);
  sys.a_spatial[0] = [](const CoefficientContext&, cdouble* out) { out[0] = 1.0; };
  sys.source = [](const CoefficientContext& ctx, cdouble* out) { out[0] = ctx.u[0] * ctx.u[0]; };
  sys.semilinear = true;
  sys.punctured = true;
  return sys;
}

HyperbolicSystem make_gentle_quasilinear_system(double coupling) {
  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = 1;
  sys.a_spatial.resize(1);
  sys.a_spatial[0] = [coupling](const CoefficientContext& ctx, cdouble* out) {
    out[0] = 1.0 + coupling * ctx.u[0];
  };
  sys.semilinear = false;
  sys.punctured = true;
  return sys;
}

SecondOrderOp make_wave_op(int dim, int width) {
  SecondOrderOp op;
  op.dim = dim;
  op.width = width;
  op.punctured = true;
  return op;
}

}  // namespace hypercauchy
