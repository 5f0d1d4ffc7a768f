#pragma once

#include <array>
#include <functional>
#include <string>

#include "hypercauchy/grid.hpp"

namespace hypercauchy {

// Evaluation point for coefficient maps: time, node coordinates (dim entries),
// and the state value at the node (width entries).
struct CoefficientContext {
  double t = 0.0;
  const double* x = nullptr;
  const cdouble* u = nullptr;
};

// Writes a column-major width x width matrix.
using MatrixCoefficient = std::function<void(const CoefficientContext&, cdouble*)>;
// Writes a width-vector.
using SourceCoefficient = std::function<void(const CoefficientContext&, cdouble*)>;

// First-order evolution a0(t,x,u) du/dt = sum_j a_j(t,x,u) d_j u + g(t,x,u)
// with pointwise Hermitian a_j and a0 >= positivity_floor * I.
struct HyperbolicSystem {
  int dim = 1;
  int width = 1;
  MatrixCoefficient a0;                   // null = identity
  std::vector<MatrixCoefficient> a_spatial;  // size dim; null entries = zero
  SourceCoefficient source;               // null = zero
  bool semilinear = false;                // a0, a_spatial independent of u
  bool punctured = false;                 // source(t, x, 0) = 0
  double positivity_floor = 1.0;
};

struct SystemSample {
  double t = 0.0;
  std::array<double, 2> x{0.0, 0.0};
  std::vector<cdouble> u;  // width entries
};

struct ValidationReport {
  double max_hermitian_defect_a0 = 0.0;
  double max_hermitian_defect_spatial = 0.0;
  double min_a0_eigenvalue = 0.0;
  double punctured_defect = 0.0;  // |source(t,x,0)| when the punctured flag is set
  bool passed = false;
  std::string detail;
};

// Fixed (t, x) lattice crossed with the given u-probes plus u = 0.
std::vector<SystemSample> sample_lattice(const HyperbolicSystem& sys,
                                         std::span<const std::vector<cdouble>> u_probes);

// Hermitian defect <= 1e-10, min eigenvalue of a0 >= positivity_floor (within
// 1e-12), and source(t,x,0) <= 1e-12 when punctured.
ValidationReport validate_system(const HyperbolicSystem& sys,
                                 std::span<const SystemSample> samples);

// Second-order operator u_tt = sum_ij A_ij d_i d_j u + sum_i B_i d_i u
//                              + c u_t + d u + p(u)
// with A symmetric positive, shared across the u components.
struct SecondOrderOp {
  int dim = 1;
  int width = 1;
  // Writes the row-major dim x dim principal matrix A(t, x); null = identity.
  std::function<void(double t, const double* x, double* a)> principal;
  std::vector<MatrixCoefficient> drift_spatial;  // B_i, u entry unused; null = 0
  MatrixCoefficient drift_time;                  // c; null = 0
  MatrixCoefficient zeroth_linear;               // d; null = 0
  SourceCoefficient zeroth;                      // p(u); null = 0
  bool punctured = true;                         // p(0) = 0
};

// First prolongation in the block vector (u, u_t, u_x1, ..., u_xn); the
// returned system is symmetric hyperbolic with
//   a0 = blockdiag(I, I, A x I),  a_k: (u_t, u_xj) entry A_kj, (u_xi, u_t)
// entry A_ik, and all lower-order terms in the source. positivity_floor is
// min(1, sampled minimum eigenvalue of A).
HyperbolicSystem prolong_second_order(const SecondOrderOp& op);

// Right-hand side of the mollified system
//   a0(t,x,J u) du/dt = J[sum_j a_j(t,x,J u) d_j(J u)] + J[g(t,x,J u)],
// i.e. the pointwise a0-solve of the mollified flux + source. The a0 solve is
// a node-local Hermitian positive (Cholesky) solve; failure names the node.
Field mollified_rhs(const HyperbolicSystem& sys, const Mollifier& m, double t, const Field& u);

// Bundled test systems (dim 1, width 1).
HyperbolicSystem make_advection_system();             // du/dt = d_x u
HyperbolicSystem make_pure_source_system();           // du/dt = u
HyperbolicSystem make_burgers_system();               // du/dt = u d_x u
HyperbolicSystem make_transport_square_system();      // du/dt = d_x u + u^2
// du/dt = (1 + coupling*u) d_x u; smooth well past t = 1 for small coupling.
HyperbolicSystem make_gentle_quasilinear_system(double coupling = 0.1);

// u_tt = Laplacian u on `dim` axes with `width` components.
SecondOrderOp make_wave_op(int dim = 1, int width = 1);

}  // namespace hypercauchy
