#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypercauchy/evolve.hpp"
#include "hypercauchy/grid.hpp"
#include "hypercauchy/system.hpp"

namespace hypercauchy {

// Clifford data on the 1+1 cylinder with signature (-, +) and convention
// X.Y + Y.X = -2 g(X, Y) I, so gamma0^2 = +I and gamma1^2 = -I. `pairing`
// is the Hermitian matrix H of the spinor product <psi, phi> = phi^* H psi.
struct CliffordRep {
  Eigen::Matrix2cd gamma0;
  Eigen::Matrix2cd gamma1;
  Eigen::Matrix2cd pairing;
};

// gamma0 = [[0,1],[1,0]], gamma1 = [[0,1],[-1,0]], pairing = gamma0, which
// makes H gamma0 = I and H gamma1 = diag(-1, 1).
CliffordRep standard_rep();

// Machine check of the representation: Clifford relations, Hermiticity of
// the pairing and of H gamma0, H gamma1 (real frame currents), positive
// definiteness of the energy pairing H gamma0, and current reality sampled
// on a fixed set of pseudorandom spinors.
struct RepReport {
  double clifford_defect = 0.0;
  double pairing_defect = 0.0;
  double beta_min_eigenvalue = 0.0;
  double current_imag_max = 0.0;
  bool passed = false;
  std::string detail;
};

RepReport validate_rep(const CliffordRep& rep);

struct Species {
  double charge_mu = 0.0;
  double mass = 0.0;  // massless scope; pack_dm_state rejects anything else
  Field spinor;       // width 2, complex
};

// Potential blocks are indexed 0 = time component, 1 = space component.
// potential_dt and potential_dx carry the first prolongation of the wave
// part; potential_dx must stay equal to d/dx potential.
struct DMState {
  std::vector<Species> species;
  std::array<Field, 2> potential;
  std::array<Field, 2> potential_dt;
  std::array<Field, 2> potential_dx;
};

// Packed layout: [psi^1 (2), ..., psi^N (2), A_t, A_x, At', Ax', A_t,x, A_x,x]
// as one complex field of width 2N + 6.
Field pack_dm_state(const DMState& state);
DMState unpack_dm_state(const Field& packed, std::span<const double> charges);

// First-order symmetric hyperbolic form of the coupled system: species
// blocks a0 = H gamma0, a1 = H gamma1 with the minimal coupling i mu
// (A_x H gamma1 - A_t H gamma0) psi in the source; wave blocks carry the
// prolonged d'Alembert operator with current sources J_t = sum mu <e0 psi,
// psi>, J_x = sum mu <e1 psi, psi>. Throws when the rep fails validation.
HyperbolicSystem build_dm_system(std::span<const double> charges, const CliffordRep& rep);

// Integral over the circle of sum_l mu_l <e0 psi^l, psi^l>.
double total_charge(const DMState& state, const CliffordRep& rep);

// Per-species L2 charge integral <e0 psi, psi> without the mu weight.
double species_norm(const Species& s, const CliffordRep& rep);

// d*A = dA_t/dt - dA_x/dx read off the prolonged blocks; returns the
// residual field and its sup norm.
std::pair<Field, double> lorenz_residual(const DMState& state);

// Constraint residuals of initial data: r1 = At' - d/dx A_x and
// r2 = d2/dx2 A_t - d/dx Ax' + J_t. Their integrals obey
// integral(r2) = total_charge exactly (the divergence terms drop out).
std::array<Field, 2> constraint_residual_fields(const DMState& state, const CliffordRep& rep);
// Sup norms of the two residuals.
std::pair<double, double> constraint_residual_1p1(const DMState& state, const CliffordRep& rep);

// Spinors pick up the phase e^{-i mu_l f}; the potential shifts by the
// differential (f_dt, d/dx f). The unknown second time derivative of f is
// taken from its wave continuation (f_tt := d2/dx2 f), which keeps the
// Lorenz residual invariant and the prolongation consistent.
DMState gauge_transform(const DMState& state, const Field& f, const Field& f_dt,
                        const CliffordRep& rep);

struct DMTrajectory {
  Trajectory base;             // packed snapshots
  std::vector<double> charges; // mu list, for unpacking snapshots
  std::vector<double> charge_log;
  std::vector<std::vector<double>> species_norm_log;  // [snapshot][species]
  std::vector<double> lorenz_sup_log;
};

DMTrajectory evolve_dm(const DMState& initial, double t_end, const SolveControls& ctl,
                       const Mollifier& m, const CliffordRep& rep);

// Bundled demo data: two species with mu = +-1 (the second spinor is a
// quarter-turn translate of the first, so the total charge vanishes) and a
// potential chosen to satisfy both constraint residuals exactly.
DMState neutral_demo_state(int modes, double amplitude);

// Plain-text spectra, one line per stored mode. Loaders reject malformed
// or out-of-band entries with a line-numbered ConfigError.
void save_dm_state(const DMState& state, std::ostream& os);
DMState load_dm_state(std::istream& is);

}  // namespace hypercauchy
