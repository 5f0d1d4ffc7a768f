#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hypercauchy/grid.hpp"

namespace hypercauchy {

// Deterministic family of random real trigonometric polynomials. Coefficients
// are drawn from a seeded mt19937_64 in a fixed mode order (see make_suite),
// uniform on [-amplitude, amplitude], independently for real and imaginary
// parts; conjugate modes mirror so every field is real-valued.
struct RandomSuite {
  std::uint64_t seed = 0;
  int count = 16;
  int max_degree = 8;
  double amplitude = 1.0;
  int dim = 1;
};

// `fields_per_member` fields per suite member, member-major. All draws come
// from one generator in a fixed order, so the sequence is reproducible and
// independent of the grid resolution the fields are synthesized on.
std::vector<Field> make_suite(const RandomSuite& suite, int fields_per_member,
                              int modes_per_axis);

// Smallest supported resolution whose band holds products of two suite
// members with room for mollifier sidebands.
int default_suite_modes(const RandomSuite& suite);

// Scalar map applied pointwise to (the real part of) a field. Product and
// chain bounds in the `third` variant require map(0) == 0.
struct SmoothComposer {
  std::string name;
  std::function<double(double)> map;
};

SmoothComposer composer_identity();  // u
SmoothComposer composer_cube();      // u^3
SmoothComposer composer_sine();      // sin(u)
SmoothComposer composer_expm1();     // exp(u) - 1
// Lookup by the names above; throws std::invalid_argument on anything else.
SmoothComposer find_composer(const std::string& name);

// first:  |fg|_{H^k} <= C (|f|_inf |g|_{H^k} + |f|_{H^k} |g|_inf)
// second: |d^a(fg) - f d^a g|_{L2}
//           <= C (|grad f|_{H^{k-1}} |g|_inf + |grad f|_inf |g|_{H^{k-1}}),
//         max over |a| <= k
// third:  |d^a F(f)|_{L2} <= C(|f|_inf) |grad^{|a|} f|_{L2}, max over |a| <= k
enum class MoserVariant { first, second, third };

// zeroth:        |[a, J_eps] v|_{L2}       <= C |a|_{C0} |v|_{L2}
// lipschitz:     |[a, J_eps] v|_{L2}       <= C eps |a|_{C1} |v|_{L2}
// first_sobolev: |[a, J_eps] v|_{H1}       <= C |a|_{C1} |v|_{L2}
// derivative:    |[a, J_eps] d_j v|_{L2}   <= C |a|_{C1} |v|_{L2}, max over j
enum class CommutatorForm { zeroth, lipschitz, first_sobolev, derivative };

struct RatioRow {
  int member = 0;
  double epsilon = 0.0;  // 0 for Moser rows
  int modes = 0;         // grid resolution the row was measured on
  double ratio = 0.0;
};

// Empirical constants: each row is one member (and one epsilon, for
// commutators) evaluated at one resolution. Every check runs at a base
// resolution and again with the grid refined 2x; `refinement_change` is the
// relative shift of the max ratio under that refinement.
struct RatioReport {
  std::vector<RatioRow> rows;
  double max_ratio = 0.0;          // over base-resolution rows
  double max_ratio_refined = 0.0;  // over refined rows
  double refinement_change = 0.0;
  double lipschitz_slope = 0.0;  // log-log slope of the raw gap in eps
  bool has_slope = false;        // set for CommutatorForm::lipschitz
};

// Largest LHS/RHS over the given (f, g) pairs (pairs share indices; the
// third variant ignores gs and needs a composer with map(0) == 0). Fields
// must be scalar and share one grid; that grid is the base resolution.
RatioReport check_moser(MoserVariant variant, std::span<const Field> fs,
                        std::span<const Field> gs, int k,
                        const SmoothComposer* composer = nullptr);

// Same check over a generated suite: first/second draw (f_i, g_i) pairs,
// third draws one field per member.
RatioReport check_moser(MoserVariant variant, const RandomSuite& suite, int k,
                        const SmoothComposer* composer = nullptr);

// Commutator [a, J_eps] v = a (J_eps v) - J_eps (a v) measured over
// test fields x eps_schedule. `a_field` must be scalar on the same grid.
RatioReport check_commutator(CommutatorForm form, const Field& a_field,
                             std::span<const Field> test_fields,
                             std::span<const double> eps_schedule);

RatioReport check_commutator(CommutatorForm form, const Field& a_field,
                             const RandomSuite& suite,
                             std::span<const double> eps_schedule);

}  // namespace hypercauchy
