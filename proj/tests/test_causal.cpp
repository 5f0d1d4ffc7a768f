#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "hypercauchy/causal.hpp"

using namespace hypercauchy;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Directed-rounding interval arithmetic, independent of the library's closed
// forms. Transcendental endpoints are widened by two ulps, enough to cover
// faithful (sub-ulp) libm rounding.
struct Iv {
  double lo = 0.0;
  double hi = 0.0;
};

double bump_down(double v, int ulps = 1) {
  for (int k = 0; k < ulps; ++k) v = std::nextafter(v, -kInf);
  return v;
}

double bump_up(double v, int ulps = 1) {
  for (int k = 0; k < ulps; ++k) v = std::nextafter(v, kInf);
  return v;
}

Iv exact(double v) { return {v, v}; }

Iv add(Iv a, Iv b) { return {bump_down(a.lo + b.lo), bump_up(a.hi + b.hi)}; }

Iv sub(Iv a, Iv b) { return {bump_down(a.lo - b.hi), bump_up(a.hi - b.lo)}; }

Iv halve(Iv a) { return {a.lo / 2.0, a.hi / 2.0}; }

Iv twice(Iv a) { return {2.0 * a.lo, 2.0 * a.hi}; }

Iv log_iv(Iv a) { return {bump_down(std::log(a.lo), 2), bump_up(std::log(a.hi), 2)}; }

Iv exp_iv(Iv a) { return {bump_down(std::exp(a.lo), 2), bump_up(std::exp(a.hi), 2)}; }

Iv min_iv(Iv a, Iv b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }

Iv clamp0(Iv a) { return {std::max(0.0, a.lo), std::max(0.0, a.hi)}; }

bool encloses(Iv a, double v, double tol = 1e-12) {
  return v >= a.lo - tol && v <= a.hi + tol;
}

// Mirrors the slice-and-band construction in interval arithmetic and checks
// every stored endpoint of the plan against its enclosure.
void check_plan_against_oracle(const CausalPlan& p) {
  const int n_max = p.n_max;
  std::vector<Iv> r(static_cast<std::size_t>(n_max) + 1);
  std::vector<Iv> t(static_cast<std::size_t>(n_max) + 1);
  r[0] = exact(p.r1);
  t[0] = exp_iv(r[0]);
  for (int k = 1; k <= n_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Iv tau = log_iv(halve(sub(exact(p.radii[ku]), exact(p.radii[ku - 1]))));
    REQUIRE(encloses(tau, p.tau_seq[ku - 1]));
    r[ku] = min_iv(sub(r[ku - 1], exact(1.0)), tau);
    t[ku] = exp_iv(r[ku]);
    REQUIRE(encloses(r[ku], p.r_seq[ku]));
    REQUIRE(encloses(t[ku], p.t_seq[ku]));
  }
  for (int n = 1; n <= n_max; ++n) {
    for (int i = 1; i <= n + 1; ++i) {
      const CausalRegion reg = p.region(i, n);
      if (i == 1) {
        REQUIRE(reg.lo == 0.0);
        REQUIRE(reg.hi == p.radii[0]);
        REQUIRE(reg.slice == 0);
      } else if (i <= n) {
        const auto iu = static_cast<std::size_t>(i);
        const Iv lo = clamp0(sub(exact(p.radii[iu - 2]), twice(t[iu - 2])));
        REQUIRE(encloses(lo, reg.lo));
        REQUIRE(reg.hi == p.radii[iu - 1]);
        REQUIRE(reg.slice == 0);
      } else {
        const auto nu = static_cast<std::size_t>(n);
        const Iv lo = clamp0(
            add(sub(exact(p.radii[nu - 1]), twice(t[nu - 1])), t[nu]));
        REQUIRE(encloses(lo, reg.lo));
        REQUIRE(reg.hi == kInf);
        REQUIRE(reg.slice == n + 1);
      }
    }
  }
}

std::vector<double> unit_spaced_radii(int count) {
  std::vector<double> radii(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) radii[static_cast<std::size_t>(k)] = k + 1;
  return radii;
}

}  // namespace

TEST_CASE("plan reproduces the unit-spaced worked example") {
  const CausalPlan p = plan(unit_spaced_radii(4), -1.0, 3);

  CHECK(p.temporal(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(p.tau_seq[0] - (-0.69314718055994529)) < 1e-12);
  CHECK(p.r_seq[0] == -1.0);
  CHECK(p.r_seq[1] == -2.0);  // the unit drop undercuts tau here
  CHECK(std::abs(p.t_seq[0] - 0.36787944117144233) < 1e-12);
  CHECK(std::abs(p.t_seq[1] - 0.1353352832366127) < 1e-12);

  const CausalRegion a1 = p.region(1, 3);
  CHECK(a1.lo == 0.0);
  CHECK(a1.hi == 1.0);
  CHECK(a1.slice == 0);

  const CausalRegion a2 = p.region(2, 3);
  CHECK(std::abs(a2.lo - 0.26424111765711533) < 1e-12);
  CHECK(a2.hi == 2.0);
  CHECK(a2.slice == 0);

  const CausalRegion a3 = p.region(3, 3);
  CHECK(std::abs(a3.lo - 1.7293294335267746) < 1e-12);
  CHECK(a3.hi == 3.0);

  const CausalRegion term1 = p.region(2, 1);
  CHECK(std::abs(term1.lo - 0.39957640089372803) < 1e-12);
  CHECK(term1.hi == kInf);
  CHECK(term1.slice == 2);

  check_plan_against_oracle(p);
}

TEST_CASE("plan rejects malformed inputs") {
  CHECK_THROWS_AS(plan({1.0, 2.0}, -1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(plan({1.0, 2.0}, -1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(plan({1.0, 1.0, 2.0}, -1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(plan({2.0, 1.0, 3.0}, -1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(plan({-1.0, 1.0, 2.0}, -1.0, 2), std::invalid_argument);
  // r1 must sit strictly below ln R_1.
  CHECK_THROWS_AS(plan({1.0, 2.0, 3.0}, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(plan(unit_spaced_radii(4), std::log(1.0) + 0.1, 3),
                  std::invalid_argument);
  CHECK_NOTHROW(plan({2.0, 3.0, 4.0}, std::log(2.0) - 1e-9, 2));
}

TEST_CASE("slice levels drop by at least one and times vanish") {
  const CausalPlan p = plan(unit_spaced_radii(11), -1.0, 10);
  for (int k = 1; k <= p.n_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    CHECK(p.r_seq[ku] ==
          std::min(p.r_seq[ku - 1] - 1.0, p.tau_seq[ku - 1]));
    CHECK(p.r_seq[ku] <= p.r_seq[ku - 1] - 1.0);
    CHECK(p.t_seq[ku] < p.t_seq[ku - 1]);
  }
  CHECK(p.t_seq.back() <= std::exp(p.r1 - p.n_max));

  // Tightly spaced radii force the cone-crossing level to bind instead of
  // the unit drop.
  const CausalPlan q = plan({1.0, 1.002, 1.004, 1.006}, -1.0, 3);
  CHECK(q.tau_seq[0] == std::log((1.002 - 1.0) / 2.0));
  CHECK(q.tau_seq[0] < q.r_seq[0] - 1.0);
  CHECK(q.r_seq[1] == q.tau_seq[0]);
  check_plan_against_oracle(q);
}

TEST_CASE("separation holds for constructed plans") {
  const CausalPlan p = plan(unit_spaced_radii(52), -1.0, 51);
  const std::vector<bool> verdicts = verify_separation(p);
  REQUIRE(verdicts.size() == 50);
  for (bool v : verdicts) CHECK(v);

  std::vector<double> geometric(8);
  double r = 0.6;
  for (auto& v : geometric) {
    v = r;
    r *= 2.0;
  }
  const CausalPlan q = plan(geometric, -1.5, 7);
  for (bool v : verify_separation(q)) CHECK(v);

  std::vector<double> tight(12);
  for (int k = 0; k < 12; ++k) tight[static_cast<std::size_t>(k)] = 0.5 + 0.1 * k;
  const CausalPlan w = plan(tight, -2.0, 11);
  for (bool v : verify_separation(w)) CHECK(v);
}

TEST_CASE("separation reads the stored times, so tampering is caught") {
  CausalPlan p = plan(unit_spaced_radii(6), -1.0, 5);
  p.t_seq[1] = 0.6;  // pushes the second slice too far up
  const std::vector<bool> verdicts = verify_separation(p);
  REQUIRE(verdicts.size() == 4);
  CHECK_FALSE(verdicts[0]);  // 2 - 1.2 = 0.8 < 1
  CHECK(verdicts[1]);
  CHECK(verdicts[2]);
  CHECK(verdicts[3]);
}

TEST_CASE("single-slice plans have nothing to separate") {
  const CausalPlan p = plan({1.0, 2.0}, -1.0, 1);
  CHECK(verify_separation(p).empty());
}

TEST_CASE("band families are step-independent and annuli meet two bands") {
  const CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  CHECK(verify_stabilization(p));

  // The annulus between the first two exhaustion radii touches exactly the
  // second and third bands: its closed lower end meets the half-open top of
  // neither earlier band.
  const CausalRegion d2 = p.annulus(2);
  CHECK(d2.lo == 1.0);
  CHECK(d2.hi == 2.0);
  CHECK_FALSE(regions_overlap(d2, p.region(1, 6)));
  CHECK(regions_overlap(d2, p.region(2, 6)));
  CHECK(regions_overlap(d2, p.region(3, 6)));
  CHECK_FALSE(regions_overlap(d2, p.region(4, 6)));
}

TEST_CASE("stabilization check needs enough steps") {
  const CausalPlan p = plan(unit_spaced_radii(4), -1.0, 3);
  CHECK_THROWS_AS(verify_stabilization(p), std::invalid_argument);
}

TEST_CASE("stabilization accepts forged step-independent copies") {
  CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  // Overwrite every earlier family with the final one truncated; the check
  // sees identical bands everywhere and cannot distinguish this from the
  // constructed table.
  const auto& last = p.regions.back();
  for (std::size_t n = 0; n + 1 < p.regions.size(); ++n)
    for (std::size_t i = 0; i + 1 < p.regions[n].size(); ++i)
      p.regions[n][i] = last[i];
  CHECK(verify_stabilization(p));
}

TEST_CASE("stabilization detects a drifted band") {
  CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  p.regions[4][1].lo += 1e-9;  // second band at step 5 only
  CHECK_FALSE(verify_stabilization(p));
}

TEST_CASE("identity transport keeps every budget at half the total") {
  const CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  const double delta = 0.8;
  const ControlSequence cs = propagate_bounds(
      p, delta, [](const CausalRegion&, double b) { return b; });

  CHECK(cs.delta == delta);
  REQUIRE(cs.a_table.size() == 6);
  for (std::size_t n = 0; n < cs.a_table.size(); ++n) {
    REQUIRE(cs.a_table[n].size() == n + 2);
    for (double a : cs.a_table[n]) CHECK(a == delta / 2.0);
  }
  REQUIRE(cs.a_limits.size() == 6);
  for (double a : cs.a_limits) CHECK(a == delta / 2.0);

  // Annulus budgets: equal numerators, so the longer band decides.
  REQUIRE(cs.b_table.size() == 5);
  for (int i = 1; i <= 5; ++i) {
    const CausalRegion a = p.region(i, 6);
    const CausalRegion b = p.region(i + 1, 6);
    const double expected =
        std::min((delta / 2.0) / std::sqrt(2.0 * (a.hi - a.lo)),
                 (delta / 2.0) / std::sqrt(2.0 * (b.hi - b.lo)));
    CHECK(cs.b_table[static_cast<std::size_t>(i - 1)] == expected);
  }
}

TEST_CASE("halving transport decays the budgets geometrically") {
  const CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  const double delta = 1.0;
  const ControlSequence cs = propagate_bounds(
      p, delta, [](const CausalRegion&, double b) { return b / 2.0; });

  for (int i = 1; i <= 6; ++i)
    CHECK(cs.a_limits[static_cast<std::size_t>(i - 1)] ==
          std::ldexp(delta, -i));
  // Third row spelled out: frozen prefix, then the freshly split pair.
  REQUIRE(cs.a_table[2].size() == 4);
  CHECK(cs.a_table[2][0] == delta / 2.0);
  CHECK(cs.a_table[2][1] == delta / 4.0);
  CHECK(cs.a_table[2][2] == delta / 8.0);
  CHECK(cs.a_table[2][3] == delta / 8.0);
}

TEST_CASE("inner and outer splits are budgeted separately") {
  const CausalPlan p = plan(unit_spaced_radii(6), -1.0, 5);
  const double delta = 1.0;
  // Outward half-lines are recognizable by their infinite endpoint.
  const ControlSequence cs = propagate_bounds(
      p, delta, [](const CausalRegion& reg, double b) {
        return std::isinf(reg.hi) ? 0.4 * b : 0.25 * b;
      });

  REQUIRE(cs.a_table[1].size() == 3);
  CHECK(cs.a_table[1][0] == delta / 2.0);
  CHECK(cs.a_table[1][1] == 0.25 * (delta / 2.0));
  CHECK(cs.a_table[1][2] == 0.4 * (delta / 2.0));

  const double target2 = cs.a_table[1][2];
  CHECK(cs.a_table[2][2] == 0.25 * target2);
  CHECK(cs.a_table[2][3] == 0.4 * target2);

  // Stabilization of the budgets: shared indices agree across steps.
  for (std::size_t n = 0; n < cs.a_table.size(); ++n)
    for (std::size_t m = n; m < cs.a_table.size(); ++m)
      for (std::size_t i = 0; i + 2 <= n + 1; ++i)
        CHECK(cs.a_table[n][i] == cs.a_table[m][i]);
  for (const auto& row : cs.a_table)
    for (double a : row) CHECK(a > 0.0);
}

TEST_CASE("bound transport rejects bad inputs") {
  const CausalPlan p = plan(unit_spaced_radii(5), -1.0, 4);
  const BoundPropagator identity = [](const CausalRegion&, double b) {
    return b;
  };
  CHECK_THROWS_AS(propagate_bounds(p, 0.0, identity), std::invalid_argument);
  CHECK_THROWS_AS(propagate_bounds(p, -1.0, identity), std::invalid_argument);
  CHECK_THROWS_AS(propagate_bounds(p, 1.0, BoundPropagator{}),
                  std::invalid_argument);
  // Decreasing in the bound argument: caught on the probe pairs.
  CHECK_THROWS_AS(propagate_bounds(
                      p, 1.0,
                      [](const CausalRegion&, double b) { return 0.1 / (b + 1.0); }),
                  std::invalid_argument);
  // Nonpositive output: also caught on the probes.
  CHECK_THROWS_AS(propagate_bounds(
                      p, 1.0,
                      [](const CausalRegion&, double b) { return b - 1.0; }),
                  std::invalid_argument);
}

TEST_CASE("plan export lists one row per band with exact endpoints") {
  const CausalPlan p = plan(unit_spaced_radii(4), -1.0, 3);
  const std::string csv = plan_csv(p);
  std::istringstream is(csv);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "n,r_n,t_n,i,carrier,lo,hi");
  std::vector<std::string> rows;
  while (std::getline(is, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2 + 3 + 4);
  CHECK(rows[0] == "1,-1,0.36787944117144233,1,0,0,1");
  // Terminal band of the first step: carrier slice 2, outward half-line.
  CHECK(rows[1] == "1,-1,0.36787944117144233,2,2,0.39957640089372803,inf");
  CHECK(rows[2].substr(0, 2) == "2,");

  CHECK(plan_csv(p) == csv);
}

TEST_CASE("plan diagram lays out slices, bands, annuli, and terminals") {
  const CausalPlan p = plan(unit_spaced_radii(7), -1.0, 6);
  const std::string art = plan_diagram(p);
  CHECK(art.find("slice ladder") != std::string::npos);
  CHECK(art.find("S_7") != std::string::npos);
  CHECK(art.find("A_1") != std::string::npos);
  CHECK(art.find("D_2 = [1, 2)  meets A_2 A_3") != std::string::npos);
  CHECK(art.find("terminal bands:") != std::string::npos);
  CHECK(art.find("on S_7") != std::string::npos);
  CHECK(plan_diagram(p) == art);
}

TEST_CASE("fifty-step plan matches the interval oracle quickly") {
  const auto start = std::chrono::steady_clock::now();
  const CausalPlan p = plan(unit_spaced_radii(51), -1.0, 50);
  check_plan_against_oracle(p);
  for (bool v : verify_separation(p)) CHECK(v);
  CHECK(verify_stabilization(p));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  CHECK(seconds < 1.0);
}
