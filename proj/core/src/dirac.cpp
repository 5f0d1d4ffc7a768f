#include "hypercauchy/dirac.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hypercauchy/io.hpp"

namespace hypercauchy {
namespace {

using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<Vec2> probe_spinors() {
  std::mt19937_64 rng(0x5eedd17acull);
  auto u = [&] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
  std::vector<Vec2> out;
  out.reserve(32);
  for (int i = 0; i < 32; ++i) {
    Vec2 s;
    s << cdouble(u(), u()), cdouble(u(), u());
    out.push_back(s);
  }
  return out;
}

// column-major 2x2 copy for capture in coefficient closures
std::array<cdouble, 4> as_array(const Mat2& m) {
  return {m(0, 0), m(1, 0), m(0, 1), m(1, 1)};
}

GridSpec scalar_real_spec(const GridSpec& like) {
  return like.with_width(1, ScalarKind::real_valued);
}

void require_state_shape(const DMState& state) {
  const GridSpec& g = state.potential[0].spec();
  if (g.value_width != 1) throw std::invalid_argument("dm state: potentials must be scalar");
  for (const std::array<Field, 2>* block :
       {&state.potential, &state.potential_dt, &state.potential_dx})
    for (const Field& f : *block)
      if (!f.spec().same_grid(g) || f.spec().value_width != 1)
        throw std::invalid_argument("dm state: potential blocks disagree");
  for (const Species& s : state.species) {
    if (s.spinor.spec().value_width != 2 || !s.spinor.spec().same_grid(g))
      throw std::invalid_argument("dm state: spinors must be width 2 on the potential grid");
    if (s.mass != 0.0) throw std::invalid_argument("dm state: only massless species supported");
  }
}

// sum_l weight_l * psi_l^* M psi_l as a real scalar field
Field current_density(const DMState& state, const Mat2& m, std::span<const double> weights) {
  const GridSpec out_spec = scalar_real_spec(state.potential[0].spec());
  Field acc(out_spec);
  const std::array<cdouble, 4> mm = as_array(m);
  for (std::size_t l = 0; l < state.species.size(); ++l) {
    const double w = weights[l];
    if (w == 0.0) continue;
    const Field& psi = state.species[l].spinor;
    Field d = nodewise(out_spec, {&psi}, [&mm, w](const double*, const cdouble* const* in,
                                                  cdouble* out) {
      const cdouble a = in[0][0], b = in[0][1];
      cdouble v = std::conj(a) * (mm[0] * a + mm[2] * b) + std::conj(b) * (mm[1] * a + mm[3] * b);
      out[0] = w * v.real();
    });
    acc += d;
  }
  acc.symmetrize_real();
  return acc;
}

Field antiderivative(const Field& f) {
  Field out = f;
  std::span<cdouble> c = out.coefficients_mut();
  const GridSpec& spec = out.spec();
  for (int k = 0; k < spec.modes_per_axis; ++k) {
    int xi = spec.freq_of(k);
    c[static_cast<std::size_t>(k)] =
        xi == 0 ? cdouble(0.0) : c[static_cast<std::size_t>(k)] / cdouble(0.0, xi);
  }
  return out;
}

constexpr const char* kMagic = "dm_state v1";

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw ConfigError("dm state line " + std::to_string(line) + ": " + msg);
}

}  // namespace

CliffordRep standard_rep() {
  CliffordRep r;
  r.gamma0 << 0, 1, 1, 0;
  r.gamma1 << 0, 1, -1, 0;
  r.pairing = r.gamma0;
  return r;
}

RepReport validate_rep(const CliffordRep& rep) {
  RepReport rp;
  const Mat2 I = Mat2::Identity();
  const Mat2& g0 = rep.gamma0;
  const Mat2& g1 = rep.gamma1;
  const Mat2& H = rep.pairing;
  rp.clifford_defect = std::max({max_abs(g0 * g0 - I), max_abs(g1 * g1 + I),
                                 max_abs(g0 * g1 + g1 * g0)});
  const Mat2 m0 = H * g0;
  const Mat2 m1 = H * g1;
  rp.pairing_defect = std::max({max_abs(H - Mat2(H.adjoint())),
                                max_abs(m0 - Mat2(m0.adjoint())),
                                max_abs(m1 - Mat2(m1.adjoint()))});
  Eigen::SelfAdjointEigenSolver<Mat2> es(Mat2(0.5 * (m0 + Mat2(m0.adjoint()))));
  rp.beta_min_eigenvalue = es.eigenvalues().minCoeff();
  for (const Vec2& s : probe_spinors()) {
    cdouble jt = (s.adjoint() * m0 * s)(0, 0);
    cdouble jx = (s.adjoint() * m1 * s)(0, 0);
    rp.current_imag_max =
        std::max({rp.current_imag_max, std::abs(jt.imag()), std::abs(jx.imag())});
  }
  rp.passed = rp.clifford_defect <= 1e-13 && rp.pairing_defect <= 1e-13 &&
              rp.beta_min_eigenvalue > 0.0 && rp.current_imag_max <= 1e-13;
  std::ostringstream os;
  os << "clifford defect " << rp.clifford_defect << ", pairing defect " << rp.pairing_defect
     << ", beta min eigenvalue " << rp.beta_min_eigenvalue << ", current imag "
     << rp.current_imag_max;
  rp.detail = os.str();
  return rp;
}

Field pack_dm_state(const DMState& state) {
  require_state_shape(state);
  const GridSpec& g = state.potential[0].spec();
  const int n = static_cast<int>(state.species.size());
  Field out(g.with_width(2 * n + 6, ScalarKind::complex_valued));
  std::span<cdouble> dst = out.coefficients_mut();
  const std::int64_t lat = out.lattice_size();
  auto copy_component = [&](const Field& src, int src_c, int dst_c) {
    std::span<const cdouble> s = src.coefficients();
    std::copy_n(s.begin() + src_c * lat, lat, dst.begin() + dst_c * lat);
  };
  for (int l = 0; l < n; ++l) {
    copy_component(state.species[l].spinor, 0, 2 * l);
    copy_component(state.species[l].spinor, 1, 2 * l + 1);
  }
  const int p = 2 * n;
  for (int c = 0; c < 2; ++c) {
    copy_component(state.potential[c], 0, p + c);
    copy_component(state.potential_dt[c], 0, p + 2 + c);
    copy_component(state.potential_dx[c], 0, p + 4 + c);
  }
  return out;
}

DMState unpack_dm_state(const Field& packed, std::span<const double> charges) {
  const int n = static_cast<int>(charges.size());
  if (packed.width() != 2 * n + 6)
    throw std::invalid_argument("unpack_dm_state: width does not match the charge list");
  const GridSpec grid{packed.spec().dim, packed.spec().modes_per_axis, 1,
                      ScalarKind::real_valued};
  const std::int64_t lat = packed.lattice_size();
  std::span<const cdouble> src = packed.coefficients();
  auto take_scalar = [&](int c, bool real_kind) {
    Field f(real_kind ? grid : grid.with_width(1, ScalarKind::complex_valued));
    std::copy_n(src.begin() + c * lat, lat, f.coefficients_mut().begin());
    if (real_kind) f.symmetrize_real();
    return f;
  };
  DMState out{{},
              {take_scalar(2 * n, true), take_scalar(2 * n + 1, true)},
              {take_scalar(2 * n + 2, true), take_scalar(2 * n + 3, true)},
              {take_scalar(2 * n + 4, true), take_scalar(2 * n + 5, true)}};
  out.species.reserve(n);
  for (int l = 0; l < n; ++l) {
    Species s;
    s.charge_mu = charges[l];
    s.spinor = Field(grid.with_width(2, ScalarKind::complex_valued));
    std::span<cdouble> d = s.spinor.coefficients_mut();
    std::copy_n(src.begin() + (2 * l) * lat, lat, d.begin());
    std::copy_n(src.begin() + (2 * l + 1) * lat, lat, d.begin() + lat);
    out.species.push_back(std::move(s));
  }
  return out;
}

HyperbolicSystem build_dm_system(std::span<const double> charges, const CliffordRep& rep) {
  RepReport rp = validate_rep(rep);
  if (!rp.passed) throw std::invalid_argument("build_dm_system: bad rep: " + rp.detail);
  const int n = static_cast<int>(charges.size());
  const int w = 2 * n + 6;
  const int p = 2 * n;
  const Mat2 m0 = rep.pairing * rep.gamma0;
  const Mat2 m1 = rep.pairing * rep.gamma1;
  const std::array<cdouble, 4> m0a = as_array(m0);
  const std::array<cdouble, 4> m1a = as_array(m1);
  const bool identity_a0 = max_abs(m0 - Mat2::Identity()) <= 1e-15;

  std::vector<cdouble> a1(static_cast<std::size_t>(w) * w, cdouble(0.0));
  auto at = [w](std::vector<cdouble>& m, int r, int c) -> cdouble& {
    return m[static_cast<std::size_t>(r) + static_cast<std::size_t>(w) * c];
  };
  for (int l = 0; l < n; ++l)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) at(a1, 2 * l + r, 2 * l + c) = m1a[c * 2 + r];
  for (int c = 0; c < 2; ++c) {
    at(a1, p + 2 + c, p + 4 + c) = 1.0;  // d/dt At' = d/dx A'
    at(a1, p + 4 + c, p + 2 + c) = 1.0;  // d/dt A'  = d/dx At'
  }

  HyperbolicSystem sys;
  sys.dim = 1;
  sys.width = w;
  sys.semilinear = true;
  sys.punctured = true;
  sys.positivity_floor = identity_a0 ? 1.0 : std::min(1.0, rp.beta_min_eigenvalue);
  sys.a_spatial.resize(1);
  sys.a_spatial[0] = [a1](const CoefficientContext&, cdouble* out) {
    std::copy(a1.begin(), a1.end(), out);
  };
  if (!identity_a0) {
    std::vector<cdouble> a0(static_cast<std::size_t>(w) * w, cdouble(0.0));
    for (int l = 0; l < n; ++l)
      for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 2; ++r) at(a0, 2 * l + r, 2 * l + c) = m0a[c * 2 + r];
    for (int c = 0; c < 6; ++c) at(a0, p + c, p + c) = 1.0;
    sys.a0 = [a0](const CoefficientContext&, cdouble* out) {
      std::copy(a0.begin(), a0.end(), out);
    };
  }

  std::vector<double> mu(charges.begin(), charges.end());
  sys.source = [mu, m0a, m1a, n, p](const CoefficientContext& ctx, cdouble* out) {
    const cdouble at_v = ctx.u[p];
    const cdouble ax_v = ctx.u[p + 1];
    double jt = 0.0, jx = 0.0;
    for (int l = 0; l < n; ++l) {
      const cdouble a = ctx.u[2 * l], b = ctx.u[2 * l + 1];
      const cdouble coupling = cdouble(0.0, mu[l]);
      // i mu (A_x H g1 - A_t H g0) psi
      out[2 * l] = coupling * (ax_v * (m1a[0] * a + m1a[2] * b) -
                               at_v * (m0a[0] * a + m0a[2] * b));
      out[2 * l + 1] = coupling * (ax_v * (m1a[1] * a + m1a[3] * b) -
                                   at_v * (m0a[1] * a + m0a[3] * b));
      const cdouble d0 = std::conj(a) * (m0a[0] * a + m0a[2] * b) +
                         std::conj(b) * (m0a[1] * a + m0a[3] * b);
      const cdouble d1 = std::conj(a) * (m1a[0] * a + m1a[2] * b) +
                         std::conj(b) * (m1a[1] * a + m1a[3] * b);
      jt += mu[l] * d0.real();
      jx += mu[l] * d1.real();
    }
    out[p] = ctx.u[p + 2];
    out[p + 1] = ctx.u[p + 3];
    out[p + 2] = jt;
    out[p + 3] = jx;
    out[p + 4] = 0.0;
    out[p + 5] = 0.0;
  };
  return sys;
}

double total_charge(const DMState& state, const CliffordRep& rep) {
  require_state_shape(state);
  if (state.species.empty()) return 0.0;
  std::vector<double> mu;
  mu.reserve(state.species.size());
  for (const Species& s : state.species) mu.push_back(s.charge_mu);
  Field d = current_density(state, rep.pairing * rep.gamma0, mu);
  return mean_integral(d).real();
}

double species_norm(const Species& s, const CliffordRep& rep) {
  DMState tmp;
  tmp.species.push_back(Species{1.0, 0.0, s.spinor});
  GridSpec g = scalar_real_spec(s.spinor.spec());
  tmp.potential = {Field(g), Field(g)};
  tmp.potential_dt = {Field(g), Field(g)};
  tmp.potential_dx = {Field(g), Field(g)};
  return total_charge(tmp, rep);
}

std::pair<Field, double> lorenz_residual(const DMState& state) {
  require_state_shape(state);
  Field r = state.potential_dt[0] - state.potential_dx[1];
  double s = sup_norm(r);
  return {std::move(r), s};
}

std::array<Field, 2> constraint_residual_fields(const DMState& state, const CliffordRep& rep) {
  require_state_shape(state);
  Field r1 = state.potential_dt[0] - derivative(state.potential[1], 0);
  std::vector<int> two{2};
  Field r2 = partial(state.potential[0], two) - derivative(state.potential_dt[1], 0);
  std::vector<double> mu;
  mu.reserve(state.species.size());
  for (const Species& s : state.species) mu.push_back(s.charge_mu);
  if (!state.species.empty()) r2 += current_density(state, rep.pairing * rep.gamma0, mu);
  return {std::move(r1), std::move(r2)};
}

std::pair<double, double> constraint_residual_1p1(const DMState& state,
                                                  const CliffordRep& rep) {
  std::array<Field, 2> r = constraint_residual_fields(state, rep);
  return {sup_norm(r[0]), sup_norm(r[1])};
}

DMState gauge_transform(const DMState& state, const Field& f, const Field& f_dt,
                        const CliffordRep& rep) {
  require_state_shape(state);
  RepReport rp = validate_rep(rep);
  if (!rp.passed) throw std::invalid_argument("gauge_transform: bad rep: " + rp.detail);
  const GridSpec& g = state.potential[0].spec();
  if (!f.spec().same_grid(g) || f.spec().value_width != 1 || !f_dt.spec().same_grid(g) ||
      f_dt.spec().value_width != 1)
    throw std::invalid_argument("gauge_transform: f, f_dt must be scalar on the state grid");

  DMState out = state;
  for (Species& s : out.species) {
    const double mu = s.charge_mu;
    s.spinor = nodewise(s.spinor.spec(), {&s.spinor, &f},
                        [mu](const double*, const cdouble* const* in, cdouble* o) {
                          const cdouble phase = std::exp(cdouble(0.0, -mu) * in[1][0]);
                          o[0] = phase * in[0][0];
                          o[1] = phase * in[0][1];
                        });
  }
  Field fx = derivative(f, 0);
  std::vector<int> two{2};
  Field fxx = partial(f, two);  // wave continuation of f_tt
  out.potential[0] += f_dt;
  out.potential[1] += fx;
  out.potential_dt[0] += fxx;
  out.potential_dt[1] += derivative(f_dt, 0);
  out.potential_dx[0] += derivative(f_dt, 0);
  out.potential_dx[1] += fxx;
  return out;
}

DMTrajectory evolve_dm(const DMState& initial, double t_end, const SolveControls& ctl,
                       const Mollifier& m, const CliffordRep& rep) {
  require_state_shape(initial);
  DMTrajectory out;
  out.charges.reserve(initial.species.size());
  for (const Species& s : initial.species) out.charges.push_back(s.charge_mu);
  HyperbolicSystem sys = build_dm_system(out.charges, rep);
  Field u0 = pack_dm_state(initial);
  out.base = integrate(sys, u0, m, t_end, ctl);
  const std::size_t snaps = out.base.states.size();
  out.charge_log.reserve(snaps);
  out.species_norm_log.reserve(snaps);
  out.lorenz_sup_log.reserve(snaps);
  for (std::size_t i = 0; i < snaps; ++i) {
    DMState s = unpack_dm_state(out.base.states[i], out.charges);
    out.charge_log.push_back(total_charge(s, rep));
    std::vector<double> norms;
    norms.reserve(s.species.size());
    for (const Species& sp : s.species) norms.push_back(species_norm(sp, rep));
    out.species_norm_log.push_back(std::move(norms));
    out.lorenz_sup_log.push_back(lorenz_residual(s).second);
  }
  return out;
}

DMState neutral_demo_state(int modes, double amplitude) {
  const GridSpec sspec{1, modes, 2, ScalarKind::complex_valued};
  const GridSpec pspec{1, modes, 1, ScalarKind::real_valued};
  const double a = amplitude;

  Field psi1(sspec);
  psi1.set_mode(0, 1, a * cdouble(0.4, -0.3));
  psi1.set_mode(0, -2, a * cdouble(0.0, 0.2));
  psi1.set_mode(1, 0, a * cdouble(0.3, 0.0));
  psi1.set_mode(1, 2, a * cdouble(-0.25, 0.1));

  // quarter-turn translate: same L2 norm, different pointwise density
  Field psi2(sspec);
  const int B = sspec.band_limit();
  for (int c = 0; c < 2; ++c)
    for (int xi = -B; xi <= B; ++xi) {
      cdouble v = psi1.mode(c, xi);
      if (v != cdouble(0.0)) psi2.set_mode(c, xi, v * std::polar(1.0, -xi * tau / 4.0));
    }

  DMState st;
  st.species.push_back(Species{1.0, 0.0, std::move(psi1)});
  st.species.push_back(Species{-1.0, 0.0, std::move(psi2)});

  Field ax(pspec);
  ax.set_mode(0, 1, cdouble(0.0, -0.5 * a));
  ax.set_mode(0, -1, cdouble(0.0, 0.5 * a));  // a sin x
  Field zero(pspec);
  st.potential = {zero, ax};
  // r1 = 0: At' := d/dx A_x. r2 = 0: Ax' := antiderivative of J_t.
  std::vector<double> mu{1.0, -1.0};
  Field jt = current_density(st, standard_rep().pairing * standard_rep().gamma0, mu);
  st.potential_dt = {derivative(ax, 0), antiderivative(jt)};
  st.potential_dx = {zero, derivative(ax, 0)};
  return st;
}

void save_dm_state(const DMState& state, std::ostream& os) {
  require_state_shape(state);
  const GridSpec& g = state.potential[0].spec();
  os << kMagic << "\n";
  os << "modes " << g.modes_per_axis << "\n";
  os << "species " << state.species.size() << "\n";
  for (std::size_t l = 0; l < state.species.size(); ++l)
    os << "mu " << l << " " << format_real(state.species[l].charge_mu) << "\n";
  const int B = g.band_limit();
  auto dump = [&](const std::string& tag, const Field& f, int c) {
    for (int xi = -B; xi <= B; ++xi) {
      cdouble v = f.mode(c, xi);
      if (v == cdouble(0.0)) continue;
      os << tag << " " << xi << " " << format_real(v.real()) << " " << format_real(v.imag())
         << "\n";
    }
  };
  for (std::size_t l = 0; l < state.species.size(); ++l)
    for (int c = 0; c < 2; ++c)
      dump("psi " + std::to_string(l) + " " + std::to_string(c), state.species[l].spinor, c);
  const char* comp[2] = {"t", "x"};
  for (int c = 0; c < 2; ++c) {
    dump(std::string("pot ") + comp[c], state.potential[c], 0);
    dump(std::string("pot_dt ") + comp[c], state.potential_dt[c], 0);
    dump(std::string("pot_dx ") + comp[c], state.potential_dx[c], 0);
  }
  os << "end\n";
}

DMState load_dm_state(std::istream& is) {
  std::string line;
  int lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(is, line)) {
      ++lineno;
      std::size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      std::size_t stop = line.find_last_not_of(" \t\r");
      out = line.substr(start, stop - start + 1);
      return true;
    }
    return false;
  };

  std::string l;
  if (!next_line(l) || l != kMagic) parse_fail(lineno, "missing dm_state header");
  int modes = 0;
  int nspecies = -1;
  bool saw_end = false;
  DMState st;
  std::vector<bool> mu_seen;

  auto grids_ready = [&] { return modes > 0 && nspecies >= 0; };
  auto ensure_ready = [&](const std::string& what) {
    if (!grids_ready()) parse_fail(lineno, what + " before modes/species header");
  };

  while (next_line(l)) {
    std::istringstream ls(l);
    std::string key;
    ls >> key;
    if (key == "end") {
      saw_end = true;
      break;
    }
    if (key == "modes") {
      if (modes > 0) parse_fail(lineno, "duplicate modes");
      if (!(ls >> modes) || modes <= 0) parse_fail(lineno, "bad modes value");
      continue;
    }
    if (key == "species") {
      if (nspecies >= 0) parse_fail(lineno, "duplicate species count");
      if (!(ls >> nspecies) || nspecies < 0) parse_fail(lineno, "bad species count");
      if (modes <= 0) parse_fail(lineno, "species before modes");
      const GridSpec sspec{1, modes, 2, ScalarKind::complex_valued};
      const GridSpec pspec{1, modes, 1, ScalarKind::real_valued};
      for (int i = 0; i < nspecies; ++i) st.species.push_back(Species{0.0, 0.0, Field(sspec)});
      mu_seen.assign(static_cast<std::size_t>(nspecies), false);
      st.potential = {Field(pspec), Field(pspec)};
      st.potential_dt = {Field(pspec), Field(pspec)};
      st.potential_dx = {Field(pspec), Field(pspec)};
      continue;
    }
    if (key == "mu") {
      ensure_ready("mu");
      int idx = -1;
      double v = 0.0;
      if (!(ls >> idx >> v) || idx < 0 || idx >= nspecies) parse_fail(lineno, "bad mu entry");
      if (mu_seen[static_cast<std::size_t>(idx)]) parse_fail(lineno, "duplicate mu entry");
      mu_seen[static_cast<std::size_t>(idx)] = true;
      st.species[static_cast<std::size_t>(idx)].charge_mu = v;
      continue;
    }
    if (key == "psi") {
      ensure_ready("psi");
      int idx = -1, c = -1, xi = 0;
      double re = 0.0, im = 0.0;
      if (!(ls >> idx >> c >> xi >> re >> im) || idx < 0 || idx >= nspecies || c < 0 || c > 1)
        parse_fail(lineno, "bad psi entry");
      try {
        st.species[static_cast<std::size_t>(idx)].spinor.set_mode(c, xi, {re, im});
      } catch (const std::out_of_range&) {
        parse_fail(lineno, "psi mode outside the band");
      }
      continue;
    }
    if (key == "pot" || key == "pot_dt" || key == "pot_dx") {
      ensure_ready(key);
      std::string comp;
      int xi = 0;
      double re = 0.0, im = 0.0;
      if (!(ls >> comp >> xi >> re >> im) || (comp != "t" && comp != "x"))
        parse_fail(lineno, "bad " + key + " entry");
      const int c = comp == "t" ? 0 : 1;
      auto& block = key == "pot" ? st.potential : key == "pot_dt" ? st.potential_dt
                                                                  : st.potential_dx;
      try {
        block[static_cast<std::size_t>(c)].set_mode(0, xi, {re, im});
      } catch (const std::out_of_range&) {
        parse_fail(lineno, key + " mode outside the band");
      }
      continue;
    }
    parse_fail(lineno, "unknown key '" + key + "'");
  }
  if (!saw_end) parse_fail(lineno, "missing end marker");
  if (!grids_ready()) parse_fail(lineno, "missing modes or species header");
  for (std::array<Field, 2>* block : {&st.potential, &st.potential_dt, &st.potential_dx})
    for (Field& f : *block) f.symmetrize_real();
  require_state_shape(st);
  return st;
}

}  // namespace hypercauchy
