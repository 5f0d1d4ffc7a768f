#include "hypercauchy/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hypercauchy/parallel.hpp"

namespace hypercauchy {
namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric_uniform(std::mt19937_64& rng, double amplitude) {
  return amplitude * (2.0 * unit_uniform(rng) - 1.0);
}

void check_suite(const RandomSuite& s) {
  if (s.count <= 0) throw std::invalid_argument("suite count must be positive");
  if (s.max_degree < 0) throw std::invalid_argument("suite max_degree must be >= 0");
  if (!(s.amplitude >= 0.0)) throw std::invalid_argument("suite amplitude must be >= 0");
  if (s.dim != 1 && s.dim != 2) throw std::invalid_argument("suite dim must be 1 or 2");
}

// One field's coefficients, drawn in a fixed order: dim 1 walks xi = 0..d;
// dim 2 walks xi = 0..d with eta = 0..d at xi = 0 and eta = -d..d otherwise.
// Self-conjugate modes take one draw (real part), the rest take two.
Field draw_field(std::mt19937_64& rng, const RandomSuite& s, const GridSpec& spec) {
  Field f(spec);
  const int d = s.max_degree;
  if (s.dim == 1) {
    for (int xi = 0; xi <= d; ++xi) {
      double re = symmetric_uniform(rng, s.amplitude);
      double im = xi == 0 ? 0.0 : symmetric_uniform(rng, s.amplitude);
      f.set_mode(0, xi, {re, im});
      if (xi > 0) f.set_mode(0, -xi, {re, -im});
    }
  } else {
    for (int xi = 0; xi <= d; ++xi) {
      const int eta_lo = xi == 0 ? 0 : -d;
      for (int eta = eta_lo; eta <= d; ++eta) {
        double re = symmetric_uniform(rng, s.amplitude);
        double im = (xi == 0 && eta == 0) ? 0.0 : symmetric_uniform(rng, s.amplitude);
        f.set_mode(0, xi, eta, {re, im});
        if (xi != 0 || eta != 0) f.set_mode(0, -xi, -eta, {re, -im});
      }
    }
  }
  return f;
}

// Zero-pad f's spectrum onto a finer grid of the same dimension.
Field regrid(const Field& f, int modes) {
  const GridSpec& src = f.spec();
  GridSpec dst{src.dim, modes, src.value_width, src.scalar_kind};
  if (dst.band_limit() < src.band_limit())
    throw std::invalid_argument("regrid: target band too small");
  Field out(dst);
  const int B = src.band_limit();
  for (int c = 0; c < src.value_width; ++c) {
    if (src.dim == 1) {
      for (int xi = -B; xi <= B; ++xi) out.set_mode(c, xi, f.mode(c, xi));
    } else {
      for (int xi = -B; xi <= B; ++xi)
        for (int eta = -B; eta <= B; ++eta) out.set_mode(c, xi, eta, f.mode(c, xi, eta));
    }
  }
  return out;
}

std::vector<std::vector<int>> alphas_up_to(int dim, int k) {
  std::vector<std::vector<int>> out;
  if (dim == 1) {
    for (int a = 0; a <= k; ++a) out.push_back({a});
  } else {
    for (int total = 0; total <= k; ++total)
      for (int a1 = 0; a1 <= total; ++a1) out.push_back({a1, total - a1});
  }
  return out;
}

double binomial(int n, int r) {
  double v = 1.0;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

// Frobenius norm of the m-th total derivative tensor: in dim 2 the partial
// d^{(a, m-a)} appears binom(m, a) times among the m-tuples of axes.
double grad_m_norm(const Field& f, int m) {
  if (m == 0) return l2_norm(f);
  double sq = 0.0;
  if (f.spec().dim == 1) {
    std::vector<int> alpha{m};
    double n = l2_norm(partial(f, alpha));
    sq = n * n;
  } else {
    for (int a = 0; a <= m; ++a) {
      std::vector<int> alpha{a, m - a};
      double n = l2_norm(partial(f, alpha));
      sq += binomial(m, a) * n * n;
    }
  }
  return std::sqrt(sq);
}

// Pointwise Euclidean sup of the gradient vector, sampled on the grid.
double grad_sup(const Field& f) {
  const int dim = f.spec().dim;
  std::vector<std::shared_ptr<const std::vector<cdouble>>> nodes;
  nodes.reserve(dim);
  for (int j = 0; j < dim; ++j) nodes.push_back(derivative(f, j).nodes());
  double best = 0.0;
  const std::size_t n = nodes[0]->size();
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (int j = 0; j < dim; ++j) sq += std::norm((*nodes[j])[i]);
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

double grad_sobolev(const Field& f, int k) {
  double sq = 0.0;
  for (int j = 0; j < f.spec().dim; ++j) {
    double n = sobolev_norm(derivative(f, j), k);
    sq += n * n;
  }
  return std::sqrt(sq);
}

Field compose(const Field& f, const SmoothComposer& composer) {
  Field out = nodewise(f.spec(), {&f}, [&](const double*, const cdouble* const* in, cdouble* o) {
    o[0] = composer.map(in[0][0].real());
  });
  if (f.spec().scalar_kind == ScalarKind::real_valued) out.symmetrize_real();
  return out;
}

constexpr double kZeroGuard = 1e-12;

double safe_ratio(double num, double den, double scale) {
  if (den > kZeroGuard * scale) return num / den;
  if (num <= kZeroGuard * scale) return 0.0;
  return std::numeric_limits<double>::infinity();
}

double moser_ratio(MoserVariant variant, const Field& f, const Field& g, int k,
                   const SmoothComposer* composer) {
  switch (variant) {
    case MoserVariant::first: {
      double num = sobolev_norm(product(f, g), k);
      double den = sup_norm(f) * sobolev_norm(g, k) + sobolev_norm(f, k) * sup_norm(g);
      return safe_ratio(num, den, 1.0 + num);
    }
    case MoserVariant::second: {
      double den = grad_sobolev(f, k - 1) * sup_norm(g) + grad_sup(f) * sobolev_norm(g, k - 1);
      Field fg = product(f, g);
      double best = 0.0;
      for (const auto& alpha : alphas_up_to(f.spec().dim, k)) {
        Field lhs = partial(fg, alpha) - product(f, partial(g, alpha));
        double num = l2_norm(lhs);
        best = std::max(best, safe_ratio(num, den, 1.0 + sup_norm(f) * sobolev_norm(g, k)));
      }
      return best;
    }
    case MoserVariant::third: {
      Field Ff = compose(f, *composer);
      double best = 0.0;
      for (const auto& alpha : alphas_up_to(f.spec().dim, k)) {
        int m = 0;
        for (int a : alpha) m += a;
        double num = l2_norm(partial(Ff, alpha));
        double den = grad_m_norm(f, m);
        best = std::max(best, safe_ratio(num, den, 1.0 + num));
      }
      return best;
    }
  }
  throw std::logic_error("unreachable");
}

void finish_report(RatioReport& rep, std::size_t base_rows) {
  double mx = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    double r = rep.rows[i].ratio;
    if (i < base_rows)
      mx = std::max(mx, r);
    else
      mr = std::max(mr, r);
  }
  rep.max_ratio = mx;
  rep.max_ratio_refined = mr;
  rep.refinement_change = mx > 0.0 ? std::abs(mx - mr) / mx : std::abs(mr);
}

double commutator_ratio(CommutatorForm form, const Field& a, const Field& v,
                        const Mollifier& mol, double eps, double a_c0, double a_c1,
                        double* raw_gap) {
  const int dim = a.spec().dim;
  double vnorm = l2_norm(v);
  double num = 0.0;
  if (form == CommutatorForm::derivative) {
    for (int j = 0; j < dim; ++j) {
      Field w = derivative(v, j);
      Field comm = product(a, mollify(w, mol)) - mollify(product(a, w), mol);
      num = std::max(num, l2_norm(comm));
    }
  } else {
    Field comm = product(a, mollify(v, mol)) - mollify(product(a, v), mol);
    num = form == CommutatorForm::first_sobolev ? sobolev_norm(comm, 1) : l2_norm(comm);
  }
  double scale = 1.0 + vnorm;
  switch (form) {
    case CommutatorForm::zeroth:
      if (raw_gap) *raw_gap = safe_ratio(num, vnorm, scale);
      return safe_ratio(num, a_c0 * vnorm, scale);
    case CommutatorForm::lipschitz:
      if (raw_gap) *raw_gap = safe_ratio(num, a_c1 * vnorm, scale);
      return safe_ratio(num, eps * a_c1 * vnorm, scale);
    case CommutatorForm::first_sobolev:
    case CommutatorForm::derivative:
      if (raw_gap) *raw_gap = safe_ratio(num, a_c1 * vnorm, scale);
      return safe_ratio(num, a_c1 * vnorm, scale);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::vector<Field> make_suite(const RandomSuite& suite, int fields_per_member,
                              int modes_per_axis) {
  check_suite(suite);
  if (fields_per_member <= 0)
    throw std::invalid_argument("fields_per_member must be positive");
  GridSpec spec{suite.dim, modes_per_axis, 1, ScalarKind::real_valued};
  if (spec.band_limit() < suite.max_degree)
    throw std::invalid_argument("suite max_degree exceeds the grid band");
  std::mt19937_64 rng(suite.seed);
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(suite.count) * fields_per_member);
  for (int m = 0; m < suite.count; ++m)
    for (int j = 0; j < fields_per_member; ++j) out.push_back(draw_field(rng, suite, spec));
  return out;
}

int default_suite_modes(const RandomSuite& suite) {
  check_suite(suite);
  const int need = 2 * suite.max_degree + 6;
  int m = 64;
  while (m / 2 - 1 < need) m *= 2;
  return m;
}

SmoothComposer composer_identity() {
  return {"identity", [](double u) { return u; }};
}
SmoothComposer composer_cube() {
  return {"cube", [](double u) { return u * u * u; }};
}
SmoothComposer composer_sine() {
  return {"sine", [](double u) { return std::sin(u); }};
}
SmoothComposer composer_expm1() {
  return {"expm1", [](double u) { return std::expm1(u); }};
}

SmoothComposer find_composer(const std::string& name) {
  if (name == "identity") return composer_identity();
  if (name == "cube") return composer_cube();
  if (name == "sine") return composer_sine();
  if (name == "expm1") return composer_expm1();
  throw std::invalid_argument("unknown composer: " + name);
}

RatioReport check_moser(MoserVariant variant, std::span<const Field> fs,
                        std::span<const Field> gs, int k,
                        const SmoothComposer* composer) {
  if (fs.empty()) throw std::invalid_argument("check_moser: empty field list");
  const bool needs_g = variant != MoserVariant::third;
  if (needs_g && gs.size() != fs.size())
    throw std::invalid_argument("check_moser: fs and gs must pair up");
  if (variant == MoserVariant::third) {
    if (!composer) throw std::invalid_argument("check_moser: third variant needs a composer");
    if (std::abs(composer->map(0.0)) > 1e-14)
      throw std::invalid_argument("check_moser: composer must vanish at zero");
  }
  if (k < 0) throw std::invalid_argument("check_moser: k must be >= 0");
  if (variant == MoserVariant::second && k < 1)
    throw std::invalid_argument("check_moser: second variant needs k >= 1");
  const GridSpec& spec = fs[0].spec();
  if (spec.value_width != 1)
    throw std::invalid_argument("check_moser: fields must be scalar");
  for (const Field& f : fs)
    if (!f.spec().same_grid(spec)) throw std::invalid_argument("check_moser: grid mismatch");
  for (const Field& g : gs)
    if (!g.spec().same_grid(spec)) throw std::invalid_argument("check_moser: grid mismatch");

  const int n = static_cast<int>(fs.size());
  const int base_modes = spec.modes_per_axis;
  const int fine_modes = 2 * base_modes;
  RatioReport rep;
  rep.rows.resize(static_cast<std::size_t>(2) * n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const Field& f = fs[i];
    const Field* g = needs_g ? &gs[i] : &fs[i];
    rep.rows[i] = {static_cast<int>(i), 0.0, base_modes,
                   moser_ratio(variant, f, *g, k, composer)};
    Field ff = regrid(f, fine_modes);
    Field gf = needs_g ? regrid(*g, fine_modes) : ff;
    rep.rows[n + i] = {static_cast<int>(i), 0.0, fine_modes,
                       moser_ratio(variant, ff, gf, k, composer)};
  });
  finish_report(rep, static_cast<std::size_t>(n));
  return rep;
}

RatioReport check_moser(MoserVariant variant, const RandomSuite& suite, int k,
                        const SmoothComposer* composer) {
  const int per = variant == MoserVariant::third ? 1 : 2;
  std::vector<Field> fields = make_suite(suite, per, default_suite_modes(suite));
  std::vector<Field> fs, gs;
  fs.reserve(suite.count);
  gs.reserve(suite.count);
  for (int i = 0; i < suite.count; ++i) {
    fs.push_back(std::move(fields[static_cast<std::size_t>(i) * per]));
    if (per == 2) gs.push_back(std::move(fields[static_cast<std::size_t>(i) * per + 1]));
  }
  return check_moser(variant, fs, gs, k, composer);
}

RatioReport check_commutator(CommutatorForm form, const Field& a_field,
                             std::span<const Field> test_fields,
                             std::span<const double> eps_schedule) {
  if (test_fields.empty()) throw std::invalid_argument("check_commutator: empty field list");
  if (eps_schedule.empty()) throw std::invalid_argument("check_commutator: empty schedule");
  for (double e : eps_schedule)
    if (!(e >= 0.0)) throw std::invalid_argument("check_commutator: eps must be >= 0");
  const GridSpec& spec = a_field.spec();
  if (spec.value_width != 1)
    throw std::invalid_argument("check_commutator: a_field must be scalar");
  for (const Field& v : test_fields)
    if (!(v.spec() == spec))
      throw std::invalid_argument(
          "check_commutator: test fields must share a_field's grid spec");

  const int n = static_cast<int>(test_fields.size());
  const int ne = static_cast<int>(eps_schedule.size());
  const int base_modes = spec.modes_per_axis;
  const int fine_modes = 2 * base_modes;
  const double a_c0 = sup_norm(a_field);
  const double a_c1 = c1_norm(a_field);
  Field a_fine = regrid(a_field, fine_modes);

  std::vector<Mollifier> mols;
  mols.reserve(eps_schedule.size());
  for (double e : eps_schedule) mols.push_back(e == 0.0 ? Mollifier() : Mollifier(e));

  RatioReport rep;
  rep.rows.resize(static_cast<std::size_t>(2) * n * ne);
  // raw gaps at base resolution feed the eps scaling fit
  std::vector<double> gaps(static_cast<std::size_t>(n) * ne);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Field v_fine = regrid(test_fields[i], fine_modes);
    for (int e = 0; e < ne; ++e) {
      double eps = eps_schedule[e];
      const Mollifier& mol = mols[static_cast<std::size_t>(e)];
      std::size_t r = i * ne + e;
      double raw = 0.0;
      rep.rows[r] = {static_cast<int>(i), eps, base_modes,
                     commutator_ratio(form, a_field, test_fields[i], mol, eps, a_c0, a_c1, &raw)};
      gaps[r] = raw;
      rep.rows[static_cast<std::size_t>(n) * ne + r] = {
          static_cast<int>(i), eps, fine_modes,
          commutator_ratio(form, a_fine, v_fine, mol, eps, a_c0, a_c1, nullptr)};
    }
  });
  finish_report(rep, static_cast<std::size_t>(n) * ne);

  if (form == CommutatorForm::lipschitz) {
    // slope of log max-gap against log eps over the schedule
    std::vector<double> lx, ly;
    for (int e = 0; e < ne; ++e) {
      double g = 0.0;
      for (int i = 0; i < n; ++i) g = std::max(g, gaps[static_cast<std::size_t>(i) * ne + e]);
      if (eps_schedule[e] > 0.0 && g > 0.0) {
        lx.push_back(std::log(eps_schedule[e]));
        ly.push_back(std::log(g));
      }
    }
    if (lx.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
      }
      mx /= static_cast<double>(lx.size());
      my /= static_cast<double>(lx.size());
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
      }
      if (sxx > 0.0) {
        rep.lipschitz_slope = sxy / sxx;
        rep.has_slope = true;
      }
    }
  }
  return rep;
}

RatioReport check_commutator(CommutatorForm form, const Field& a_field,
                             const RandomSuite& suite,
                             std::span<const double> eps_schedule) {
  if (suite.dim != a_field.spec().dim)
    throw std::invalid_argument("check_commutator: suite dim must match a_field");
  std::vector<Field> fields = make_suite(suite, 1, a_field.spec().modes_per_axis);
  return check_commutator(form, a_field, fields, eps_schedule);
}

}  // namespace hypercauchy
