#include "hypercauchy/grid.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "fft.hpp"

namespace hypercauchy {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double tau_pow(int dim) { return dim == 2 ? tau * tau : tau; }

}  // namespace

void validate_spec(const GridSpec& spec) {
  if (spec.dim != 1 && spec.dim != 2)
    throw std::invalid_argument("GridSpec: dim must be 1 or 2");
  if (spec.modes_per_axis < 8 || !power_of_two(spec.modes_per_axis))
    throw std::invalid_argument("GridSpec: modes_per_axis must be a power of two >= 8");
  if (spec.value_width < 1)
    throw std::invalid_argument("GridSpec: value_width must be positive");
}

Field::Field(const GridSpec& spec) : spec_(spec) {
  validate_spec(spec);
  lat_ = spec.lattice_size();
  coef_.assign(static_cast<std::size_t>(lat_) * spec.value_width, cdouble{});
}

Field Field::from_nodes(const GridSpec& spec, std::span<const cdouble> values) {
  Field f(spec);
  if (std::ssize(values) != f.lat_ * spec.value_width)
    throw std::invalid_argument("from_nodes: sample count mismatch");
  const int w = spec.value_width;
  std::vector<cdouble> scratch(static_cast<std::size_t>(f.lat_));
  const double scale = 1.0 / static_cast<double>(f.lat_);
  for (int c = 0; c < w; ++c) {
    for (std::int64_t n = 0; n < f.lat_; ++n) scratch[n] = values[n * w + c];
    detail::dft(spec.dim, spec.modes_per_axis, scratch.data(), true);
    for (std::int64_t k = 0; k < f.lat_; ++k) f.coef_[c * f.lat_ + k] = scratch[k] * scale;
  }
  f.project_band();
  if (spec.scalar_kind == ScalarKind::real_valued) f.symmetrize_real();
  return f;
}

std::span<cdouble> Field::coefficients_mut() {
  cache_store(nullptr);
  return coef_;
}

void Field::set_coef(int c, std::int64_t k, cdouble v) {
  cache_store(nullptr);
  coef_[c * lat_ + k] = v;
}

cdouble Field::mode(int c, int xi) const {
  if (spec_.dim != 1 || !spec_.in_band(xi)) throw std::out_of_range("mode: bad index");
  return coef_[c * lat_ + spec_.index_of(xi)];
}

cdouble Field::mode(int c, int xi, int eta) const {
  if (spec_.dim != 2 || !spec_.in_band(xi) || !spec_.in_band(eta))
    throw std::out_of_range("mode: bad index");
  const int M = spec_.modes_per_axis;
  return coef_[c * lat_ + static_cast<std::int64_t>(spec_.index_of(xi)) * M + spec_.index_of(eta)];
}

void Field::set_mode(int c, int xi, cdouble v) {
  if (spec_.dim != 1 || !spec_.in_band(xi)) throw std::out_of_range("set_mode: bad index");
  set_coef(c, spec_.index_of(xi), v);
}

void Field::set_mode(int c, int xi, int eta, cdouble v) {
  if (spec_.dim != 2 || !spec_.in_band(xi) || !spec_.in_band(eta))
    throw std::out_of_range("set_mode: bad index");
  const int M = spec_.modes_per_axis;
  set_coef(c, static_cast<std::int64_t>(spec_.index_of(xi)) * M + spec_.index_of(eta), v);
}

std::shared_ptr<const std::vector<cdouble>> Field::nodes() const {
  if (auto cached = cache_copy()) return cached;
  const int w = spec_.value_width;
  auto out = std::make_shared<std::vector<cdouble>>(static_cast<std::size_t>(lat_) * w);
  std::vector<cdouble> scratch(static_cast<std::size_t>(lat_));
  for (int c = 0; c < w; ++c) {
    std::copy_n(coef_.begin() + c * lat_, lat_, scratch.begin());
    detail::dft(spec_.dim, spec_.modes_per_axis, scratch.data(), false);
    for (std::int64_t n = 0; n < lat_; ++n) (*out)[n * w + c] = scratch[n];
  }
  std::shared_ptr<const std::vector<cdouble>> result = out;
  cache_store(result);
  return result;
}

void Field::project_band() {
  cache_store(nullptr);
  const int M = spec_.modes_per_axis;
  if (spec_.dim == 1) {
    for (int k = 0; k < M; ++k)
      if (!spec_.in_band(spec_.freq_of(k)))
        for (int c = 0; c < spec_.value_width; ++c) coef_[c * lat_ + k] = 0.0;
  } else {
    for (int kx = 0; kx < M; ++kx)
      for (int ky = 0; ky < M; ++ky)
        if (!spec_.in_band(spec_.freq_of(kx)) || !spec_.in_band(spec_.freq_of(ky)))
          for (int c = 0; c < spec_.value_width; ++c)
            coef_[c * lat_ + static_cast<std::int64_t>(kx) * M + ky] = 0.0;
  }
}

void Field::symmetrize_real() {
  cache_store(nullptr);
  const int M = spec_.modes_per_axis;
  const int B = spec_.band_limit();
  auto pair_up = [&](std::int64_t k, std::int64_t kneg, int c) {
    cdouble a = coef_[c * lat_ + k];
    cdouble b = coef_[c * lat_ + kneg];
    cdouble avg = 0.5 * (a + std::conj(b));
    coef_[c * lat_ + k] = avg;
    coef_[c * lat_ + kneg] = std::conj(avg);
  };
  if (spec_.dim == 1) {
    for (int c = 0; c < spec_.value_width; ++c) {
      coef_[c * lat_] = cdouble(coef_[c * lat_].real(), 0.0);
      for (int xi = 1; xi <= B; ++xi) pair_up(spec_.index_of(xi), spec_.index_of(-xi), c);
    }
  } else {
    auto flat = [&](int xi, int eta) {
      return static_cast<std::int64_t>(spec_.index_of(xi)) * M + spec_.index_of(eta);
    };
    for (int c = 0; c < spec_.value_width; ++c) {
      coef_[c * lat_ + flat(0, 0)] = cdouble(coef_[c * lat_ + flat(0, 0)].real(), 0.0);
      for (int xi = -B; xi <= B; ++xi)
        for (int eta = -B; eta <= B; ++eta) {
          if (xi < 0 || (xi == 0 && eta <= 0)) continue;  // pick one of each +/- pair
          pair_up(flat(xi, eta), flat(-xi, -eta), c);
        }
    }
  }
}

void Field::require_combinable(const Field& o) const {
  if (!(spec_ == o.spec_)) throw std::invalid_argument("field: GridSpec mismatch");
}

Field& Field::operator+=(const Field& o) {
  require_combinable(o);
  cache_store(nullptr);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_combinable(o);
  cache_store(nullptr);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= o.coef_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  cache_store(nullptr);
  for (auto& c : coef_) c *= s;
  return *this;
}

Field& Field::operator*=(cdouble s) {
  cache_store(nullptr);
  for (auto& c : coef_) c *= s;
  return *this;
}

void Field::axpy(double a, const Field& x) {
  require_combinable(x);
  cache_store(nullptr);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += a * x.coef_[i];
}

Field derivative(const Field& f, int axis) {
  const GridSpec& g = f.spec();
  if (axis < 0 || axis >= g.dim) throw std::invalid_argument("derivative: axis out of range");
  Field out = f;
  auto coefs = out.coefficients_mut();
  const int M = g.modes_per_axis;
  const std::int64_t lat = f.lattice_size();
  for (int c = 0; c < g.value_width; ++c) {
    cdouble* block = coefs.data() + c * lat;
    if (g.dim == 1) {
      for (int k = 0; k < M; ++k) block[k] *= cdouble(0.0, g.freq_of(k));
    } else {
      for (int kx = 0; kx < M; ++kx) {
        for (int ky = 0; ky < M; ++ky) {
          int xi = axis == 0 ? g.freq_of(kx) : g.freq_of(ky);
          block[static_cast<std::int64_t>(kx) * M + ky] *= cdouble(0.0, xi);
        }
      }
    }
  }
  return out;
}

Field partial(const Field& f, std::span<const int> alpha) {
  const GridSpec& g = f.spec();
  if (std::ssize(alpha) != g.dim) throw std::invalid_argument("partial: alpha size mismatch");
  Field out = f;
  auto coefs = out.coefficients_mut();
  const int M = g.modes_per_axis;
  const std::int64_t lat = f.lattice_size();
  auto ipow = [](cdouble base, int e) {
    cdouble r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  };
  for (int c = 0; c < g.value_width; ++c) {
    cdouble* block = coefs.data() + c * lat;
    if (g.dim == 1) {
      for (int k = 0; k < M; ++k) block[k] *= ipow(cdouble(0.0, g.freq_of(k)), alpha[0]);
    } else {
      for (int kx = 0; kx < M; ++kx)
        for (int ky = 0; ky < M; ++ky)
          block[static_cast<std::int64_t>(kx) * M + ky] *=
              ipow(cdouble(0.0, g.freq_of(kx)), alpha[0]) *
              ipow(cdouble(0.0, g.freq_of(ky)), alpha[1]);
    }
  }
  return out;
}

double l2_norm(const Field& f) {
  double s = 0.0;
  for (cdouble c : f.coefficients()) s += std::norm(c);
  return std::sqrt(s * tau_pow(f.spec().dim));
}

cdouble l2_inner(const Field& a, const Field& b) {
  if (!(a.spec() == b.spec())) throw std::invalid_argument("l2_inner: GridSpec mismatch");
  cdouble s = 0.0;
  auto ca = a.coefficients();
  auto cb = b.coefficients();
  for (std::size_t i = 0; i < ca.size(); ++i) s += ca[i] * std::conj(cb[i]);
  return s * tau_pow(a.spec().dim);
}

double sobolev_norm(const Field& f, int k) {
  if (k < 0) throw std::invalid_argument("sobolev_norm: k must be >= 0");
  const GridSpec& g = f.spec();
  const int M = g.modes_per_axis;
  const std::int64_t lat = f.lattice_size();
  // weight(xi) = sum over |alpha| <= k of prod_i xi_i^(2 alpha_i)
  std::vector<double> weight(static_cast<std::size_t>(lat), 0.0);
  if (g.dim == 1) {
    for (int kk = 0; kk < M; ++kk) {
      double xi2 = static_cast<double>(g.freq_of(kk)) * g.freq_of(kk);
      double w = 1.0, pw = 1.0;
      for (int a = 1; a <= k; ++a) {
        pw *= xi2;
        w += pw;
      }
      weight[kk] = w;
    }
  } else {
    for (int kx = 0; kx < M; ++kx) {
      double x2 = static_cast<double>(g.freq_of(kx)) * g.freq_of(kx);
      for (int ky = 0; ky < M; ++ky) {
        double y2 = static_cast<double>(g.freq_of(ky)) * g.freq_of(ky);
        double w = 0.0, px = 1.0;
        for (int a = 0; a <= k; ++a) {
          double py = 1.0;
          for (int b = 0; a + b <= k; ++b) {
            w += px * py;
            py *= y2;
          }
          px *= x2;
        }
        weight[static_cast<std::int64_t>(kx) * M + ky] = w;
      }
    }
  }
  double s = 0.0;
  auto coefs = f.coefficients();
  for (int c = 0; c < g.value_width; ++c)
    for (std::int64_t i = 0; i < lat; ++i) s += weight[i] * std::norm(coefs[c * lat + i]);
  return std::sqrt(s * tau_pow(g.dim));
}

double sup_norm(const Field& f) {
  auto vals = f.nodes();
  const int w = f.width();
  double best = 0.0;
  for (std::int64_t n = 0; n < f.lattice_size(); ++n) {
    double m = 0.0;
    for (int c = 0; c < w; ++c) m += std::norm((*vals)[n * w + c]);
    best = std::max(best, m);
  }
  return std::sqrt(best);
}

double c1_norm(const Field& f) {
  double s = sup_norm(f);
  for (int d = 0; d < f.spec().dim; ++d) s += sup_norm(derivative(f, d));
  return s;
}

cdouble mean_integral(const Field& f, int c) {
  return f.coef(c, 0) * tau_pow(f.spec().dim);
}

int dealias_modes(int modes_per_axis) { return 3 * modes_per_axis / 2; }

namespace {

// Scatter band coefficients of one component into a P-lattice and vice versa.
void scatter_band(const GridSpec& g, const cdouble* src, int P, cdouble* dst) {
  const int B = g.band_limit();
  const int M = g.modes_per_axis;
  if (g.dim == 1) {
    for (int xi = -B; xi <= B; ++xi) dst[xi >= 0 ? xi : xi + P] = src[g.index_of(xi)];
  } else {
    for (int xi = -B; xi <= B; ++xi) {
      std::int64_t row = static_cast<std::int64_t>(xi >= 0 ? xi : xi + P) * P;
      for (int eta = -B; eta <= B; ++eta)
        dst[row + (eta >= 0 ? eta : eta + P)] =
            src[static_cast<std::int64_t>(g.index_of(xi)) * M + g.index_of(eta)];
    }
  }
}

void gather_band(const GridSpec& g, const cdouble* src, int P, cdouble* dst) {
  const int B = g.band_limit();
  const int M = g.modes_per_axis;
  if (g.dim == 1) {
    for (int xi = -B; xi <= B; ++xi) dst[g.index_of(xi)] = src[xi >= 0 ? xi : xi + P];
  } else {
    for (int xi = -B; xi <= B; ++xi) {
      std::int64_t row = static_cast<std::int64_t>(xi >= 0 ? xi : xi + P) * P;
      for (int eta = -B; eta <= B; ++eta)
        dst[static_cast<std::int64_t>(g.index_of(xi)) * M + g.index_of(eta)] =
            src[row + (eta >= 0 ? eta : eta + P)];
    }
  }
}

}  // namespace

std::vector<cdouble> padded_nodes(const Field& f, int pad_modes) {
  const GridSpec& g = f.spec();
  if (pad_modes < g.modes_per_axis) throw std::invalid_argument("padded_nodes: pad too small");
  std::int64_t np = pad_modes;
  if (g.dim == 2) np *= pad_modes;
  const int w = g.value_width;
  std::vector<cdouble> out(static_cast<std::size_t>(np) * w);
  std::vector<cdouble> scratch(static_cast<std::size_t>(np));
  for (int c = 0; c < w; ++c) {
    std::fill(scratch.begin(), scratch.end(), cdouble{});
    scatter_band(g, f.coefficients().data() + c * f.lattice_size(), pad_modes, scratch.data());
    detail::dft(g.dim, pad_modes, scratch.data(), false);
    for (std::int64_t n = 0; n < np; ++n) out[n * w + c] = scratch[n];
  }
  return out;
}

Field field_from_padded_nodes(const GridSpec& out_spec, int pad_modes,
                              std::span<const cdouble> values) {
  validate_spec(out_spec);
  std::int64_t np = pad_modes;
  if (out_spec.dim == 2) np *= pad_modes;
  const int w = out_spec.value_width;
  if (std::ssize(values) != np * w)
    throw std::invalid_argument("field_from_padded_nodes: sample count mismatch");
  Field f(out_spec);
  auto coefs = f.coefficients_mut();
  std::vector<cdouble> scratch(static_cast<std::size_t>(np));
  const double scale = 1.0 / static_cast<double>(np);
  for (int c = 0; c < w; ++c) {
    for (std::int64_t n = 0; n < np; ++n) scratch[n] = values[n * w + c];
    detail::dft(out_spec.dim, pad_modes, scratch.data(), true);
    for (auto& v : scratch) v *= scale;
    gather_band(out_spec, scratch.data(), pad_modes, coefs.data() + c * f.lattice_size());
  }
  if (out_spec.scalar_kind == ScalarKind::real_valued) f.symmetrize_real();
  return f;
}

const std::vector<double>& node_coordinates(int dim, int modes) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_pair(dim, modes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<double> xs;
  const double h = tau / modes;
  if (dim == 1) {
    xs.resize(modes);
    for (int j = 0; j < modes; ++j) xs[j] = h * j;
  } else {
    xs.resize(static_cast<std::size_t>(modes) * modes * 2);
    for (int jx = 0; jx < modes; ++jx)
      for (int jy = 0; jy < modes; ++jy) {
        std::int64_t n = static_cast<std::int64_t>(jx) * modes + jy;
        xs[2 * n] = h * jx;
        xs[2 * n + 1] = h * jy;
      }
  }
  return cache.emplace(key, std::move(xs)).first->second;
}

Field product(const Field& a, const Field& b) {
  if (!(a.spec() == b.spec())) throw std::invalid_argument("product: GridSpec mismatch");
  const int w = a.width();
  return nodewise(a.spec(), {&a, &b}, [w](const double*, const cdouble* const* in, cdouble* out) {
    for (int c = 0; c < w; ++c) out[c] = in[0][c] * in[1][c];
  });
}

cdouble weighted_inner(const Field& a, const Field& b, const Field& weight) {
  if (!(a.spec() == b.spec())) throw std::invalid_argument("weighted_inner: GridSpec mismatch");
  const int w = a.width();
  if (!weight.spec().same_grid(a.spec()) || weight.width() != w * w)
    throw std::invalid_argument("weighted_inner: weight must be width*width on the same grid");

  // Hermiticity check on the native collocation grid.
  {
    auto wv = weight.nodes();
    double defect = 0.0;
    for (std::int64_t n = 0; n < weight.lattice_size(); ++n) {
      const cdouble* m = wv->data() + n * w * w;
      for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c)
          defect = std::max(defect, std::abs(m[r + w * c] - std::conj(m[c + w * r])));
    }
    if (defect > 1e-10)
      throw std::invalid_argument("weighted_inner: non-Hermitian weight sample");
  }

  const int P = dealias_modes(a.spec().modes_per_axis);
  std::vector<cdouble> av = padded_nodes(a, P);
  std::vector<cdouble> bv = padded_nodes(b, P);
  std::vector<cdouble> wv = padded_nodes(weight, P);
  std::int64_t np = P;
  if (a.spec().dim == 2) np *= P;
  cdouble s = 0.0;
  for (std::int64_t n = 0; n < np; ++n) {
    const cdouble* m = wv.data() + n * w * w;
    const cdouble* x = av.data() + n * w;
    const cdouble* y = bv.data() + n * w;
    for (int r = 0; r < w; ++r) {
      cdouble wx = 0.0;
      for (int c = 0; c < w; ++c) wx += m[r + w * c] * x[c];
      s += wx * std::conj(y[r]);
    }
  }
  return s * (tau_pow(a.spec().dim) / static_cast<double>(np));
}

}  // namespace hypercauchy
