#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace hypercauchy {

using cdouble = std::complex<double>;

inline constexpr double tau = 6.283185307179586476925286766559;  // 2*pi

enum class ScalarKind : unsigned char { real_valued, complex_valued };

// Uniform periodic grid on [0, 2*pi)^dim with `modes_per_axis` collocation
// nodes per axis. Spectral band: |xi_i| <= modes_per_axis/2 - 1 per axis;
// the leftover bin is pinned to zero.
struct GridSpec {
  int dim = 1;                // 1 or 2
  int modes_per_axis = 64;    // power of two, >= 8
  int value_width = 1;        // components of K^N
  ScalarKind scalar_kind = ScalarKind::complex_valued;

  static constexpr double circumference = tau;  // fixed per axis

  std::int64_t lattice_size() const {
    std::int64_t n = modes_per_axis;
    return dim == 2 ? n * n : n;
  }
  int band_limit() const { return modes_per_axis / 2 - 1; }
  bool in_band(int xi) const { return 2 * std::abs(xi) <= modes_per_axis - 2; }
  // FFT index layout: k in [0, M) maps to frequency k for k < M/2, else k - M.
  int freq_of(int k) const { return 2 * k < modes_per_axis ? k : k - modes_per_axis; }
  int index_of(int xi) const { return xi >= 0 ? xi : xi + modes_per_axis; }

  GridSpec with_width(int w, ScalarKind kind) const {
    GridSpec s = *this;
    s.value_width = w;
    s.scalar_kind = kind;
    return s;
  }
  bool same_grid(const GridSpec& o) const {
    return dim == o.dim && modes_per_axis == o.modes_per_axis;
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

void validate_spec(const GridSpec& spec);  // throws std::invalid_argument

// Band-limited field on the grid, stored as spectral coefficients
// (component-major over the full FFT lattice; out-of-band bins are zero).
// Collocation values f(x) = sum_xi c_xi e^{i xi.x} are cached lazily.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& spec);

  // Analysis from node-major collocation samples values[n * width + c],
  // nodes in row-major FFT order, x_j = 2*pi*j/M. Projects onto the band;
  // real-kind fields are conjugate-symmetrized.
  static Field from_nodes(const GridSpec& spec, std::span<const cdouble> values);

  const GridSpec& spec() const { return spec_; }
  int width() const { return spec_.value_width; }
  std::int64_t lattice_size() const { return lat_; }

  std::span<const cdouble> coefficients() const { return coef_; }
  std::span<cdouble> coefficients_mut();  // invalidates the collocation cache

  cdouble coef(int c, std::int64_t k) const { return coef_[c * lat_ + k]; }
  void set_coef(int c, std::int64_t k, cdouble v);

  // Frequency-indexed access; throws on out-of-band indices.
  cdouble mode(int c, int xi) const;
  cdouble mode(int c, int xi, int eta) const;
  void set_mode(int c, int xi, cdouble v);
  void set_mode(int c, int xi, int eta, cdouble v);

  // Node-major collocation values, lazily synthesized and shared.
  std::shared_ptr<const std::vector<cdouble>> nodes() const;

  void project_band();
  void symmetrize_real();  // enforce c_{-xi} = conj(c_xi)

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  Field& operator*=(cdouble s);
  void axpy(double a, const Field& x);  // *this += a*x

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field f) { return f *= s; }

  Field(const Field& o) : spec_(o.spec_), lat_(o.lat_), coef_(o.coef_), cache_(o.cache_copy()) {}
  Field(Field&& o) noexcept
      : spec_(o.spec_), lat_(o.lat_), coef_(std::move(o.coef_)), cache_(o.cache_copy()) {}
  Field& operator=(const Field& o) {
    if (this != &o) {
      spec_ = o.spec_;
      lat_ = o.lat_;
      coef_ = o.coef_;
      cache_store(o.cache_copy());
    }
    return *this;
  }
  Field& operator=(Field&& o) noexcept {
    spec_ = o.spec_;
    lat_ = o.lat_;
    coef_ = std::move(o.coef_);
    cache_store(o.cache_copy());
    return *this;
  }

 private:
  void require_combinable(const Field& o) const;
  std::shared_ptr<const std::vector<cdouble>> cache_copy() const {
    std::lock_guard lock(cache_mu_);
    return cache_;
  }
  void cache_store(std::shared_ptr<const std::vector<cdouble>> p) const {
    std::lock_guard lock(cache_mu_);
    cache_ = std::move(p);
  }

  GridSpec spec_{};
  std::int64_t lat_ = 0;
  std::vector<cdouble> coef_;
  mutable std::mutex cache_mu_;
  mutable std::shared_ptr<const std::vector<cdouble>> cache_;
};

// d/dx_axis, exact on the band (coefficientwise i*xi_axis).
Field derivative(const Field& f, int axis);
// Mixed partial d^alpha, alpha listing the order per axis.
Field partial(const Field& f, std::span<const int> alpha);

double l2_norm(const Field& f);
// (a, b) = integral of sum_c a_c conj(b_c) over the torus.
cdouble l2_inner(const Field& a, const Field& b);
// sqrt(sum_{|alpha| <= k} ||d^alpha f||_{L2}^2), exact via Parseval.
double sobolev_norm(const Field& f, int k);
// Max over collocation nodes of the Euclidean component magnitude.
double sup_norm(const Field& f);
// sup_norm(f) + sum_j sup_norm(d_j f); grid-sampled lower bound of the C1 norm.
double c1_norm(const Field& f);
// integral over the torus of component c: (2*pi)^dim * c_0.
cdouble mean_integral(const Field& f, int c = 0);

// Zero-padded grid size used for dealiased pointwise evaluation (3M/2:
// quadratic products of band-limited factors come out exact on the band).
int dealias_modes(int modes_per_axis);

// Collocation samples of f on the pad_modes grid, node-major [n*width + c].
std::vector<cdouble> padded_nodes(const Field& f, int pad_modes);
// Analysis from pad_modes samples, truncated to out_spec's band.
Field field_from_padded_nodes(const GridSpec& out_spec, int pad_modes,
                              std::span<const cdouble> values);
// Flattened node coordinates, [n*dim + d].
const std::vector<double>& node_coordinates(int dim, int modes);

// Dealiased pointwise evaluation: synthesizes every input on the padded
// grid, calls fn(x, in, out) per node (in[i] points at input i's component
// values), and re-analyzes the output onto out_spec's band.
template <class Fn>
Field nodewise(const GridSpec& out_spec, std::span<const Field* const> inputs, Fn&& fn) {
  if (inputs.empty()) throw std::invalid_argument("nodewise: needs at least one input");
  for (const Field* f : inputs)
    if (!f->spec().same_grid(out_spec))
      throw std::invalid_argument("nodewise: grid mismatch");
  const int dim = out_spec.dim;
  const int P = dealias_modes(out_spec.modes_per_axis);
  std::int64_t np = P;
  if (dim == 2) np *= P;

  std::vector<std::vector<cdouble>> bufs;
  bufs.reserve(inputs.size());
  for (const Field* f : inputs) bufs.push_back(padded_nodes(*f, P));

  const std::vector<double>& xs = node_coordinates(dim, P);
  std::vector<cdouble> out(np * out_spec.value_width);
  std::vector<const cdouble*> in_ptrs(inputs.size());
  for (std::int64_t n = 0; n < np; ++n) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      in_ptrs[i] = bufs[i].data() + n * inputs[i]->width();
    fn(xs.data() + n * dim, in_ptrs.data(), out.data() + n * out_spec.value_width);
  }
  return field_from_padded_nodes(out_spec, P, out);
}

template <class Fn>
Field nodewise(const GridSpec& out_spec, std::initializer_list<const Field*> inputs, Fn&& fn) {
  return nodewise(out_spec, std::span<const Field* const>(inputs.begin(), inputs.size()),
                  std::forward<Fn>(fn));
}

// Dealiased pointwise (Hadamard) product; factors must share their GridSpec.
Field product(const Field& a, const Field& b);

// Convolution with theta_eps, theta the standard even unit-mass bump
// c*exp(-1/(1-|x|^2)) on |x| < 1, realized as the Fourier multiplier
// theta_hat(eps*|xi|). Multiplier values come from a fixed quadrature of the
// bump, normalized so the multiplier is exactly 1 at xi = 0 and has
// magnitude <= 1 everywhere. epsilon = 0 is the identity.
class Mollifier {
 public:
  Mollifier();                    // identity
  explicit Mollifier(double eps); // eps >= 0

  double epsilon() const { return eps_; }
  bool is_identity() const { return eps_ == 0.0; }

  // Normalized bump transform theta_hat(s) for the given dimension.
  static double multiplier(int dim, double s);

  Field apply(const Field& f) const;

 private:
  struct Tables;
  double eps_ = 0.0;
  std::shared_ptr<Tables> tables_;  // per-grid multiplier cache, shared by copies
};

Field mollify(const Field& f, const Mollifier& m);

// Quadrature of <weight(x) a(x), b(x)> over the torus; weight is a field of
// width w*w holding column-major Hermitian matrices (w = a.width()). Exact
// for band-limited arguments. Throws if a weight sample fails Hermiticity
// by more than 1e-10.
cdouble weighted_inner(const Field& a, const Field& b, const Field& weight);

}  // namespace hypercauchy
