#include <cmath>
#include <map>
#include <mutex>

#include "hypercauchy/grid.hpp"

namespace hypercauchy {

namespace {

// Midpoint quadrature data for the bump transform. The bump vanishes to all
// orders at the support boundary, so the midpoint rule converges faster than
// any power of the node count.
struct Profile {
  std::vector<double> x;  // quadrature abscissae in (-1, 1)
  std::vector<double> w;  // positive weights (bump value, or chord mass, times h)
  double raw0 = 0.0;      // sum of weights = unnormalized transform at s = 0
};

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

// dim 1: theta_hat(s) proportional to int_{-1}^{1} theta(x) cos(sx) dx.
const Profile& profile_1d() {
  static const Profile p = [] {
    Profile q;
    const int N = 16384;
    const double h = 2.0 / N;
    q.x.resize(N);
    q.w.resize(N);
    for (int i = 0; i < N; ++i) {
      double xi = -1.0 + (i + 0.5) * h;
      q.x[i] = xi;
      q.w[i] = bump(xi * xi) * h;
      q.raw0 += q.w[i];
    }
    return q;
  }();
  return p;
}

// dim 2: reduce the radial transform to a 1-d cosine transform of the chord
// mass W(x) = int theta(sqrt(x^2 + y^2)) dy, which is smooth and flat at the
// endpoints, so the same quadrature argument applies.
const Profile& profile_2d() {
  static const Profile p = [] {
    Profile q;
    const int N = 4096;
    const int Ny = 2048;
    const double h = 2.0 / N;
    q.x.resize(N);
    q.w.resize(N);
    for (int i = 0; i < N; ++i) {
      double xi = -1.0 + (i + 0.5) * h;
      q.x[i] = xi;
      double c2 = 1.0 - xi * xi;
      double chord = 0.0;
      if (c2 > 0.0) {
        double c = std::sqrt(c2);
        double hy = 2.0 * c / Ny;
        for (int j = 0; j < Ny; ++j) {
          double y = -c + (j + 0.5) * hy;
          chord += bump(xi * xi + y * y) * hy;
        }
      }
      q.w[i] = chord * h;
      q.raw0 += q.w[i];
    }
    return q;
  }();
  return p;
}

double transform(const Profile& p, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) acc += p.w[i] * std::cos(s * p.x[i]);
  return acc / p.raw0;
}

}  // namespace

struct Mollifier::Tables {
  std::mutex mu;
  // (dim, modes_per_axis) -> multiplier per flattened lattice index
  std::map<std::pair<int, int>, std::shared_ptr<const std::vector<double>>> per_grid;
};

Mollifier::Mollifier() = default;

Mollifier::Mollifier(double eps) : eps_(eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("Mollifier: epsilon must be >= 0");
  if (eps > 0.0) tables_ = std::make_shared<Tables>();
}

double Mollifier::multiplier(int dim, double s) {
  if (dim == 1) return transform(profile_1d(), s);
  if (dim == 2) return transform(profile_2d(), s);
  throw std::invalid_argument("Mollifier: dim must be 1 or 2");
}

Field Mollifier::apply(const Field& f) const {
  if (is_identity()) return f;
  const GridSpec& g = f.spec();
  const int M = g.modes_per_axis;
  const std::int64_t lat = f.lattice_size();

  std::shared_ptr<const std::vector<double>> table;
  {
    std::lock_guard lock(tables_->mu);
    auto key = std::make_pair(g.dim, M);
    auto it = tables_->per_grid.find(key);
    if (it != tables_->per_grid.end()) {
      table = it->second;
    } else {
      auto t = std::make_shared<std::vector<double>>(static_cast<std::size_t>(lat), 0.0);
      if (g.dim == 1) {
        for (int k = 0; k < M; ++k) {
          int xi = g.freq_of(k);
          if (g.in_band(xi)) (*t)[k] = multiplier(1, eps_ * std::abs(xi));
        }
      } else {
        std::map<int, double> radial;  // |xi|^2 -> multiplier
        for (int kx = 0; kx < M; ++kx) {
          int xi = g.freq_of(kx);
          for (int ky = 0; ky < M; ++ky) {
            int eta = g.freq_of(ky);
            if (!g.in_band(xi) || !g.in_band(eta)) continue;
            int r2 = xi * xi + eta * eta;
            auto rit = radial.find(r2);
            if (rit == radial.end())
              rit = radial.emplace(r2, multiplier(2, eps_ * std::sqrt(double(r2)))).first;
            (*t)[static_cast<std::int64_t>(kx) * M + ky] = rit->second;
          }
        }
      }
      table = t;
      tables_->per_grid.emplace(key, table);
    }
  }

  Field out = f;
  auto coefs = out.coefficients_mut();
  for (int c = 0; c < g.value_width; ++c)
    for (std::int64_t k = 0; k < lat; ++k) coefs[c * lat + k] *= (*table)[k];
  return out;
}

Field mollify(const Field& f, const Mollifier& m) { return m.apply(f); }

}  // namespace hypercauchy
