#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace hypercauchy::detail {

namespace {

std::mutex plan_mu;
std::map<std::tuple<int, int, bool>, fftw_plan>& plan_cache() {
  static std::map<std::tuple<int, int, bool>, fftw_plan> cache;
  return cache;
}

fftw_plan get_plan(int dim, int modes, bool forward) {
  std::lock_guard lock(plan_mu);
  auto key = std::make_tuple(dim, modes, forward);
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::size_t n = static_cast<std::size_t>(modes);
  if (dim == 2) n *= static_cast<std::size_t>(modes);
  fftw_complex* scratch = fftw_alloc_complex(n);
  if (!scratch) throw std::bad_alloc();
  const int sign = forward ? FFTW_FORWARD : FFTW_BACKWARD;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan p = dim == 1
                    ? fftw_plan_dft_1d(modes, scratch, scratch, sign, flags)
                    : fftw_plan_dft_2d(modes, modes, scratch, scratch, sign, flags);
  fftw_free(scratch);
  if (!p) throw std::runtime_error("fft: plan creation failed");
  cache.emplace(key, p);
  return p;
}

}  // namespace

void dft(int dim, int modes, std::complex<double>* data, bool forward) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("fft: dim must be 1 or 2");
  fftw_plan p = get_plan(dim, modes, forward);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, buf, buf);
}

}  // namespace hypercauchy::detail
