#pragma once

#include <complex>

namespace hypercauchy::detail {

// In-place complex DFT in FFTW index layout, `modes` points per axis.
// forward = true applies e^{-i...} (analysis direction), backward is the
// unnormalized inverse. Plans are cached per (dim, modes, direction) and
// execution on distinct buffers is thread-safe.
void dft(int dim, int modes, std::complex<double>* data, bool forward);

}  // namespace hypercauchy::detail
