#pragma once

#include <complex>

namespace rpf::detail {

/// Unnormalized in-place DFT over a cubic sites^dim grid, row-major.
/// sign = -1 is the forward direction. Thread-safe.
void fft(std::complex<double>* data, int dim, int sites, int sign);

}  // namespace rpf::detail
