#pragma once

// Periodic lattice, real/spectral fields and the transform convention
//
//   f^(p) = h^D sum_x exp(-i p.x) f(x),    f(x) = L^-D sum_p exp(i p.x) f^(p)
//
// on the torus [-L/2, L/2)^D with sites x = -L/2 + i*h and momenta
// p = 2*pi*k/L, k in [-N/2, N/2)^D. Spectral arrays are stored in FFT order
// (index m maps to k = m for m < N/2 and k = m - N otherwise).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rpf {

using Complex = std::complex<double>;

struct LatticeSpec {
  int dim = 1;         ///< D
  int sites = 2;       ///< N, sites per axis (even)
  double length = 1.;  ///< L, physical side
  int components = 1;  ///< K

  /// Validating constructor; throws InvalidArgument for odd N or
  /// non-positive parameters.
  static LatticeSpec build(int dim, int sites, double length, int components);

  double spacing() const { return length / sites; }
  /// N^D
  std::size_t volume() const;
  /// K * N^D
  std::size_t size() const { return volume() * static_cast<std::size_t>(components); }
  /// h^D, the cell volume.
  double cell_volume() const;

  /// (i - N/2) h, written so that the flip i -> N - i negates it exactly.
  double coordinate(int index) const { return (index - sites / 2) * spacing(); }
  int wavenumber(int fft_index) const { return fft_index < sites / 2 ? fft_index : fft_index - sites; }
  double momentum(int fft_index) const;

  /// Per-axis indices of a flat site/mode index (axis D-1 runs fastest).
  void unravel(std::size_t flat, std::span<int> index) const;
  std::size_t ravel(std::span<const int> index) const;
  /// Physical position of a site.
  std::vector<double> position(std::size_t site) const;

  bool operator==(const LatticeSpec&) const = default;
};

/// Momentum vectors of every mode (volume() x dim, row-major) in FFT order.
std::vector<double> momentum_table(const LatticeSpec& spec);
/// |p|^2 of every mode in FFT order.
std::vector<double> momentum_squared_table(const LatticeSpec& spec);

/// Real K-component field, component-major: data[c * N^D + site].
class LatticeField {
 public:
  LatticeField() = default;
  explicit LatticeField(const LatticeSpec& spec);
  LatticeField(const LatticeSpec& spec, std::vector<double> data);

  const LatticeSpec& spec() const { return spec_; }
  std::span<double> component(int c);
  std::span<const double> component(int c) const;
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double& at(int c, std::size_t site) { return data_[static_cast<std::size_t>(c) * spec_.volume() + site]; }
  double at(int c, std::size_t site) const { return data_[static_cast<std::size_t>(c) * spec_.volume() + site]; }

  bool all_finite() const;

 private:
  LatticeSpec spec_;
  std::vector<double> data_;
};

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const LatticeSpec& spec);

  const LatticeSpec& spec() const { return spec_; }
  std::span<Complex> component(int c);
  std::span<const Complex> component(int c) const;
  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

 private:
  LatticeSpec spec_;
  std::vector<Complex> data_;
};

SpectralField dft_forward(const LatticeField& field);
/// Inverse transform; the imaginary part (rounding noise for spectra of real
/// fields) is dropped.
LatticeField dft_inverse(const SpectralField& spectral);

/// Forward/inverse transform of one scalar component in place, with the
/// physical normalization and phase above. Used by the hot loops.
void transform_forward(const LatticeSpec& spec, std::span<Complex> values);
void transform_inverse(const LatticeSpec& spec, std::span<Complex> values);

/// Real Fourier multiplier applied to one scalar component in place:
/// values <- F^-1[ multiplier(p) F[values] ]. The transform phases cancel, so
/// this is the cheap path for the sampling loops.
void apply_filter(const LatticeSpec& spec, std::span<Complex> values, std::span<const double> multiplier);

/// Applies the Fourier multiplier (-p^2)^j to every component.
LatticeField laplacian_power(const LatticeField& field, int power);

}  // namespace rpf
