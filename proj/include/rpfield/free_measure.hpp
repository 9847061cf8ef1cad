#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "rpfield/lattice.hpp"
#include "rpfield/mollifier.hpp"
#include "rpfield/quadrature.hpp"
#include "rpfield/test_function.hpp"

namespace rpf {

/// C(f, g) = (2 pi)^-D int conj(f^(p)) . g^(p) / (p^2 + 1) dp with continuum
/// transforms, via the configured scheme.
QuadratureResult free_covariance(const TestFunction& f, const TestFunction& g, const QuadratureConfig& quad);

/// Exact covariance of the lattice pairings under sample_gff:
/// L^-D sum_p conj(f_lat^(p)) . g_lat^(p) / (p^2 + 1), with f_lat^ the lattice
/// transform of the sampled test function.
double lattice_covariance(const TestFunction& f, const TestFunction& g, const LatticeSpec& spec);

/// Same, for already-sampled functions (LatticeField layout).
double lattice_covariance(std::span<const double> f, std::span<const double> g, const LatticeSpec& spec);

/// Spectral sampler of the free field: white noise filtered by
/// (h^D (p^2 + 1))^-1/2, one independent scalar field per component. The
/// filter is real and even, so the output is real to rounding and the
/// Nyquist modes carry no imaginary part.
class GffSampler {
 public:
  explicit GffSampler(const LatticeSpec& spec);

  const LatticeSpec& spec() const { return spec_; }

  /// Fills `out` (size K N^D) with one sample drawn from `rng`.
  void draw(std::mt19937_64& rng, std::span<double> out, std::vector<Complex>& work) const;
  /// Sample for a given seed; bit-identical for equal seeds.
  LatticeField sample(std::uint64_t seed) const;

 private:
  LatticeSpec spec_;
  std::vector<double> filter_;
};

LatticeField sample_gff(const LatticeSpec& spec, std::uint64_t seed);

/// phi^(p) -> sigma^(|p| / Lambda) phi^(p). Requires 1/Lambda < L/2.
LatticeField mollify(const LatticeField& field, const Mollifier& mollifier);

/// Multiplier sigma^(|p|/Lambda) on the FFT-ordered mode grid.
std::vector<double> mollifier_multiplier(const LatticeSpec& spec, const Mollifier& mollifier);

/// Field snapshot: <base>.f64 holds K N^D little-endian doubles in
/// LatticeField order, <base>.json the lattice and seed.
void write_snapshot(const LatticeField& field, std::uint64_t seed, const std::filesystem::path& base);
LatticeField read_snapshot(const std::filesystem::path& base, std::uint64_t* seed = nullptr);

}  // namespace rpf
