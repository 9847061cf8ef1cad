#pragma once

#include <functional>
#include <optional>
#include <span>

#include "rpfield/lattice.hpp"

namespace rpf {

struct QuadratureConfig {
  enum class Scheme {
    /// (1/L^D) sum over the lattice momentum grid of `lattice`.
    lattice_sum,
    /// Continuum integral over R^D: adaptive Gauss-Kronrod in |p| with
    /// angular rules refined by doubling (D <= 3).
    radial_adaptive,
  };

  Scheme scheme = Scheme::radial_adaptive;
  std::optional<LatticeSpec> lattice;  ///< required by lattice_sum
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_depth = 18;       ///< Gauss-Kronrod bisection depth
  int max_angular = 1024;   ///< cap on angular nodes per ring

  static QuadratureConfig lattice_sum_on(const LatticeSpec& spec);
  static QuadratureConfig radial(double abs_tol = 1e-12, double rel_tol = 1e-10);

  bool operator==(const QuadratureConfig&) const = default;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< 0 for the lattice sum, which is exact for the lattice
  bool exact = false;
};

using MomentumIntegrand = std::function<double(std::span<const double>)>;

/// (2 pi)^-D int_{R^D} integrand(p) dp, or its lattice-sum analogue.
/// Throws QuadratureError when the tolerance is not met.
QuadratureResult integrate_momentum(int dim, const MomentumIntegrand& integrand, const QuadratureConfig& config);

}  // namespace rpf
