#pragma once

#include <span>
#include <string>
#include <vector>

#include "rpfield/lattice.hpp"

namespace rpf {

enum class BumpFamily {
  /// A * exp(-|x-c|^2 / (2 w^2)) * e. Closed-form Fourier transform.
  gaussian,
  /// A * exp(-|x-c|^2 / (2 w^2)) * exp(-s^2 / (R^2 - s^2)) * e for s = |x-c| < R,
  /// zero outside. Smooth with compact support; tends to the gaussian bump as
  /// R grows.
  truncated,
};

/// Analytic descriptor of a localized R^K-valued smooth function.
struct TestFunction {
  BumpFamily family = BumpFamily::gaussian;
  std::vector<double> center;     ///< length D
  double width = 1.0;             ///< w
  double amplitude = 1.0;         ///< A
  std::vector<double> component;  ///< unit K-vector e
  double support_radius = 0.0;    ///< R, truncated family only

  static TestFunction gaussian(std::vector<double> center, double width, double amplitude,
                               std::vector<double> component);
  static TestFunction truncated(std::vector<double> center, double width, double support_radius, double amplitude,
                                std::vector<double> component);

  int dim() const { return static_cast<int>(center.size()); }
  int components() const { return static_cast<int>(component.size()); }

  /// Radius outside of which the function is treated as absent: R for the
  /// truncated family, 3w for the gaussian one.
  double reach() const;

  /// Scalar profile at a point (the vector value is profile * e).
  double profile(std::span<const double> x) const;

  /// Throws SupportError unless the reach ball sits strictly inside the
  /// torus [-L/2, L/2)^D.
  void check_fits(const LatticeSpec& spec) const;

  /// Site samples in LatticeField layout (component-major).
  std::vector<double> sample(const LatticeSpec& spec) const;

  bool operator==(const TestFunction&) const = default;
};

/// Scalar part of the continuum Fourier transform, int exp(-i p.x) profile(x) dx.
/// Truncated bumps use product Gauss-Legendre quadrature over the support box
/// with order doubling; QuadratureError if two successive orders disagree by
/// more than 1e-10 at the largest admissible order.
Complex fourier_scalar(const TestFunction& tf, std::span<const double> p);

/// K-vector transform fourier_scalar * e.
std::vector<Complex> eval_fourier(const TestFunction& tf, std::span<const double> p);

/// <g, phi> = h^D sum_x g(x).phi(x) with g given by its site samples.
double pairing(std::span<const double> sampled, const LatticeField& field);

/// Bounded continuous outer function of a cylindrical function.
struct OuterFunction {
  enum class Kind {
    /// amplitude * cos(sum_i freq_i t_i + phase)
    cosine,
    /// amplitude / (1 + sum_i (scale_i t_i)^2)
    bounded_rational,
    /// clamp(sum_i sum_m coeff_i[m] t_i^m, -clip, clip)
    clipped_polynomial,
    /// product of the factors, each consuming consecutive arguments
    product,
  };

  Kind kind = Kind::cosine;
  double amplitude = 1.0;
  double phase = 0.0;
  double clip = 1.0;
  std::vector<double> weights;                    ///< frequencies or scales
  std::vector<std::vector<double>> coefficients;  ///< clipped polynomial, one row per argument
  std::vector<OuterFunction> factors;

  static OuterFunction cosine(std::vector<double> frequencies, double amplitude = 1.0, double phase = 0.0);
  static OuterFunction bounded_rational(std::vector<double> scales, double amplitude = 1.0);
  static OuterFunction clipped_polynomial(std::vector<std::vector<double>> coefficients, double clip);
  static OuterFunction product(std::vector<OuterFunction> factors);

  int arity() const;
  /// ||f||_inf (an upper bound for the clipped polynomial and rational kinds).
  double sup_norm() const;
  double operator()(std::span<const double> args) const;

  bool operator==(const OuterFunction&) const = default;
};

/// F[phi] = f(<g_1, phi>, ..., <g_k, phi>).
struct CylindricalFunction {
  OuterFunction outer;
  std::vector<TestFunction> inner;

  CylindricalFunction() = default;
  CylindricalFunction(OuterFunction f, std::vector<TestFunction> g);

  double sup_norm() const { return outer.sup_norm(); }
  double evaluate(const LatticeField& field) const;

  bool operator==(const CylindricalFunction&) const = default;
};

/// (F * G)[phi] = F[phi] G[phi], again cylindrical.
CylindricalFunction product(const CylindricalFunction& a, const CylindricalFunction& b);

}  // namespace rpf
