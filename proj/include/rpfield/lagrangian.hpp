#pragma once

#include <optional>
#include <span>
#include <vector>

namespace rpf {

/// Local Lagrangian of the jet (phi_Lambda, lap phi_Lambda, ..., lap^l phi_Lambda).
/// The jet at a site is passed as (l+1)*K numbers, entry [j*K + c].
struct Lagrangian {
  enum class Kind {
    /// sum_j P_j(|x_j|^2) with P_j(u) = sum_m coefficients[j][m] u^m,
    /// optionally clipped from above at `clip`.
    polynomial,
    /// amplitude * s / (1 + s), s = sum_j scales[j]^2 |x_j|^2.
    bounded_rational,
    /// strength * sum_r (rows[r] . x)^2, linear constraints written as a penalty.
    quadratic,
    /// strength * tau(|x_0|^2 - 1)^2 with tau(t) = t, or t / (1 + t^2) when
    /// `bounded_constraint` is set. The nonlinear sigma-model penalty.
    sigma_model,
  };

  Kind kind = Kind::polynomial;
  int jet_order = 0;  ///< l
  std::vector<std::vector<double>> coefficients;
  std::optional<double> clip;
  double amplitude = 1.0;
  std::vector<double> scales;
  double strength = 1.0;
  std::vector<std::vector<double>> rows;
  bool bounded_constraint = false;
  /// Bound transform L -> inf L + (L - inf L) / (epsilon (L - inf L) + 1); 0 = off.
  double epsilon = 0.0;

  static Lagrangian zero();
  static Lagrangian constant(double value);
  /// coefficients[j][m] multiplies |x_j|^(2m); jet order is rows - 1.
  static Lagrangian polynomial(std::vector<std::vector<double>> coefficients, std::optional<double> clip = {});
  /// min(lambda |phi|^4, M).
  static Lagrangian clipped_quartic(double lambda, double sup);
  static Lagrangian bounded_rational(std::vector<double> scales, double amplitude);
  static Lagrangian quadratic(std::vector<std::vector<double>> rows, double strength, int jet_order = 0);
  static Lagrangian sigma_model(double strength, bool bounded_constraint);

  /// Throws InvalidArgument if the descriptor is malformed for K components
  /// or not bounded below.
  void validate(int components) const;

  /// Exact infimum of the untransformed catalog form.
  double lower_bound() const;
  /// Supremum, +inf when unbounded. Accounts for the bound transform.
  double upper_bound() const;
  bool bounded() const;

  /// Value at one jet; `components` is K.
  double operator()(std::span<const double> jet, int components) const;
  /// Value of the catalog form before the bound transform.
  double raw(std::span<const double> jet, int components) const;

  bool operator==(const Lagrangian&) const = default;
};

/// L~ = L / (epsilon L + 1) applied after shifting L by its infimum, so that
/// L~ <= inf L + 1/epsilon and L~ increases to L as epsilon decreases to 0.
Lagrangian bound_lagrangian(const Lagrangian& lagrangian, double epsilon);

/// The transform on a single value with known infimum.
double bound_value(double value, double lower, double epsilon);

}  // namespace rpf
