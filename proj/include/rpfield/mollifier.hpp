#pragma once

#include <memory>
#include <vector>

namespace rpf {

/// Radial table of the unit-scale bump transform, built once per dimension.
class MollifierTable;

/// sigma_Lambda(x) = Lambda^D sigma(Lambda x) with the normalized bump
/// sigma(x) ~ exp(-1 / (1 - |x|^2)) on the unit ball. The transform is
/// tabulated on 4096 radial nodes (q = q_max u^2, u uniform) and read back by
/// 8-point Lagrange interpolation in u; beyond q_max = 1000 it is below 1e-16
/// and returned as 0.
class Mollifier {
 public:
  /// Throws InvalidArgument for Lambda <= 0 or D < 1.
  Mollifier(int dim, double scale);

  int dim() const { return dim_; }
  double scale() const { return scale_; }

  /// sigma_Lambda^(p) = sigma^(|p| / Lambda).
  double fourier(double p_abs) const;
  /// sigma_Lambda(x) at distance r from the origin.
  double profile(double r) const;

  /// Unit-scale helpers.
  double unit_fourier(double q) const;
  double unit_profile(double r) const;

  bool operator==(const Mollifier& other) const { return dim_ == other.dim_ && scale_ == other.scale_; }

 private:
  int dim_;
  double scale_;
  std::shared_ptr<const MollifierTable> table_;
};

/// Direct radial quadrature of the unit-scale transform (no table); used to
/// build the table and by tests as its reference.
double mollifier_fourier_direct(int dim, double q);
/// Normalization constant c_D with c_D * int_{B(0,1)} exp(-1/(1-|x|^2)) dx = 1.
double mollifier_normalization(int dim);

}  // namespace rpf
