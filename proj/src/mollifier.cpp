#include "rpfield/mollifier.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "gauss_legendre.hpp"
#include "rpfield/error.hpp"

namespace rpf {

namespace {

constexpr int kTableNodes = 4096;
constexpr double kTableMax = 1000.0;
constexpr int kStencil = 8;  // Lagrange interpolation points

double bump(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

double sphere_area(int dim) { return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim); }

// Radial kernel of the D-dimensional transform, normalized to 1 at x = 0.
double radial_kernel(int dim, double x) {
  if (x < 1e-8) return 1.0;
  switch (dim) {
    case 1:
      return std::cos(x);
    case 2:
      return ::j0(x);
    case 3:
      return std::sin(x) / x;
    default: {
      const double nu = 0.5 * dim - 1.0;
      return std::tgamma(0.5 * dim) * std::pow(2.0 / x, nu) * std::cyl_bessel_j(nu, x);
    }
  }
}

// int_0^1 kernel(q r) r^{D-1} bump(r) dr, composite 16-point Gauss-Legendre.
double radial_moment(int dim, double q) {
  const auto& rule = detail::gauss_legendre(16);
  const int panels = std::max(32, static_cast<int>(std::ceil(q / 4.0)));
  const double width = 1.0 / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double r = mid + 0.5 * width * rule.nodes[i];
      sum += rule.weights[i] * radial_kernel(dim, q * r) * std::pow(r, dim - 1) * bump(r);
    }
  }
  return 0.5 * width * sum;
}

}  // namespace

class MollifierTable {
 public:
  explicit MollifierTable(int dim) : values_(kTableNodes) {
    const double inv_mass = 1.0 / radial_moment(dim, 0.0);
    normalization_ = inv_mass / sphere_area(dim);
    for (int i = 0; i < kTableNodes; ++i) {
      const double u = static_cast<double>(i) / (kTableNodes - 1);
      values_[static_cast<std::size_t>(i)] = radial_moment(dim, kTableMax * u * u) * inv_mass;
    }
  }

  double operator()(double q) const {
    q = std::abs(q);
    if (q >= kTableMax) return 0.0;
    const double t = std::sqrt(q / kTableMax) * (kTableNodes - 1);
    int i0 = static_cast<int>(std::floor(t)) - kStencil / 2 + 1;
    if (i0 > kTableNodes - kStencil) i0 = kTableNodes - kStencil;
    double sum = 0.0;
    for (int a = 0; a < kStencil; ++a) {
      double w = 1.0;
      for (int b = 0; b < kStencil; ++b)
        if (b != a) w *= (t - (i0 + b)) / static_cast<double>(a - b);
      // the transform is even in u, so node -k mirrors node k
      sum += w * values_[static_cast<std::size_t>(std::abs(i0 + a))];
    }
    return sum;
  }

  double normalization() const { return normalization_; }

 private:
  std::vector<double> values_;
  double normalization_ = 0.0;
};

namespace {

std::shared_ptr<const MollifierTable> table_for(int dim) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const MollifierTable>> tables;
  std::lock_guard lock(mutex);
  auto& slot = tables[dim];
  if (!slot) slot = std::make_shared<const MollifierTable>(dim);
  return slot;
}

}  // namespace

double mollifier_normalization(int dim) { return 1.0 / (sphere_area(dim) * radial_moment(dim, 0.0)); }

double mollifier_fourier_direct(int dim, double q) {
  return radial_moment(dim, std::abs(q)) / radial_moment(dim, 0.0);
}

Mollifier::Mollifier(int dim, double scale) : dim_(dim), scale_(scale) {
  if (dim < 1) throw InvalidArgument("mollifier dimension must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidArgument("mollifier scale Lambda must be positive, got " + std::to_string(scale));
  table_ = table_for(dim);
}

double Mollifier::unit_fourier(double q) const { return (*table_)(q); }

double Mollifier::unit_profile(double r) const { return table_->normalization() * bump(r); }

double Mollifier::fourier(double p_abs) const { return unit_fourier(p_abs / scale_); }

double Mollifier::profile(double r) const { return std::pow(scale_, dim_) * unit_profile(scale_ * r); }

}  // namespace rpf
