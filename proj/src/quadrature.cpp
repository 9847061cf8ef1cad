#include "rpfield/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "gauss_legendre.hpp"
#include "rpfield/error.hpp"

namespace rpf {

QuadratureConfig QuadratureConfig::lattice_sum_on(const LatticeSpec& spec) {
  QuadratureConfig q;
  q.scheme = Scheme::lattice_sum;
  q.lattice = spec;
  return q;
}

QuadratureConfig QuadratureConfig::radial(double abs_tol, double rel_tol) {
  QuadratureConfig q;
  q.scheme = Scheme::radial_adaptive;
  q.abs_tol = abs_tol;
  q.rel_tol = rel_tol;
  return q;
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

QuadratureResult lattice_sum(int dim, const MomentumIntegrand& integrand, const LatticeSpec& spec) {
  if (spec.dim != dim) throw InvalidArgument("lattice-sum quadrature: lattice dimension mismatch");
  const auto table = momentum_table(spec);
  const std::size_t vol = spec.volume();
  const auto d = static_cast<std::size_t>(dim);
  double sum = 0.0;
  for (std::size_t m = 0; m < vol; ++m) sum += integrand(std::span<const double>(table.data() + m * d, d));
  return {sum / std::pow(spec.length, dim), 0.0, true};
}

// Integral over the unit sphere of integrand(rho * n), refined by doubling.
class AngularRule {
 public:
  AngularRule(int dim, const MomentumIntegrand& integrand, double rel_tol, double abs_tol, int max_nodes)
      : dim_(dim), integrand_(integrand), rel_tol_(rel_tol), abs_tol_(abs_tol), max_nodes_(max_nodes) {}

  double operator()(double rho) {
    double prev = 0.0;
    double diff = 0.0;
    if (dim_ == 2) {
      // periodic trapezoid; each doubling adds the odd nodes
      int n = 16;
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += eval2(rho, 2.0 * std::numbers::pi * k / n);
      prev = sum * 2.0 * std::numbers::pi / n;
      while (2 * n <= max_nodes_) {
        for (int k = 0; k < n; ++k) sum += eval2(rho, 2.0 * std::numbers::pi * (k + 0.5) / n);
        n *= 2;
        const double cur = sum * 2.0 * std::numbers::pi / n;
        diff = std::abs(cur - prev);
        prev = cur;
        if (diff <= std::max(abs_tol_, rel_tol_ * std::abs(cur))) return cur;
      }
    } else {
      unsigned n = 8;
      prev = sphere(rho, n);
      while (2 * static_cast<int>(n) <= max_nodes_) {
        n *= 2;
        const double cur = sphere(rho, n);
        diff = std::abs(cur - prev);
        prev = cur;
        if (diff <= std::max(abs_tol_, rel_tol_ * std::abs(cur))) return cur;
      }
    }
    worst_ = std::max(worst_, diff * rho * rho);
    return prev;
  }

  double worst_unresolved() const { return worst_; }

 private:
  double eval2(double rho, double theta) {
    const double p[2] = {rho * std::cos(theta), rho * std::sin(theta)};
    return integrand_(std::span<const double>(p, 2));
  }

  // Gauss-Legendre in cos(theta) times trapezoid in phi.
  double sphere(double rho, unsigned n) {
    const auto& rule = detail::gauss_legendre(n);
    const unsigned nphi = 2 * n;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = rule.nodes[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
      double ring = 0.0;
      for (unsigned k = 0; k < nphi; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / nphi;
        const double p[3] = {rho * s * std::cos(phi), rho * s * std::sin(phi), rho * u};
        ring += integrand_(std::span<const double>(p, 3));
      }
      sum += rule.weights[i] * ring * 2.0 * std::numbers::pi / nphi;
    }
    return sum;
  }

  int dim_;
  const MomentumIntegrand& integrand_;
  double rel_tol_;
  double abs_tol_;
  int max_nodes_;
  double worst_ = 0.0;
};

// Adaptive bisection of int_0^inf f(rho) drho after rho = t / (1 - t). An
// interval is accepted once its Kronrod-Gauss difference is below its share
// of max(abs_tol, rel_tol |I|), so integrals that vanish terminate too.
struct HalfLine {
  const std::function<double(double)>& f;
  double density = 0.0;
  double error = 0.0;

  double mapped(double t) const {
    const double s = 1.0 - t;
    return f(t / s) / (s * s);
  }

  double piece(double a, double b, double* err) const {
    return GK::integrate([this](double t) { return mapped(t); }, a, b, 0, 0.0, err);
  }

  double refine(double a, double b, double value, double err, unsigned depth) {
    if (err <= density * (b - a) || depth == 0) {
      error += err;
      return value;
    }
    const double m = 0.5 * (a + b);
    double el = 0.0, er = 0.0;
    const double vl = piece(a, m, &el);
    const double vr = piece(m, b, &er);
    return refine(a, m, vl, el, depth - 1) + refine(m, b, vr, er, depth - 1);
  }
};

double half_line(const std::function<double(double)>& f, double abs_tol, double rel_tol, unsigned depth,
                 double* error) {
  HalfLine h{f};
  // coarse pass to scale the relative tolerance
  double total = 0.0;
  const int parts = 8;
  std::vector<double> vals(parts), errs(parts);
  for (int k = 0; k < parts; ++k) {
    vals[static_cast<std::size_t>(k)] = h.piece(double(k) / parts, double(k + 1) / parts, &errs[static_cast<std::size_t>(k)]);
    total += vals[static_cast<std::size_t>(k)];
  }
  h.density = std::max(abs_tol, rel_tol * std::abs(total));
  double value = 0.0;
  for (int k = 0; k < parts; ++k)
    value += h.refine(double(k) / parts, double(k + 1) / parts, vals[static_cast<std::size_t>(k)],
                      errs[static_cast<std::size_t>(k)], depth);
  *error = h.error;
  return value;
}

QuadratureResult radial_adaptive(int dim, const MomentumIntegrand& integrand, const QuadratureConfig& config) {
  const double norm = std::pow(2.0 * std::numbers::pi, -dim);
  const unsigned depth = static_cast<unsigned>(std::max(1, config.max_depth));
  // the internal targets sit below the requested ones so that the summed
  // interval errors still meet them; the tolerance is on the normalized value
  const double abs_tol = 0.1 * config.abs_tol / norm;
  const double rel_tol = 0.1 * config.rel_tol;
  double value = 0.0;
  double error = 0.0;

  if (dim == 1) {
    const std::function<double(double)> f = [&](double p) {
      const double m = -p;
      return integrand(std::span<const double>(&p, 1)) + integrand(std::span<const double>(&m, 1));
    };
    value = half_line(f, abs_tol, rel_tol, depth, &error);
  } else if (dim == 2 || dim == 3) {
    AngularRule angular(dim, integrand, 1e-2 * rel_tol, 1e-2 * abs_tol, config.max_angular);
    const std::function<double(double)> f = [&](double rho) { return std::pow(rho, dim - 1) * angular(rho); };
    value = half_line(f, abs_tol, rel_tol, depth, &error);
    error += angular.worst_unresolved();
  } else {
    throw InvalidArgument("radial-adaptive quadrature supports D <= 3; use the lattice-sum scheme for D = " +
                          std::to_string(dim));
  }

  QuadratureResult result{value * norm, error * norm, false};
  if (!std::isfinite(result.value) ||
      result.error > std::max(config.abs_tol, config.rel_tol * std::abs(result.value)))
    throw QuadratureError("momentum quadrature missed its tolerance (estimate " + std::to_string(result.value) +
                              ", error " + std::to_string(result.error) + ")",
                          result.value, result.error);
  return result;
}

}  // namespace

QuadratureResult integrate_momentum(int dim, const MomentumIntegrand& integrand, const QuadratureConfig& config) {
  if (!(config.abs_tol > 0.0) || !(config.rel_tol > 0.0))
    throw InvalidArgument("quadrature tolerances must be positive");
  if (config.scheme == QuadratureConfig::Scheme::lattice_sum) {
    if (!config.lattice) throw InvalidArgument("lattice-sum quadrature needs a lattice");
    return lattice_sum(dim, integrand, *config.lattice);
  }
  return radial_adaptive(dim, integrand, config);
}

}  // namespace rpf
