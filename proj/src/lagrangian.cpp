#include "rpfield/lagrangian.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rpfield/error.hpp"

namespace rpf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double horner(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

int degree(const std::vector<double>& c) {
  int d = static_cast<int>(c.size()) - 1;
  while (d > 0 && c[static_cast<std::size_t>(d)] == 0.0) --d;
  return d;
}

// min over u >= 0 of sum_m c[m] u^m; -inf if unbounded below.
double polynomial_min(const std::vector<double>& c) {
  if (c.empty()) return 0.0;
  const int n = degree(c);
  if (n == 0) return c[0];
  if (c[static_cast<std::size_t>(n)] < 0.0) return -kInf;
  double best = c[0];
  // critical points: real nonnegative roots of P'
  const int m = n - 1;
  if (m == 0) return best;
  std::vector<double> dp(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) dp[static_cast<std::size_t>(k - 1)] = k * c[static_cast<std::size_t>(k)];
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) companion(i, m - 1) = -dp[static_cast<std::size_t>(i)] / dp[static_cast<std::size_t>(m)];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  for (int i = 0; i < m; ++i) {
    const auto z = solver.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z.real())) || z.real() < 0.0) continue;
    best = std::min(best, horner(c, z.real()));
  }
  return best;
}

double squared_norm(std::span<const double> jet, int j, int K) {
  double s = 0.0;
  for (int c = 0; c < K; ++c) {
    const double v = jet[static_cast<std::size_t>(j * K + c)];
    s += v * v;
  }
  return s;
}

}  // namespace

Lagrangian Lagrangian::zero() { return polynomial({{0.0}}); }

Lagrangian Lagrangian::constant(double value) { return polynomial({{value}}); }

Lagrangian Lagrangian::polynomial(std::vector<std::vector<double>> coefficients, std::optional<double> clip) {
  Lagrangian l;
  l.kind = Kind::polynomial;
  l.jet_order = std::max(0, static_cast<int>(coefficients.size()) - 1);
  l.coefficients = std::move(coefficients);
  l.clip = clip;
  return l;
}

Lagrangian Lagrangian::clipped_quartic(double lambda, double sup) { return polynomial({{0.0, 0.0, lambda}}, sup); }

Lagrangian Lagrangian::bounded_rational(std::vector<double> scales, double amplitude) {
  Lagrangian l;
  l.kind = Kind::bounded_rational;
  l.jet_order = std::max(0, static_cast<int>(scales.size()) - 1);
  l.scales = std::move(scales);
  l.amplitude = amplitude;
  return l;
}

Lagrangian Lagrangian::quadratic(std::vector<std::vector<double>> rows, double strength, int jet_order) {
  Lagrangian l;
  l.kind = Kind::quadratic;
  l.jet_order = jet_order;
  l.rows = std::move(rows);
  l.strength = strength;
  return l;
}

Lagrangian Lagrangian::sigma_model(double strength, bool bounded_constraint) {
  Lagrangian l;
  l.kind = Kind::sigma_model;
  l.strength = strength;
  l.bounded_constraint = bounded_constraint;
  return l;
}

void Lagrangian::validate(int components) const {
  if (jet_order < 0) throw InvalidArgument("lagrangian: negative jet order");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("lagrangian: bound epsilon must be >= 0");
  const std::size_t width = static_cast<std::size_t>((jet_order + 1) * components);
  switch (kind) {
    case Kind::polynomial:
      if (coefficients.empty() || coefficients.size() != static_cast<std::size_t>(jet_order + 1))
        throw InvalidArgument("lagrangian: polynomial needs one coefficient row per jet order");
      for (const auto& row : coefficients)
        for (double v : row)
          if (!std::isfinite(v)) throw InvalidArgument("lagrangian: non-finite coefficient");
      break;
    case Kind::bounded_rational:
      if (scales.size() != static_cast<std::size_t>(jet_order + 1))
        throw InvalidArgument("lagrangian: bounded_rational needs one scale per jet order");
      if (!(amplitude >= 0.0)) throw InvalidArgument("lagrangian: bounded_rational amplitude must be >= 0");
      break;
    case Kind::quadratic:
      if (!(strength >= 0.0)) throw InvalidArgument("lagrangian: quadratic strength must be >= 0");
      for (const auto& row : rows)
        if (row.size() != width)
          throw InvalidArgument("lagrangian: quadratic row has " + std::to_string(row.size()) + " entries, expected " +
                                std::to_string(width));
      break;
    case Kind::sigma_model:
      if (jet_order != 0) throw InvalidArgument("lagrangian: sigma_model uses the field value only");
      if (!(strength >= 0.0)) throw InvalidArgument("lagrangian: sigma_model strength must be >= 0");
      break;
  }
  const double lo = lower_bound();
  if (!std::isfinite(lo)) throw InvalidArgument("lagrangian: not bounded below");
  if (clip && !(*clip >= lo)) throw InvalidArgument("lagrangian: clip lies below the infimum");
}

double Lagrangian::lower_bound() const {
  switch (kind) {
    case Kind::polynomial: {
      double lo = 0.0;
      for (const auto& row : coefficients) lo += polynomial_min(row);
      if (clip) lo = std::min(lo, *clip);
      return lo;
    }
    case Kind::bounded_rational:
      return 0.0;
    case Kind::quadratic:
    case Kind::sigma_model:
      return 0.0;
  }
  return 0.0;
}

double Lagrangian::upper_bound() const {
  double sup = kInf;
  switch (kind) {
    case Kind::polynomial: {
      bool constant = true;
      double c0 = 0.0;
      for (const auto& row : coefficients) {
        if (degree(row) > 0) constant = false;
        if (!row.empty()) c0 += row[0];
      }
      if (constant) sup = c0;
      if (clip) sup = std::min(sup, *clip);
      break;
    }
    case Kind::bounded_rational:
      sup = amplitude;
      break;
    case Kind::quadratic:
      sup = strength == 0.0 || rows.empty() ? 0.0 : kInf;
      break;
    case Kind::sigma_model:
      sup = bounded_constraint ? 0.25 * strength : kInf;
      break;
  }
  if (epsilon > 0.0) sup = std::min(sup, lower_bound() + 1.0 / epsilon);
  return sup;
}

bool Lagrangian::bounded() const { return std::isfinite(upper_bound()); }

double Lagrangian::raw(std::span<const double> jet, int K) const {
  switch (kind) {
    case Kind::polynomial: {
      double v = 0.0;
      for (std::size_t j = 0; j < coefficients.size(); ++j)
        v += horner(coefficients[j], squared_norm(jet, static_cast<int>(j), K));
      if (clip) v = std::min(v, *clip);
      return v;
    }
    case Kind::bounded_rational: {
      double s = 0.0;
      for (std::size_t j = 0; j < scales.size(); ++j)
        s += scales[j] * scales[j] * squared_norm(jet, static_cast<int>(j), K);
      return amplitude * s / (1.0 + s);
    }
    case Kind::quadratic: {
      double v = 0.0;
      for (const auto& row : rows) {
        double k = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) k += row[i] * jet[i];
        v += k * k;
      }
      return strength * v;
    }
    case Kind::sigma_model: {
      double t = squared_norm(jet, 0, K) - 1.0;
      if (bounded_constraint) t = t / (1.0 + t * t);
      return strength * t * t;
    }
  }
  return 0.0;
}

double Lagrangian::operator()(std::span<const double> jet, int K) const {
  const double v = raw(jet, K);
  if (epsilon == 0.0) return v;
  return bound_value(v, lower_bound(), epsilon);
}

double bound_value(double value, double lower, double epsilon) {
  if (epsilon == 0.0) return value;
  const double s = value - lower;
  if (std::isinf(s)) return lower + 1.0 / epsilon;
  return lower + s / (epsilon * s + 1.0);
}

Lagrangian bound_lagrangian(const Lagrangian& lagrangian, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw InvalidArgument("bound_lagrangian: epsilon must be finite and >= 0, got " + std::to_string(epsilon));
  if (lagrangian.epsilon != 0.0) throw InvalidArgument("bound_lagrangian: lagrangian is already bounded");
  Lagrangian out = lagrangian;
  out.epsilon = epsilon;
  return out;
}

}  // namespace rpf
