#include "rpfield/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gauss_legendre.hpp"
#include "rpfield/error.hpp"

namespace rpf {

namespace {

void check_component(const std::vector<double>& e) {
  if (e.empty()) throw InvalidArgument("test function component vector is empty");
  double n2 = 0.0;
  for (double v : e) n2 += v * v;
  if (std::abs(n2 - 1.0) > 1e-9) throw InvalidArgument("test function component vector must have unit length");
}

void check_common(const std::vector<double>& center, double width, double amplitude) {
  if (center.empty()) throw InvalidArgument("test function center is empty");
  for (double c : center)
    if (!std::isfinite(c)) throw InvalidArgument("test function center must be finite");
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("test function width must be positive");
  if (!std::isfinite(amplitude)) throw InvalidArgument("test function amplitude must be finite");
}

double truncated_radial(double s, double width, double radius) {
  if (s >= radius) return 0.0;
  const double s2 = s * s;
  return std::exp(-s2 / (2.0 * width * width) - s2 / (radius * radius - s2));
}

}  // namespace

TestFunction TestFunction::gaussian(std::vector<double> center, double width, double amplitude,
                                    std::vector<double> component) {
  check_common(center, width, amplitude);
  check_component(component);
  return TestFunction{BumpFamily::gaussian, std::move(center), width, amplitude, std::move(component), 0.0};
}

TestFunction TestFunction::truncated(std::vector<double> center, double width, double support_radius,
                                     double amplitude, std::vector<double> component) {
  check_common(center, width, amplitude);
  check_component(component);
  if (!(support_radius > 0.0)) throw InvalidArgument("truncated bump needs a positive support radius");
  return TestFunction{BumpFamily::truncated, std::move(center), width, amplitude, std::move(component),
                      support_radius};
}

double TestFunction::reach() const { return family == BumpFamily::truncated ? support_radius : 3.0 * width; }

double TestFunction::profile(std::span<const double> x) const {
  double s2 = 0.0;
  for (std::size_t a = 0; a < center.size(); ++a) s2 += (x[a] - center[a]) * (x[a] - center[a]);
  if (family == BumpFamily::gaussian) return amplitude * std::exp(-s2 / (2.0 * width * width));
  return amplitude * truncated_radial(std::sqrt(s2), width, support_radius);
}

void TestFunction::check_fits(const LatticeSpec& spec) const {
  if (dim() != spec.dim)
    throw InvalidArgument("test function dimension " + std::to_string(dim()) + " differs from lattice dimension " +
                          std::to_string(spec.dim));
  if (components() != spec.components)
    throw InvalidArgument("test function has " + std::to_string(components()) + " components, lattice has " +
                          std::to_string(spec.components));
  for (double c : center)
    if (std::abs(c) + reach() >= 0.5 * spec.length)
      throw SupportError("test function (center coordinate " + std::to_string(c) + ", reach " +
                         std::to_string(reach()) + ") does not fit inside the torus of side " +
                         std::to_string(spec.length));
}

std::vector<double> TestFunction::sample(const LatticeSpec& spec) const {
  if (dim() != spec.dim || components() != spec.components)
    throw InvalidArgument("test function shape does not match lattice");
  const std::size_t vol = spec.volume();
  std::vector<double> out(spec.size(), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(spec.dim));
  std::vector<double> x(static_cast<std::size_t>(spec.dim));
  for (std::size_t s = 0; s < vol; ++s) {
    spec.unravel(s, idx);
    // minimum image about the center, so lattice translations act exactly on the gaussian tails
    for (int a = 0; a < spec.dim; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double d = spec.coordinate(idx[ua]) - center[ua];
      x[ua] = center[ua] + d - spec.length * std::round(d / spec.length);
    }
    const double v = profile(x);
    if (v == 0.0) continue;
    for (int c = 0; c < spec.components; ++c) out[static_cast<std::size_t>(c) * vol + s] = v * component[static_cast<std::size_t>(c)];
  }
  return out;
}

namespace {

// int over [-R, R]^D of exp(-i p.y) rho(|y|) dy with an n-point product rule.
Complex truncated_transform(const TestFunction& tf, std::span<const double> p, unsigned order) {
  const auto& rule = detail::gauss_legendre(order);
  const int d = tf.dim();
  const double r = tf.support_radius;
  const std::size_t n = rule.nodes.size();

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = r * rule.nodes[i];
  // per-axis phase tables
  std::vector<Complex> phase(static_cast<std::size_t>(d) * n);
  for (int a = 0; a < d; ++a)
    for (std::size_t i = 0; i < n; ++i)
      phase[static_cast<std::size_t>(a) * n + i] = std::polar(1.0, -p[static_cast<std::size_t>(a)] * y[i]);

  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Complex total{};
  while (true) {
    double s2 = 0.0;
    double w = 1.0;
    Complex ph{1.0, 0.0};
    for (int a = 0; a < d; ++a) {
      const std::size_t i = idx[static_cast<std::size_t>(a)];
      s2 += y[i] * y[i];
      w *= rule.weights[i];
      ph *= phase[static_cast<std::size_t>(a) * n + i];
    }
    if (s2 < r * r) total += w * truncated_radial(std::sqrt(s2), tf.width, r) * ph;
    int a = d - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == n) idx[static_cast<std::size_t>(a--)] = 0;
    if (a < 0) break;
  }
  return total * std::pow(r, d);
}

}  // namespace

Complex fourier_scalar(const TestFunction& tf, std::span<const double> p) {
  if (p.size() != tf.center.size()) throw InvalidArgument("momentum dimension does not match test function");
  double p2 = 0.0;
  double pc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (!std::isfinite(p[a])) throw InvalidArgument("momentum must be finite");
    p2 += p[a] * p[a];
    pc += p[a] * tf.center[a];
  }
  const Complex shift = std::polar(1.0, -pc);
  const int d = tf.dim();
  if (tf.family == BumpFamily::gaussian) {
    const double w2 = tf.width * tf.width;
    return tf.amplitude * std::pow(2.0 * std::numbers::pi * w2, 0.5 * d) * std::exp(-0.5 * w2 * p2) * shift;
  }

  constexpr double kTarget = 1e-10;
  constexpr double kMaxNodes = 4.0e6;
  unsigned order = 32;
  Complex previous = truncated_transform(tf, p, order);
  double diff = 0.0;
  while (std::pow(2.0 * order, d) <= kMaxNodes) {
    order *= 2;
    const Complex current = truncated_transform(tf, p, order);
    diff = std::abs(current - previous);
    previous = current;
    if (diff * std::abs(tf.amplitude) <= kTarget) return tf.amplitude * current * shift;
  }
  throw QuadratureError("truncated-bump transform did not reach 1e-10 (order " + std::to_string(order) +
                            ", change " + std::to_string(diff) + ")",
                        std::abs(tf.amplitude * previous), diff * std::abs(tf.amplitude));
}

std::vector<Complex> eval_fourier(const TestFunction& tf, std::span<const double> p) {
  const Complex s = fourier_scalar(tf, p);
  std::vector<Complex> out(tf.component.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = s * tf.component[c];
  return out;
}

double pairing(std::span<const double> sampled, const LatticeField& field) {
  const auto& data = field.data();
  if (sampled.size() != data.size()) throw InvalidArgument("pairing: sample length does not match field");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += sampled[i] * data[i];
  return sum * field.spec().cell_volume();
}

// ---------------------------------------------------------------------------

OuterFunction OuterFunction::cosine(std::vector<double> frequencies, double amplitude, double phase) {
  if (frequencies.empty()) throw InvalidArgument("cosine outer function needs at least one argument");
  OuterFunction f;
  f.kind = Kind::cosine;
  f.weights = std::move(frequencies);
  f.amplitude = amplitude;
  f.phase = phase;
  return f;
}

OuterFunction OuterFunction::bounded_rational(std::vector<double> scales, double amplitude) {
  if (scales.empty()) throw InvalidArgument("rational outer function needs at least one argument");
  OuterFunction f;
  f.kind = Kind::bounded_rational;
  f.weights = std::move(scales);
  f.amplitude = amplitude;
  return f;
}

OuterFunction OuterFunction::clipped_polynomial(std::vector<std::vector<double>> coefficients, double clip) {
  if (coefficients.empty()) throw InvalidArgument("clipped polynomial needs at least one argument");
  if (!(clip > 0.0) || !std::isfinite(clip)) throw InvalidArgument("clipped polynomial needs a finite positive clip");
  OuterFunction f;
  f.kind = Kind::clipped_polynomial;
  f.coefficients = std::move(coefficients);
  f.clip = clip;
  return f;
}

OuterFunction OuterFunction::product(std::vector<OuterFunction> factors) {
  if (factors.empty()) throw InvalidArgument("product outer function needs factors");
  OuterFunction f;
  f.kind = Kind::product;
  f.factors = std::move(factors);
  return f;
}

int OuterFunction::arity() const {
  switch (kind) {
    case Kind::cosine:
    case Kind::bounded_rational:
      return static_cast<int>(weights.size());
    case Kind::clipped_polynomial:
      return static_cast<int>(coefficients.size());
    case Kind::product: {
      int n = 0;
      for (const auto& f : factors) n += f.arity();
      return n;
    }
  }
  return 0;
}

double OuterFunction::sup_norm() const {
  switch (kind) {
    case Kind::cosine:
    case Kind::bounded_rational:
      return std::abs(amplitude);
    case Kind::clipped_polynomial:
      return clip;
    case Kind::product: {
      double b = 1.0;
      for (const auto& f : factors) b *= f.sup_norm();
      return b;
    }
  }
  return 0.0;
}

double OuterFunction::operator()(std::span<const double> args) const {
  switch (kind) {
    case Kind::cosine: {
      double z = phase;
      for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * args[i];
      return amplitude * std::cos(z);
    }
    case Kind::bounded_rational: {
      double q = 1.0;
      for (std::size_t i = 0; i < weights.size(); ++i) q += (weights[i] * args[i]) * (weights[i] * args[i]);
      return amplitude / q;
    }
    case Kind::clipped_polynomial: {
      double v = 0.0;
      for (std::size_t i = 0; i < coefficients.size(); ++i) {
        double t = 1.0;
        for (double c : coefficients[i]) {
          v += c * t;
          t *= args[i];
        }
      }
      return std::clamp(v, -clip, clip);
    }
    case Kind::product: {
      double v = 1.0;
      std::size_t offset = 0;
      for (const auto& f : factors) {
        const auto k = static_cast<std::size_t>(f.arity());
        v *= f(args.subspan(offset, k));
        offset += k;
      }
      return v;
    }
  }
  return 0.0;
}

CylindricalFunction::CylindricalFunction(OuterFunction f, std::vector<TestFunction> g)
    : outer(std::move(f)), inner(std::move(g)) {
  if (outer.arity() != static_cast<int>(inner.size()))
    throw InvalidArgument("cylindrical function: outer arity " + std::to_string(outer.arity()) + " but " +
                          std::to_string(inner.size()) + " test functions");
}

double CylindricalFunction::evaluate(const LatticeField& field) const {
  std::vector<double> args;
  args.reserve(inner.size());
  for (const auto& g : inner) args.push_back(pairing(g.sample(field.spec()), field));
  return outer(args);
}

CylindricalFunction product(const CylindricalFunction& a, const CylindricalFunction& b) {
  std::vector<TestFunction> inner = a.inner;
  inner.insert(inner.end(), b.inner.begin(), b.inner.end());
  return CylindricalFunction(OuterFunction::product({a.outer, b.outer}), std::move(inner));
}

}  // namespace rpf
