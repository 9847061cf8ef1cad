#include "rpfield/lattice.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "rpfield/error.hpp"

namespace rpf {

LatticeSpec LatticeSpec::build(int dim, int sites, double length, int components) {
  if (dim < 1) throw InvalidArgument("lattice dimension must be >= 1, got " + std::to_string(dim));
  if (sites < 2) throw InvalidArgument("lattice needs at least 2 sites per axis, got " + std::to_string(sites));
  if (sites % 2 != 0)
    throw InvalidArgument("sites per axis must be even (symmetric momentum grid), got " + std::to_string(sites));
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("lattice length must be positive and finite");
  if (components < 1) throw InvalidArgument("field components must be >= 1");
  double total = std::pow(static_cast<double>(sites), dim);
  if (total > 1e9) throw InvalidArgument("lattice too large");
  return LatticeSpec{dim, sites, length, components};
}

std::size_t LatticeSpec::volume() const {
  std::size_t v = 1;
  for (int i = 0; i < dim; ++i) v *= static_cast<std::size_t>(sites);
  return v;
}

double LatticeSpec::cell_volume() const { return std::pow(spacing(), dim); }

double LatticeSpec::momentum(int fft_index) const {
  return 2.0 * std::numbers::pi * wavenumber(fft_index) / length;
}

void LatticeSpec::unravel(std::size_t flat, std::span<int> index) const {
  for (int axis = dim - 1; axis >= 0; --axis) {
    index[static_cast<std::size_t>(axis)] = static_cast<int>(flat % static_cast<std::size_t>(sites));
    flat /= static_cast<std::size_t>(sites);
  }
}

std::size_t LatticeSpec::ravel(std::span<const int> index) const {
  std::size_t flat = 0;
  for (int axis = 0; axis < dim; ++axis) {
    int i = index[static_cast<std::size_t>(axis)] % sites;
    if (i < 0) i += sites;
    flat = flat * static_cast<std::size_t>(sites) + static_cast<std::size_t>(i);
  }
  return flat;
}

std::vector<double> LatticeSpec::position(std::size_t site) const {
  std::vector<int> idx(static_cast<std::size_t>(dim));
  unravel(site, idx);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) x[static_cast<std::size_t>(a)] = coordinate(idx[static_cast<std::size_t>(a)]);
  return x;
}

std::vector<double> momentum_table(const LatticeSpec& spec) {
  const std::size_t vol = spec.volume();
  const auto d = static_cast<std::size_t>(spec.dim);
  std::vector<double> table(vol * d);
  std::vector<int> idx(d);
  for (std::size_t m = 0; m < vol; ++m) {
    spec.unravel(m, idx);
    for (std::size_t a = 0; a < d; ++a) table[m * d + a] = spec.momentum(idx[a]);
  }
  return table;
}

std::vector<double> momentum_squared_table(const LatticeSpec& spec) {
  const auto table = momentum_table(spec);
  const std::size_t vol = spec.volume();
  const auto d = static_cast<std::size_t>(spec.dim);
  std::vector<double> p2(vol, 0.0);
  for (std::size_t m = 0; m < vol; ++m)
    for (std::size_t a = 0; a < d; ++a) p2[m] += table[m * d + a] * table[m * d + a];
  return p2;
}

LatticeField::LatticeField(const LatticeSpec& spec) : spec_(spec), data_(spec.size(), 0.0) {}

LatticeField::LatticeField(const LatticeSpec& spec, std::vector<double> data) : spec_(spec), data_(std::move(data)) {
  if (data_.size() != spec_.size())
    throw InvalidArgument("field data length " + std::to_string(data_.size()) + " does not match K*N^D = " +
                          std::to_string(spec_.size()));
}

std::span<double> LatticeField::component(int c) {
  return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * spec_.volume(), spec_.volume());
}

std::span<const double> LatticeField::component(int c) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * spec_.volume(), spec_.volume());
}

bool LatticeField::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

SpectralField::SpectralField(const LatticeSpec& spec) : spec_(spec), data_(spec.size(), Complex{}) {}

std::span<Complex> SpectralField::component(int c) {
  return std::span<Complex>(data_).subspan(static_cast<std::size_t>(c) * spec_.volume(), spec_.volume());
}

std::span<const Complex> SpectralField::component(int c) const {
  return std::span<const Complex>(data_).subspan(static_cast<std::size_t>(c) * spec_.volume(), spec_.volume());
}

namespace {

// exp(-i p x0) with x0 = -L/2 on every axis is (-1)^k; k and the FFT index
// have the same parity because N is even.
void apply_corner_phase(const LatticeSpec& spec, std::span<Complex> values, double scale) {
  const std::size_t vol = spec.volume();
  std::vector<int> idx(static_cast<std::size_t>(spec.dim));
  for (std::size_t m = 0; m < vol; ++m) {
    spec.unravel(m, idx);
    int parity = 0;
    for (int i : idx) parity += i;
    values[m] *= (parity % 2 == 0) ? scale : -scale;
  }
}

}  // namespace

void transform_forward(const LatticeSpec& spec, std::span<Complex> values) {
  detail::fft(values.data(), spec.dim, spec.sites, -1);
  apply_corner_phase(spec, values, spec.cell_volume());
}

void transform_inverse(const LatticeSpec& spec, std::span<Complex> values) {
  apply_corner_phase(spec, values, 1.0 / std::pow(spec.length, spec.dim));
  detail::fft(values.data(), spec.dim, spec.sites, +1);
}

void apply_filter(const LatticeSpec& spec, std::span<Complex> values, std::span<const double> multiplier) {
  detail::fft(values.data(), spec.dim, spec.sites, -1);
  const double scale = 1.0 / static_cast<double>(spec.volume());
  for (std::size_t m = 0; m < values.size(); ++m) values[m] *= multiplier[m] * scale;
  detail::fft(values.data(), spec.dim, spec.sites, +1);
}

SpectralField dft_forward(const LatticeField& field) {
  if (!field.all_finite()) throw InvalidArgument("dft_forward: field has non-finite entries");
  const auto& spec = field.spec();
  SpectralField out(spec);
  for (int c = 0; c < spec.components; ++c) {
    auto src = field.component(c);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
    transform_forward(spec, dst);
  }
  return out;
}

LatticeField dft_inverse(const SpectralField& spectral) {
  const auto& spec = spectral.spec();
  for (const auto& v : spectral.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidArgument("dft_inverse: spectrum has non-finite entries");
  LatticeField out(spec);
  std::vector<Complex> work(spec.volume());
  for (int c = 0; c < spec.components; ++c) {
    auto src = spectral.component(c);
    std::copy(src.begin(), src.end(), work.begin());
    transform_inverse(spec, work);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < work.size(); ++i) dst[i] = work[i].real();
  }
  return out;
}

LatticeField laplacian_power(const LatticeField& field, int power) {
  if (power < 0) throw InvalidArgument("laplacian_power: power must be >= 0");
  if (power == 0) return field;
  const auto& spec = field.spec();
  const auto p2 = momentum_squared_table(spec);
  LatticeField out(spec);
  std::vector<Complex> work(spec.volume());
  for (int c = 0; c < spec.components; ++c) {
    auto src = field.component(c);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = src[i];
    transform_forward(spec, work);
    for (std::size_t m = 0; m < work.size(); ++m) work[m] *= std::pow(-p2[m], power);
    transform_inverse(spec, work);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < work.size(); ++i) dst[i] = work[i].real();
  }
  return out;
}

}  // namespace rpf
