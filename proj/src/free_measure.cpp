#include "rpfield/free_measure.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "atomic_write.hpp"
#include "rpfield/error.hpp"
#include "rpfield/random.hpp"

namespace rpf {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

QuadratureResult free_covariance(const TestFunction& f, const TestFunction& g, const QuadratureConfig& quad) {
  if (f.dim() != g.dim() || f.components() != g.components())
    throw InvalidArgument("free_covariance: test functions have different shapes");
  if (quad.lattice) {
    f.check_fits(*quad.lattice);
    g.check_fits(*quad.lattice);
  }
  const double overlap = dot(f.component, g.component);
  if (overlap == 0.0 || f.amplitude == 0.0 || g.amplitude == 0.0) return {0.0, 0.0, true};
  auto integrand = [&](std::span<const double> p) {
    double p2 = 0.0;
    for (double v : p) p2 += v * v;
    const Complex a = fourier_scalar(f, p);
    const Complex b = fourier_scalar(g, p);
    return overlap * (std::conj(a) * b).real() / (p2 + 1.0);
  };
  return integrate_momentum(f.dim(), integrand, quad);
}

double lattice_covariance(std::span<const double> f, std::span<const double> g, const LatticeSpec& spec) {
  if (f.size() != spec.size() || g.size() != spec.size())
    throw InvalidArgument("lattice_covariance: sample length does not match lattice");
  const auto p2 = momentum_squared_table(spec);
  const std::size_t vol = spec.volume();
  std::vector<Complex> a(vol), b(vol);
  double sum = 0.0;
  for (int c = 0; c < spec.components; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * vol;
    for (std::size_t i = 0; i < vol; ++i) {
      a[i] = f[off + i];
      b[i] = g[off + i];
    }
    transform_forward(spec, a);
    transform_forward(spec, b);
    for (std::size_t m = 0; m < vol; ++m) sum += (std::conj(a[m]) * b[m]).real() / (p2[m] + 1.0);
  }
  return sum / std::pow(spec.length, spec.dim);
}

double lattice_covariance(const TestFunction& f, const TestFunction& g, const LatticeSpec& spec) {
  f.check_fits(spec);
  g.check_fits(spec);
  return lattice_covariance(f.sample(spec), g.sample(spec), spec);
}

GffSampler::GffSampler(const LatticeSpec& spec) : spec_(spec) {
  const auto p2 = momentum_squared_table(spec);
  filter_.resize(p2.size());
  const double hd = spec.cell_volume();
  for (std::size_t m = 0; m < p2.size(); ++m) filter_[m] = 1.0 / std::sqrt(hd * (p2[m] + 1.0));
}

void GffSampler::draw(std::mt19937_64& rng, std::span<double> out, std::vector<Complex>& work) const {
  const std::size_t vol = spec_.volume();
  work.resize(vol);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < spec_.components; ++c) {
    for (std::size_t i = 0; i < vol; ++i) work[i] = normal(rng);
    apply_filter(spec_, work, filter_);
    auto dst = out.subspan(static_cast<std::size_t>(c) * vol, vol);
    for (std::size_t i = 0; i < vol; ++i) dst[i] = work[i].real();
  }
}

LatticeField GffSampler::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  LatticeField field(spec_);
  std::vector<Complex> work;
  draw(rng, field.data(), work);
  return field;
}

LatticeField sample_gff(const LatticeSpec& spec, std::uint64_t seed) { return GffSampler(spec).sample(seed); }

std::vector<double> mollifier_multiplier(const LatticeSpec& spec, const Mollifier& mollifier) {
  if (mollifier.dim() != spec.dim) throw InvalidArgument("mollifier dimension does not match lattice");
  const auto p2 = momentum_squared_table(spec);
  std::vector<double> m(p2.size());
  for (std::size_t i = 0; i < p2.size(); ++i) m[i] = mollifier.fourier(std::sqrt(p2[i]));
  return m;
}

LatticeField mollify(const LatticeField& field, const Mollifier& mollifier) {
  const auto& spec = field.spec();
  if (!(1.0 / mollifier.scale() < 0.5 * spec.length))
    throw InvalidArgument("mollifier support 1/Lambda must be smaller than L/2");
  const auto multiplier = mollifier_multiplier(spec, mollifier);
  LatticeField out(spec);
  std::vector<Complex> work(spec.volume());
  for (int c = 0; c < spec.components; ++c) {
    auto src = field.component(c);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = src[i];
    apply_filter(spec, work, multiplier);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < work.size(); ++i) dst[i] = work[i].real();
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_snapshot(const LatticeField& field, std::uint64_t seed, const std::filesystem::path& base) {
  const auto& spec = field.spec();
  std::string bytes(field.data().size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < field.data().size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(field.data()[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  nlohmann::json sidecar = {
      {"format", "rpfield-snapshot/1"},
      {"dtype", "float64-le"},
      {"layout", "component-major; site index with axis D-1 fastest; x_i = -L/2 + i*L/N"},
      {"lattice", {{"dim", spec.dim}, {"sites", spec.sites}, {"length", spec.length}, {"components", spec.components}}},
      {"count", field.data().size()},
      {"seed", seed},
  };
  auto data_path = base;
  data_path += ".f64";
  auto json_path = base;
  json_path += ".json";
  detail::write_file_atomically(data_path, bytes);
  detail::write_file_atomically(json_path, sidecar.dump(2) + "\n");
}

LatticeField read_snapshot(const std::filesystem::path& base, std::uint64_t* seed) {
  auto data_path = base;
  data_path += ".f64";
  auto json_path = base;
  json_path += ".json";
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path.string());
  nlohmann::json sidecar;
  try {
    js >> sidecar;
  } catch (const std::exception& e) {
    throw IoError("malformed snapshot sidecar " + json_path.string() + ": " + e.what());
  }
  const auto& lat = sidecar.at("lattice");
  const auto spec = LatticeSpec::build(lat.at("dim").get<int>(), lat.at("sites").get<int>(),
                                       lat.at("length").get<double>(), lat.at("components").get<int>());
  if (seed) *seed = sidecar.at("seed").get<std::uint64_t>();
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + data_path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != spec.size() * sizeof(double))
    throw IoError("snapshot " + data_path.string() + " has " + std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(spec.size() * sizeof(double)));
  std::vector<double> data(spec.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
  return LatticeField(spec, std::move(data));
}

}  // namespace rpf
