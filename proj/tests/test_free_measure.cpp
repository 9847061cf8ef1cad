#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "rpfield/error.hpp"
#include "rpfield/estimator.hpp"
#include "rpfield/free_measure.hpp"
#include "rpfield/random.hpp"

using namespace rpf;

namespace {

constexpr double pi = std::numbers::pi;

// E1(x) = -Ei(-x)
double expint_e1(double x) { return -std::expint(-x); }

// Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("free covariance of gaussian bumps against closed forms") {
  const auto quad = QuadratureConfig::radial(1e-14, 1e-12);
  SUBCASE("D = 1, w = 1 gives pi e erfc(1)") {
    const auto g = TestFunction::gaussian({0.0}, 1.0, 1.0, {1.0});
    const auto r = free_covariance(g, g, quad);
    CHECK(std::abs(r.value - pi * std::exp(1.0) * std::erfc(1.0)) <= 1e-12);
    CHECK_FALSE(r.exact);
  }
  SUBCASE("D = 1, general width: pi w^2 e^{w^2} erfc(w)") {
    for (double w : {0.3, 0.5, 2.0}) {
      const auto g = TestFunction::gaussian({0.0}, w, 1.0, {1.0});
      const double ref = pi * w * w * std::exp(w * w) * std::erfc(w);
      CHECK(free_covariance(g, g, quad).value == doctest::Approx(ref).epsilon(1e-10));
    }
  }
  SUBCASE("D = 2: pi w^4 e^{w^2} E1(w^2)") {
    const double w = 0.5;
    const auto g = TestFunction::gaussian({0.0, 0.0}, w, 1.0, {1.0});
    const double ref = pi * std::pow(w, 4) * std::exp(w * w) * expint_e1(w * w);
    CHECK(free_covariance(g, g, quad).value == doctest::Approx(ref).epsilon(1e-9));
  }
  SUBCASE("D = 3: 4 pi w^6 (sqrt(pi)/(2w) - pi/2 e^{w^2} erfc(w))") {
    const double w = 0.6;
    const auto g = TestFunction::gaussian({0.0, 0.0, 0.0}, w, 1.0, {1.0});
    const double ref = 4 * pi * std::pow(w, 6) * (std::sqrt(pi) / (2 * w) - pi / 2 * std::exp(w * w) * std::erfc(w));
    CHECK(free_covariance(g, g, quad).value == doctest::Approx(ref).epsilon(1e-9));
  }
  SUBCASE("shifted pair: w^2 int exp(-p^2 w^2) cos(p c) / (p^2 + 1) dp") {
    const double w = 0.5, c = 1.3;
    const auto f = TestFunction::gaussian({0.0}, w, 1.0, {1.0});
    const auto g = TestFunction::gaussian({c}, w, 1.0, {1.0});
    const double ref =
        w * w * simpson([&](double p) { return std::exp(-p * p * w * w) * std::cos(p * c) / (p * p + 1); }, -40, 40, 200000);
    CHECK(free_covariance(f, g, quad).value == doctest::Approx(ref).epsilon(1e-9));
    CHECK(free_covariance(g, f, quad).value == doctest::Approx(ref).epsilon(1e-9));
  }
  SUBCASE("orthogonal components do not correlate") {
    const auto f = TestFunction::gaussian({0.0, 0.0}, 0.5, 1.0, {1.0, 0.0});
    const auto g = TestFunction::gaussian({0.0, 0.0}, 0.5, 1.0, {0.0, 1.0});
    const auto r = free_covariance(f, g, quad);
    CHECK(r.value == 0.0);
  }
}

TEST_CASE("lattice covariance against the real-space double sum") {
  const auto spec = LatticeSpec::build(1, 32, 6.0, 1);
  const auto f = TestFunction::gaussian({0.0}, 0.5, 1.0, {1.0});
  const auto g = TestFunction::truncated({0.7}, 0.4, 1.5, 1.0, {1.0});
  const auto fs = f.sample(spec), gs = g.sample(spec);
  const int N = spec.sites;
  const double h = spec.spacing(), L = spec.length;
  double ref = 0.0;
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      double G = 0.0;
      for (int k = -N / 2; k < N / 2; ++k) {
        const double p = 2 * pi * k / L;
        G += std::cos(p * (x - y) * h) / (p * p + 1);
      }
      ref += h * h * fs[static_cast<std::size_t>(x)] * gs[static_cast<std::size_t>(y)] * G / L;
    }
  CHECK(lattice_covariance(f, g, spec) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(lattice_covariance(fs, gs, spec) == doctest::Approx(ref).epsilon(1e-12));

  // lattice sum quadrature on a fine lattice approaches the continuum value
  const auto fine = LatticeSpec::build(1, 1024, 40.0, 1);
  const double cont = free_covariance(f, f, QuadratureConfig::radial()).value;
  CHECK(lattice_covariance(f, f, fine) == doctest::Approx(cont).epsilon(1e-6));
}

TEST_CASE("sampler: determinism, thread independence, empirical covariance") {
  const auto spec = LatticeSpec::build(2, 16, 6.0, 2);
  const auto a = sample_gff(spec, 99), b = sample_gff(spec, 99), c = sample_gff(spec, 100);
  CHECK(a.data() == b.data());
  CHECK(a.data() != c.data());
  CHECK(a.all_finite());

  const auto f = TestFunction::gaussian({0.0, 0.0}, 0.5, 1.0, {1.0, 0.0});
  const auto g = TestFunction::gaussian({0.5, 0.0}, 0.5, 1.0, {0.6, 0.8});
  SamplingPlan plan;
  plan.spec = spec;
  plan.probes = {f, g};
  MonteCarloConfig mc;
  mc.samples = 20000;
  mc.seed = 5;
  const auto t1 = draw_samples(plan, mc);
  mc.threads = 3;
  const auto t3 = draw_samples(plan, mc);
  CHECK(t1.pairings == t3.pairings);

  // sample s is sample_gff(spec, derive_seed(root, s))
  const auto s7 = sample_gff(spec, derive_seed(5, 7));
  CHECK(t1.pairings[0][7] == doctest::Approx(pairing(f.sample(spec), s7)).epsilon(1e-14));

  const std::size_t S = t1.samples;
  for (auto [i, j] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const double v = t1.pairings[static_cast<std::size_t>(i)][s] * t1.pairings[static_cast<std::size_t>(j)][s];
      m += v;
      m2 += v * v;
    }
    m /= double(S);
    const double se = std::sqrt((m2 / double(S) - m * m) / double(S));
    const double exact = lattice_covariance(plan.probes[static_cast<std::size_t>(i)], plan.probes[static_cast<std::size_t>(j)], spec);
    CHECK(std::abs(m - exact) <= 5 * se);
  }
}

TEST_CASE("mollifier") {
  for (int dim : {1, 2, 3}) {
    const Mollifier m(dim, 4.0);
    CHECK(m.fourier(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.profile(0.3) == 0.0);
    CHECK(m.profile(0.2) > 0.0);
    for (double q : {0.5, 3.0, 10.0, 40.0})
      CHECK(m.unit_fourier(q) == doctest::Approx(mollifier_fourier_direct(dim, q)).epsilon(1e-9).scale(1e-12));
  }
  // D = 1: independent midpoint integration of the normalized bump
  const auto bump = [](double x) { return std::abs(x) < 1 ? std::exp(-1.0 / (1 - x * x)) : 0.0; };
  const double Z = simpson(bump, -1, 1, 20000);
  CHECK(mollifier_normalization(1) == doctest::Approx(1.0 / Z).epsilon(1e-10));
  const Mollifier m1(1, 2.0);
  for (double p : {1.0, 6.0, 15.0}) {
    const double ref = simpson([&](double x) { return bump(x) * std::cos(p / 2.0 * x); }, -1, 1, 20000) / Z;
    CHECK(m1.fourier(p) == doctest::Approx(ref).epsilon(1e-9).scale(1e-12));
  }
  CHECK_THROWS_AS(Mollifier(1, 0.0), InvalidArgument);
}

TEST_CASE("mollify") {
  const auto spec = LatticeSpec::build(1, 64, 8.0, 1);
  LatticeField constant(spec);
  for (auto& v : constant.data()) v = 2.5;
  const auto out = mollify(constant, Mollifier(1, 4.0));
  for (double v : out.data()) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  CHECK_THROWS_AS(mollify(constant, Mollifier(1, 0.2)), InvalidArgument);

  // smoothing lowers the variance of a rough field
  const auto phi = sample_gff(spec, 3);
  const auto smooth = mollify(phi, Mollifier(1, 2.0));
  double v0 = 0.0, v1 = 0.0;
  for (std::size_t i = 0; i < spec.volume(); ++i) {
    v0 += phi.data()[i] * phi.data()[i];
    v1 += smooth.data()[i] * smooth.data()[i];
  }
  CHECK(v1 < v0);
}

TEST_CASE("snapshot round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "rpf_snapshot_test";
  std::filesystem::create_directories(dir);
  const auto spec = LatticeSpec::build(2, 8, 3.0, 2);
  const auto phi = sample_gff(spec, 12345);
  write_snapshot(phi, 12345, dir / "snap");
  std::uint64_t seed = 0;
  const auto back = read_snapshot(dir / "snap", &seed);
  CHECK(seed == 12345);
  CHECK(back.spec() == spec);
  CHECK(back.data() == phi.data());
  CHECK(std::filesystem::file_size(dir / "snap.f64") == spec.size() * 8);

  std::ifstream js(dir / "snap.json");
  const auto sidecar = nlohmann::json::parse(js);
  CHECK(sidecar["format"] == "rpfield-snapshot/1");
  CHECK(sidecar["count"] == spec.size());
  CHECK(sidecar["lattice"]["sites"] == 8);

  CHECK_THROWS_AS(read_snapshot(dir / "missing"), IoError);
  std::filesystem::resize_file(dir / "snap.f64", 16);
  CHECK_THROWS_AS(read_snapshot(dir / "snap"), IoError);
  std::filesystem::remove_all(dir);
}
