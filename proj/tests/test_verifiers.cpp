#include <doctest.h>

#include <cmath>

#include "rpfield/error.hpp"
#include "rpfield/random.hpp"
#include "rpfield/verifiers.hpp"

using namespace rpf;

namespace {

CylindricalFunction cosine_of(const TestFunction& g, double t) { return {OuterFunction::cosine({t}), {g}}; }

}  // namespace

TEST_CASE("lattice transforms preserve pairings") {
  const auto spec = LatticeSpec::build(2, 16, 8.0, 2);
  const auto phi = sample_gff(spec, 21);
  const auto g = TestFunction::gaussian({0.5, 1.0}, 0.4, 1.0, {0.6, 0.8});
  const std::vector<EuclideanTransform> Ts = {EuclideanTransform::translation({3, -2}),
                                              EuclideanTransform::axis_permutation({1, 0}),
                                              EuclideanTransform::axis_flip(0), EuclideanTransform::time_reflection(2)};
  for (const auto& T : Ts) {
    const auto Tg = apply_transform(g, T, spec);
    const auto Tphi = apply_transform(phi, T);
    const double a = pairing(Tg.sample(spec), Tphi), b = pairing(g.sample(spec), phi);
    INFO("transform " << int(T.kind) << " difference " << a - b);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  // physical action on centers
  const auto refl = apply_transform(g, EuclideanTransform::time_reflection(2), spec);
  CHECK(refl.center == std::vector<double>{0.5, -1.0});
  const auto shifted = apply_transform(g, EuclideanTransform::translation({2, 0}), spec);
  CHECK(shifted.center[0] == doctest::Approx(1.5));

  const auto flip = EuclideanTransform::axis_flip(1);
  CHECK(apply_transform(apply_transform(phi, flip), flip).data() == phi.data());
  for (std::size_t s = 0; s < spec.volume(); ++s) CHECK(flip.apply_site(flip.apply_site(s, spec), spec) == s);

  CHECK_THROWS_AS(apply_transform(g, EuclideanTransform::translation({12, 0}), spec), SupportError);
  CHECK_THROWS_AS(EuclideanTransform::axis_permutation({0, 0}).validate(spec), InvalidArgument);
}

TEST_CASE("free cosine Gram against the closed form") {
  const auto spec = LatticeSpec::build(2, 16, 8.0, 1);
  std::vector<TestFunction> gs;
  std::vector<double> ts = {1.0, 0.7, 1.3};
  for (double x : {-1.0, 0.0, 1.2}) gs.push_back(TestFunction::gaussian({x, 1.0}, 0.3, 1.0, {1.0}));
  std::vector<CylindricalFunction> Fs;
  for (std::size_t i = 0; i < gs.size(); ++i) Fs.push_back(cosine_of(gs[i], ts[i]));
  const auto G = free_cosine_gram(Fs, spec);

  // E cos X cos Y = (exp(-Var(X - Y)/2) + exp(-Var(X + Y)/2)) / 2 with X = t_i <Theta g_i, phi>
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = 0; j < gs.size(); ++j) {
      const auto th = TestFunction::gaussian({gs[i].center[0], -1.0}, 0.3, 1.0, {1.0});
      const double vi = ts[i] * ts[i] * lattice_covariance(th, th, spec);
      const double vj = ts[j] * ts[j] * lattice_covariance(gs[j], gs[j], spec);
      const double c = ts[i] * ts[j] * lattice_covariance(th, gs[j], spec);
      const double ref = 0.5 * (std::exp(-(vi + vj - 2 * c) / 2) + std::exp(-(vi + vj + 2 * c) / 2));
      CHECK(G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == doctest::Approx(ref).epsilon(1e-12));
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);

  CHECK_THROWS_AS(free_cosine_gram({CylindricalFunction(OuterFunction::bounded_rational({1.0}), {gs[0]})}, spec),
                  InvalidArgument);
}

TEST_CASE("Monte Carlo Gram with a zero Lagrangian reproduces the free Gram") {
  const auto spec = LatticeSpec::build(2, 16, 8.0, 1);
  std::vector<CylindricalFunction> Fs;
  for (double x : {-1.0, 0.5}) Fs.push_back(cosine_of(TestFunction::gaussian({x, 1.5}, 0.3, 1.0, {1.0}), 1.0));
  CutoffPoint pt;
  pt.r = 2.0;
  pt.Lambda = 8.0;
  MonteCarloConfig mc;
  mc.samples = 8000;
  mc.seed = 11;
  const auto mcg = rp_gram(Fs, Lagrangian::zero(), pt, spec, mc);
  const auto G = free_cosine_gram(Fs, spec);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(mcg.gram(i, j) - G(i, j)) <= 4 * mcg.error(i, j));
  CHECK(mcg.samples == 8000);
  CHECK(mcg.ess == doctest::Approx(8000.0));

  // the cross check bound is 2 |F_i| |F_j| (exp(M |slab|) - 1)
  const auto cc = rp_cross_check(Fs, Lagrangian::clipped_quartic(1.0, 0.5), pt, spec, mc);
  CHECK(cc.bound == doctest::Approx(2.0 * (std::exp(0.5 * cc.slab_volume) - 1.0)));
  CHECK(cc.max_difference <= cc.bound);
  const auto slab = Region::slab(2, pt.r, 2 * pt.delta());
  CHECK(cc.slab_volume == doctest::Approx(slab.lattice_volume(spec)));
}

TEST_CASE("upper support guard") {
  CutoffPoint pt;
  pt.Lambda = 4.0;  // 2 delta = 0.5
  const auto ok = cosine_of(TestFunction::gaussian({0.0, 1.0}, 0.1, 1.0, {1.0}), 1.0);
  CHECK_NOTHROW(check_upper_support({ok}, pt));
  // the gaussian reach is several widths, so this one reaches into the slab
  const auto low = cosine_of(TestFunction::gaussian({0.0, 0.6}, 0.1, 1.0, {1.0}), 1.0);
  CHECK_THROWS_AS(check_upper_support({ok, low}, pt), SupportError);
}

TEST_CASE("invariance gap on shared samples") {
  const auto spec = LatticeSpec::build(1, 64, 16.0, 1);
  const auto F = cosine_of(TestFunction::gaussian({0.0}, 0.5, 1.0, {1.0}), 1.0);
  const auto T = EuclideanTransform::translation({4});
  CutoffPoint pt;
  pt.r = 2.0;
  pt.Lambda = 4.0;
  pt.M = 0.5;
  MonteCarloConfig mc;
  mc.samples = 4000;
  mc.seed = 2;
  // without interaction the free measure is exactly invariant
  const auto free = invariance_gap(F, T, Lagrangian::zero(), pt, spec, mc, 1.0);
  CHECK(free.gap <= 4 * free.error);
  CHECK(free.ratio == doctest::Approx(0.5 / 4.0));
  CHECK(free.bound == doctest::Approx(free.ratio));
  CHECK(free.gap == doctest::Approx(std::abs(free.value_T - free.value)));

  const auto cal = calibrate_invariance(F, T, Lagrangian::clipped_quartic(1.0, 0.5), pt, spec, mc);
  CHECK(cal.seed == splitmix64(2 ^ 0xC0FFEE));
  CHECK(cal.c0 == doctest::Approx((cal.run.gap + 3 * cal.run.error) / cal.run.ratio));
}

TEST_CASE("Markov property of the nearest-neighbour lattice field") {
  for (auto [dim, N] : {std::pair{1, 32}, std::pair{2, 16}}) {
    const auto spec = LatticeSpec::build(dim, N, 8.0, 1);
    const auto r = markov_check(spec, 1, 0);
    CHECK(r.max_abs <= 1e-10);
    CHECK(r.max_unconditioned > 1e-6);
    CHECK(r.pairs > 0);
    CHECK(r.band_sites + r.side_sites[0] + r.side_sites[1] == spec.volume());
  }

  // independent oracle: Schur complement of the covariance itself
  const auto spec = LatticeSpec::build(1, 16, 8.0, 1);
  const int N = 16;
  const double h = spec.spacing();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    Q(i, i) = h * (2.0 / (h * h) + 1.0);
    Q(i, (i + 1) % N) -= h / (h * h);
    Q(i, (i + N - 1) % N) -= h / (h * h);
  }
  const Eigen::MatrixXd C = Q.inverse();
  const std::vector<int> band = {0, 8}, side = {1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15};
  Eigen::MatrixXd Cbb(2, 2), Csb(14, 2), Css(14, 14);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) Cbb(i, j) = C(band[i], band[j]);
  for (int i = 0; i < 14; ++i) {
    for (int j = 0; j < 2; ++j) Csb(i, j) = C(side[i], band[j]);
    for (int j = 0; j < 14; ++j) Css(i, j) = C(side[i], side[j]);
  }
  const Eigen::MatrixXd cond = Css - Csb * Cbb.inverse() * Csb.transpose();
  CHECK(std::abs(cond(2, 10)) <= 1e-12);  // sites 3 and 12 sit on opposite sides
  CHECK(std::abs(cond(2, 3)) > 1e-4);    // sites 3 and 4 do not

  CHECK_THROWS_AS(markov_check(LatticeSpec::build(2, 128, 8.0, 1), 1, 0), InvalidArgument);
  CHECK_THROWS_AS(markov_check(spec, 8, 0), InvalidArgument);
  CHECK_THROWS_AS(markov_check(spec, 1, 0, {{3, 4}}), SupportError);
  CHECK(markov_check(spec, 1, 0, {{3, 12}}).max_abs <= 1e-12);
}
