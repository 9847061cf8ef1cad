// Acceptance run: one PASS/FAIL line per criterion, each with its runtime limit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "rpfield/constraints.hpp"
#include "rpfield/estimator.hpp"
#include "rpfield/verifiers.hpp"

using namespace rpf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failed = 0;

void criterion(int id, const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = t < limit_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failed;
  std::printf("%s %d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), t,
              limit_seconds, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

ConstraintSet single(DiffOperator op) {
  ConstraintSet cs;
  cs.ops.push_back(std::move(op));
  return cs;
}

}  // namespace

int main() {
  criterion(1, "penalty convergence to the projected covariance", 120, [] {
    const auto f = TestFunction::gaussian({0.0, 0.0}, 0.5, 1.0, {1.0, 0.0});
    const auto div = single(DiffOperator::divergence(2));
    const auto quad = QuadratureConfig::radial();
    const Mollifier moll(2, 32.0);
    const double target = constrained_covariance(f, f, div, quad).value;
    std::vector<double> gaps;
    for (double a : {10.0, 100.0, 1000.0, 10000.0})
      gaps.push_back(std::abs(penalized_covariance(f, f, div, a, moll, quad).value - target));
    bool decreasing = true, ratios_ok = true;
    std::string rs;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      decreasing = decreasing && gaps[i] < gaps[i - 1];
      const double q = gaps[i - 1] / gaps[i];
      ratios_ok = ratios_ok && q >= 5.0 && q <= 20.0;
      rs += fmt(" %.3g", q);
    }
    const double rel = gaps.back() / std::abs(target);
    return Outcome{decreasing && ratios_ok && rel < 1e-3,
                   fmt("gaps %.3e %.3e %.3e %.3e, final relative %.2e (< 1e-3), ratios%s (in [5, 20])", gaps[0],
                       gaps[1], gaps[2], gaps[3], rel, rs.c_str())};
  });

  criterion(2, "free covariance closed form", 1, [] {
    const auto g = TestFunction::gaussian({0.0}, 1.0, 1.0, {1.0});
    const double ref = std::numbers::pi * std::exp(1.0) * std::erfc(1.0);
    const double v = free_covariance(g, g, QuadratureConfig::radial()).value;
    const double rel = std::abs(v - ref) / ref;
    return Outcome{rel < 1e-6, fmt("C = %.15g, pi e erfc(1) = %.15g, relative %.1e (< 1e-6)", v, ref, rel)};
  });

  criterion(3, "sampler fidelity", 3 * 120, [] {
    const auto spec = LatticeSpec::build(2, 64, 16.0, 1);
    SamplingPlan plan;
    plan.spec = spec;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(-4.0, 4.0), width(0.3, 1.0);
    for (int i = 0; i < 10; ++i) plan.probes.push_back(TestFunction::gaussian({pos(rng), pos(rng)}, width(rng), 1.0, {1.0}));
    std::vector<std::vector<double>> exact(10, std::vector<double>(10));
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) exact[i][j] = lattice_covariance(plan.probes[i], plan.probes[j], spec);
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto t0 = std::chrono::steady_clock::now();
      MonteCarloConfig mc;
      mc.samples = 100000;
      mc.seed = seed;
      const auto t = draw_samples(plan, mc);
      int fails = 0;
      double worst = 0.0;
      const double S = double(t.samples);
      for (int i = 0; i < 10; ++i)
        for (int j = i; j < 10; ++j) {
          double m = 0.0, m2 = 0.0;
          for (std::size_t s = 0; s < t.samples; ++s) {
            const double v = t.pairings[i][s] * t.pairings[j][s];
            m += v;
            m2 += v * v;
          }
          m /= S;
          const double se = std::sqrt((m2 / S - m * m) / S);
          const double z = std::abs(m - exact[i][j]) / se;
          worst = std::max(worst, z);
          if (z > 4.0) ++fails;
        }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ok = ok && fails <= 2 && secs < 120;
      detail += fmt("seed %llu: %d of 55 beyond 4 se (max %.2f se), %.1f s; ", (unsigned long long)seed, fails, worst,
                    secs);
    }
    return Outcome{ok, detail + "each seed <= 2 failures and < 120 s"};
  });

  criterion(4, "finite-volume consistency", 30, [] {
    const auto spec = LatticeSpec::build(1, 256, 16.0, 1);
    const auto f = TestFunction::gaussian({0.0}, 0.5, 1.0, {1.0});
    const auto id = single(DiffOperator::identity(1));
    const Mollifier moll(1, 4.0);
    const double finite = lattice_penalized_exact(f, f, id, 100.0, moll, 0.45 * spec.length, spec).value;
    const double inf = penalized_covariance(f, f, id, 100.0, moll, QuadratureConfig::lattice_sum_on(spec)).value;
    const double rel = std::abs(finite - inf) / std::abs(inf);
    return Outcome{rel < 0.01, fmt("C(r = 0.45 L) = %.8g, C(lattice sum) = %.8g, relative %.2e (< 0.01)", finite, inf, rel)};
  });

  criterion(5, "reflection positivity", 300, [] {
    const auto spec = LatticeSpec::build(2, 32, 8.0, 1);
    std::vector<CylindricalFunction> Fs;
    const double xs[4] = {-0.9, -0.3, 0.3, 0.9};
    for (int i = 0; i < 4; ++i)
      Fs.push_back({OuterFunction::cosine({1.5}, 1.0, 0.3 * i), {TestFunction::gaussian({xs[i], 0.9}, 0.25, 1.0, {1.0})}});
    CutoffPoint pt;
    pt.r = 2.0;
    pt.Lambda = 16.0;
    pt.M = 1.0;
    check_upper_support(Fs, pt);
    MonteCarloConfig mc;
    mc.samples = 100000;
    mc.seed = 5;
    const auto g = rp_gram(Fs, Lagrangian::clipped_quartic(1.0, 1.0), pt, spec, mc);
    const auto G0 = free_cosine_gram(Fs, spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G0 + G0.transpose()));
    const double free_min = es.eigenvalues().minCoeff();
    const bool ok = g.min_eigenvalue >= -4.0 * g.min_eigenvalue_error && free_min >= -1e-12;
    return Outcome{ok, fmt("MC min eigenvalue %.3e +- %.1e (>= -4 se), free Gram min eigenvalue %.3e (>= -1e-12)",
                           g.min_eigenvalue, g.min_eigenvalue_error, free_min)};
  });

  criterion(6, "translation invariance trend", 600, [] {
    const auto spec = LatticeSpec::build(1, 128, 32.0, 1);
    const CylindricalFunction F(OuterFunction::cosine({2.0}), {TestFunction::gaussian({0.0}, 0.5, 1.0, {1.0})});
    const auto T = EuclideanTransform::translation({2});
    const auto L = Lagrangian::clipped_quartic(1.0, 1.0);
    // r_n = n, Lambda_n = 4n, M_n = 1: ratio M r^0 / Lambda = 1 / (4n)
    const CutoffSchedule s{1, {1.0, 1.0, 0.0, 1.0}, {4.0, 1.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0}, std::nullopt};
    MonteCarloConfig mc;
    mc.samples = 20000;
    mc.seed = 7;
    const auto cal = calibrate_invariance(F, T, L, s.at(1), spec, mc);
    bool ok = check_schedule(s).pass;
    std::string detail = fmt("c0 %.4f;", cal.c0);
    std::vector<double> gaps;
    for (int n = 1; n <= 5; ++n) {
      const auto g = invariance_gap(F, T, L, s.at(n), spec, mc, cal.c0);
      const double lim = g.bound + 3.0 * g.error;
      ok = ok && g.gap <= lim;
      gaps.push_back(g.gap);
      detail += fmt(" n=%d gap %.4f <= %.4f;", n, g.gap, lim);
    }
    ok = ok && gaps[4] < gaps[0];
    return Outcome{ok, detail + fmt(" gap(5) %.4f < gap(1) %.4f", gaps[4], gaps[0])};
  });

  criterion(7, "epsilon selection and the ratio bound", 300, [] {
    const auto spec = LatticeSpec::build(1, 64, 16.0, 1);
    const CylindricalFunction F(OuterFunction::cosine({1.0}), {TestFunction::gaussian({0.0}, 0.5, 1.0, {1.0})});
    const auto L = Lagrangian::polynomial({{0.0, 1.0}});  // phi^2
    CutoffPoint pt;
    pt.r = 2.0;
    pt.Lambda = 4.0;
    bool ok = true;
    std::string detail;
    for (int n : {3, 5, 10}) {
      MonteCarloConfig sel;
      sel.samples = 4000;
      sel.seed = 100 + static_cast<std::uint64_t>(n);
      const auto e = select_epsilon(n, L, pt, spec, sel);
      MonteCarloConfig mc;
      mc.samples = 20000;
      mc.seed = 200 + static_cast<std::uint64_t>(n);
      const auto a = estimate_ratio(F, L, pt, spec, mc);
      const auto b = estimate_ratio(F, bound_lagrangian(L, e.epsilon), pt, spec, mc);
      const double diff = std::abs(a.value - b.value);
      const double lim = 2.0 * F.sup_norm() / (n - 1) + 4.0 * std::hypot(a.error, b.error);
      ok = ok && e.upper < 1.0 / n && diff <= lim;
      detail += fmt("n=%d eps %.3g discrepancy %.3g (95%% upper %.3g < %.3g), |ratio diff| %.4f <= %.4f; ", n,
                    e.epsilon, e.discrepancy, e.upper, 1.0 / n, diff, lim);
    }
    return Outcome{ok, detail};
  });

  criterion(8, "Markov property across a band", 30, [] {
    const auto a = markov_check(LatticeSpec::build(1, 32, 8.0, 1), 1, 0);
    const auto b = markov_check(LatticeSpec::build(2, 16, 8.0, 1), 1, 0);
    return Outcome{a.max_abs < 1e-10 && b.max_abs < 1e-10,
                   fmt("max conditional covariance %.2e (D=1, %zu pairs), %.2e (D=2, %zu pairs), < 1e-10", a.max_abs,
                       a.pairs, b.max_abs, b.pairs)};
  });

  criterion(9, "projector algebra", 5, [] {
    DiffOperator mixed{"mixed", 1, 3, {{{1, 0, 0}, {{0.0, 1.0, 0.0}}}, {{0, 1, 0}, {{-1.0, 0.0, 0.0}}}}};
    ConstraintSet two;
    two.ops = {DiffOperator::divergence(3), mixed};
    const std::vector<std::pair<ConstraintSet, int>> sets = {
        {single(DiffOperator::divergence(2)), 2}, {single(DiffOperator::divergence(3)), 3}, {two, 3}};
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd(0.0, 10.0);
    double idem = 0.0, herm = 0.0, kill = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const auto& [cs, dim] = sets[static_cast<std::size_t>(t % 3)];
      std::vector<double> p(static_cast<std::size_t>(dim));
      for (auto& x : p) x = nd(rng);
      const auto P = projector(cs, p, dim);
      const auto Dp = stacked_symbol(cs, p, dim);
      idem = std::max(idem, (P * P - P).cwiseAbs().maxCoeff());
      herm = std::max(herm, (P.adjoint() - P).cwiseAbs().maxCoeff());
      kill = std::max(kill, (Dp * P).cwiseAbs().maxCoeff());
    }
    return Outcome{idem <= 1e-10 && herm <= 1e-10 && kill <= 1e-10,
                   fmt("10000 momenta: max |P^2 - P| %.1e, |P* - P| %.1e, |D P| %.1e (<= 1e-10)", idem, herm, kill)};
  });

  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
