#include "rpfield/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rpfield/error.hpp"
#include "rpfield/random.hpp"

namespace rpf {

EuclideanTransform EuclideanTransform::translation(std::vector<int> steps) {
  EuclideanTransform t;
  t.kind = Kind::translation;
  t.steps = std::move(steps);
  return t;
}

EuclideanTransform EuclideanTransform::axis_permutation(std::vector<int> permutation) {
  EuclideanTransform t;
  t.kind = Kind::permutation;
  t.permutation = std::move(permutation);
  return t;
}

EuclideanTransform EuclideanTransform::axis_flip(int axis) {
  EuclideanTransform t;
  t.kind = Kind::flip;
  t.axis = axis;
  return t;
}

void EuclideanTransform::validate(const LatticeSpec& spec) const {
  const auto D = static_cast<std::size_t>(spec.dim);
  switch (kind) {
    case Kind::identity:
      return;
    case Kind::translation:
      if (steps.size() != D) throw InvalidArgument("translation needs one step count per axis");
      return;
    case Kind::permutation: {
      if (permutation.size() != D) throw InvalidArgument("axis permutation needs D entries");
      auto sorted = permutation;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t a = 0; a < D; ++a)
        if (sorted[a] != static_cast<int>(a)) throw InvalidArgument("axis permutation is not a permutation of 0..D-1");
      return;
    }
    case Kind::flip:
      if (axis < 0 || axis >= spec.dim) throw InvalidArgument("flip axis out of range");
      return;
  }
}

std::vector<double> EuclideanTransform::apply(std::span<const double> x, const LatticeSpec& spec) const {
  validate(spec);
  std::vector<double> y(x.begin(), x.end());
  switch (kind) {
    case Kind::identity:
      break;
    case Kind::translation:
      for (std::size_t a = 0; a < y.size(); ++a) y[a] += steps[a] * spec.spacing();
      break;
    case Kind::permutation:
      for (std::size_t a = 0; a < y.size(); ++a) y[a] = x[static_cast<std::size_t>(permutation[a])];
      break;
    case Kind::flip:
      y[static_cast<std::size_t>(axis)] = -y[static_cast<std::size_t>(axis)];
      break;
  }
  return y;
}

std::size_t EuclideanTransform::apply_site(std::size_t site, const LatticeSpec& spec) const {
  const int N = spec.sites;
  std::vector<int> idx(static_cast<std::size_t>(spec.dim)), out;
  spec.unravel(site, idx);
  out = idx;
  switch (kind) {
    case Kind::identity:
      break;
    case Kind::translation:
      for (std::size_t a = 0; a < idx.size(); ++a) out[a] = ((idx[a] + steps[a]) % N + N) % N;
      break;
    case Kind::permutation:
      for (std::size_t a = 0; a < idx.size(); ++a) out[a] = idx[static_cast<std::size_t>(permutation[a])];
      break;
    case Kind::flip:
      out[static_cast<std::size_t>(axis)] = (N - idx[static_cast<std::size_t>(axis)]) % N;
      break;
  }
  return spec.ravel(out);
}

TestFunction apply_transform(const TestFunction& tf, const EuclideanTransform& T, const LatticeSpec& spec) {
  if (tf.dim() != spec.dim) throw InvalidArgument("test function dimension does not match lattice");
  TestFunction out = tf;
  out.center = T.apply(tf.center, spec);
  out.check_fits(spec);
  return out;
}

CylindricalFunction apply_transform(const CylindricalFunction& F, const EuclideanTransform& T, const LatticeSpec& spec) {
  CylindricalFunction out = F;
  for (auto& g : out.inner) g = apply_transform(g, T, spec);
  return out;
}

LatticeField apply_transform(const LatticeField& field, const EuclideanTransform& T) {
  const auto& spec = field.spec();
  T.validate(spec);
  LatticeField out(spec);
  const std::size_t vol = spec.volume();
  for (std::size_t s = 0; s < vol; ++s) {
    const std::size_t t = T.apply_site(s, spec);
    for (int c = 0; c < spec.components; ++c) out.at(c, t) = field.at(c, s);
  }
  return out;
}

// ---------------------------------------------------------------------------

void check_upper_support(const std::vector<CylindricalFunction>& Fs, const CutoffPoint& point) {
  const double two_delta = 2.0 * point.delta();
  for (std::size_t i = 0; i < Fs.size(); ++i)
    for (const auto& g : Fs[i].inner) {
      const double low = g.center.back() - g.reach();
      if (!(low > two_delta))
        throw SupportError("F_" + std::to_string(i) + " has a test function reaching x_D = " + std::to_string(low) +
                           ", not inside Pi+_{2 delta} with 2 delta = " + std::to_string(two_delta));
    }
}

namespace {

Region split_region(int dim, const CutoffPoint& point) {
  const double d2 = 2.0 * point.delta();
  return Region::union_of({Region::upper_cap(dim, point.r, d2), Region::lower_cap(dim, point.r, d2)});
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct GramInputs {
  std::vector<std::vector<double>> values;     // F_i per sample
  std::vector<std::vector<double>> reflected;  // Theta F_i per sample
};

RpGram gram_from(const GramInputs& in, std::span<const double> actions, double min_ess) {
  const std::size_t m = in.values.size();
  const std::size_t S = actions.size();
  RpGram out;
  out.samples = S;
  const auto w = boltzmann_weights(actions, min_ess, &out.ess);
  out.gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  out.error = out.gram;
  double den = 0.0;
  for (std::size_t s = 0; s < S; ++s) den += w[s];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double num = 0.0;
      for (std::size_t s = 0; s < S; ++s) num += w[s] * in.reflected[i][s] * in.values[j][s];
      out.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = num / den;
      const auto jk = jackknife(
          S, 2,
          [&](std::size_t s, std::span<double> r) {
            r[0] = w[s] * in.reflected[i][s] * in.values[j][s];
            r[1] = w[s];
          },
          [](std::span<const double> t) { return t[0] / t[1]; });
      out.error(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = jk.error;
    }
  out.symmetric = 0.5 * (out.gram + out.gram.transpose());
  out.min_eigenvalue = min_eigenvalue(out.symmetric);
  const auto jk = jackknife(
      S, m * m + 1,
      [&](std::size_t s, std::span<double> r) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) r[i * m + j] = w[s] * in.reflected[i][s] * in.values[j][s];
        r[m * m] = w[s];
      },
      [m](std::span<const double> t) {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i * m + j] / t[m * m];
        return min_eigenvalue(0.5 * (g + g.transpose()));
      });
  out.min_eigenvalue_error = jk.error;
  for (Eigen::Index i = 0; i < out.gram.rows(); ++i)
    for (Eigen::Index j = 0; j < out.gram.cols(); ++j) {
      const double diff = 0.5 * std::abs(out.gram(i, j) - out.gram(j, i));
      const double scale = 3.0 * out.error(i, j);
      if (diff == 0.0) continue;
      out.asymmetry = std::max(out.asymmetry, scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity());
    }
  return out;
}

struct PreparedRp {
  ObservableSet obs;
  std::vector<std::size_t> direct, reflected;
};

PreparedRp prepare_rp(const std::vector<CylindricalFunction>& Fs, const CutoffPoint& point, const LatticeSpec& spec) {
  if (Fs.empty()) throw InvalidArgument("rp_gram needs at least one cylindrical function");
  check_upper_support(Fs, point);
  PreparedRp p;
  const auto theta = EuclideanTransform::time_reflection(spec.dim);
  for (const auto& F : Fs) p.direct.push_back(p.obs.add(F));
  for (const auto& F : Fs) p.reflected.push_back(p.obs.add(apply_transform(F, theta, spec)));
  return p;
}

GramInputs gram_inputs(const PreparedRp& p, const SampleTable& table) {
  GramInputs in;
  for (std::size_t i = 0; i < p.direct.size(); ++i) {
    in.values.push_back(p.obs.values(p.direct[i], table));
    in.reflected.push_back(p.obs.values(p.reflected[i], table));
  }
  return in;
}

}  // namespace

RpGram rp_gram(const std::vector<CylindricalFunction>& Fs, const Lagrangian& lagrangian, const CutoffPoint& point,
               const LatticeSpec& spec, const MonteCarloConfig& mc, RpRegion region) {
  const auto p = prepare_rp(Fs, point, spec);
  SamplingPlan plan;
  plan.spec = spec;
  plan.Lambda = point.Lambda;
  plan.terms = {{lagrangian, region == RpRegion::full_ball ? Region::centered_ball(spec.dim, point.r)
                                                           : split_region(spec.dim, point)}};
  plan.probes = p.obs.probes();
  const auto table = draw_samples(plan, mc);
  return gram_from(gram_inputs(p, table), table.actions[0], mc.min_ess);
}

RpCrossCheck rp_cross_check(const std::vector<CylindricalFunction>& Fs, const Lagrangian& lagrangian,
                            const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc) {
  const auto p = prepare_rp(Fs, point, spec);
  SamplingPlan plan;
  plan.spec = spec;
  plan.Lambda = point.Lambda;
  plan.terms = {{lagrangian, Region::centered_ball(spec.dim, point.r)}, {lagrangian, split_region(spec.dim, point)}};
  plan.probes = p.obs.probes();
  const auto table = draw_samples(plan, mc);
  const auto in = gram_inputs(p, table);
  RpCrossCheck out;
  out.full = gram_from(in, table.actions[0], mc.min_ess);
  out.split = gram_from(in, table.actions[1], mc.min_ess);
  out.max_difference = (out.full.gram - out.split.gram).cwiseAbs().maxCoeff();
  out.slab_volume = Region::slab(spec.dim, point.r, 2.0 * point.delta()).lattice_volume(spec);
  double sup = 0.0;
  for (const auto& F : Fs) sup = std::max(sup, F.sup_norm());
  const double M = std::max(0.0, lagrangian.upper_bound() - lagrangian.lower_bound());
  out.bound = 2.0 * sup * sup * std::expm1(M * out.slab_volume);
  return out;
}

Eigen::MatrixXd free_cosine_gram(const std::vector<CylindricalFunction>& Fs, const LatticeSpec& spec) {
  const auto theta = EuclideanTransform::time_reflection(spec.dim);
  // list every (possibly reflected) inner function with its frequency
  std::vector<std::vector<double>> samples;
  struct Linear {
    std::vector<std::size_t> direct, reflected;
    std::vector<double> freq;
  };
  std::vector<Linear> lin;
  for (const auto& F : Fs) {
    if (F.outer.kind != OuterFunction::Kind::cosine)
      throw InvalidArgument("free_cosine_gram: only cosine cylindricals have a closed form");
    Linear l;
    l.freq = F.outer.weights;
    for (const auto& g : F.inner) {
      l.direct.push_back(samples.size());
      samples.push_back(g.sample(spec));
      l.reflected.push_back(samples.size());
      samples.push_back(apply_transform(g, theta, spec).sample(spec));
    }
    lin.push_back(std::move(l));
  }
  const std::size_t n = samples.size();
  Eigen::MatrixXd C(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      const double v = lattice_covariance(samples[a], samples[b], spec);
      C(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      C(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  auto variance = [&](std::size_t i, std::size_t j, double sign) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < lin[i].reflected.size(); ++k) w(static_cast<Eigen::Index>(lin[i].reflected[k])) += lin[i].freq[k];
    for (std::size_t k = 0; k < lin[j].direct.size(); ++k) w(static_cast<Eigen::Index>(lin[j].direct[k])) += sign * lin[j].freq[k];
    return w.dot(C * w);
  };
  const auto m = static_cast<Eigen::Index>(Fs.size());
  Eigen::MatrixXd G(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& fi = Fs[static_cast<std::size_t>(i)].outer;
      const auto& fj = Fs[static_cast<std::size_t>(j)].outer;
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      G(i, j) = fi.amplitude * fj.amplitude * 0.5 *
                (std::cos(fi.phase - fj.phase) * std::exp(-0.5 * variance(ui, uj, -1.0)) +
                 std::cos(fi.phase + fj.phase) * std::exp(-0.5 * variance(ui, uj, +1.0)));
    }
  return G;
}

// ---------------------------------------------------------------------------

InvarianceGap invariance_gap(const CylindricalFunction& F, const EuclideanTransform& T, const Lagrangian& lagrangian,
                             const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc, double c0) {
  ObservableSet obs;
  const auto i0 = obs.add(F);
  const auto i1 = obs.add(apply_transform(F, T, spec));
  SamplingPlan plan;
  plan.spec = spec;
  plan.Lambda = point.Lambda;
  plan.terms = {{lagrangian, Region::centered_ball(spec.dim, point.r)}};
  plan.probes = obs.probes();
  const auto table = draw_samples(plan, mc);
  const auto v = obs.values(i0, table);
  const auto vt = obs.values(i1, table);
  InvarianceGap out;
  out.samples = table.samples;
  const auto w = boltzmann_weights(table.actions[0], mc.min_ess, &out.ess);
  double num = 0.0, numt = 0.0, den = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    num += w[s] * v[s];
    numt += w[s] * vt[s];
    den += w[s];
  }
  out.value = num / den;
  out.value_T = numt / den;
  out.gap = std::abs(out.value_T - out.value);
  if (v != vt) {
    const auto jk = jackknife(
        w.size(), 2,
        [&](std::size_t s, std::span<double> r) {
          r[0] = w[s] * (vt[s] - v[s]);
          r[1] = w[s];
        },
        [](std::span<const double> t) { return t[0] / t[1]; });
    out.error = jk.error;
  }
  out.ratio = point.M * std::pow(point.r, spec.dim - 1) / point.Lambda;
  out.c0 = c0;
  out.bound = F.sup_norm() * c0 * out.ratio;
  return out;
}

Calibration calibrate_invariance(const CylindricalFunction& F, const EuclideanTransform& T, const Lagrangian& lagrangian,
                                 const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc) {
  Calibration cal;
  MonteCarloConfig side = mc;
  side.seed = cal.seed = splitmix64(mc.seed ^ 0xC0FFEEULL);
  cal.run = invariance_gap(F, T, lagrangian, point, spec, side, 0.0);
  const double scale = F.sup_norm() * cal.run.ratio;
  if (!(scale > 0.0)) throw InvalidArgument("calibrate_invariance: |f| * ratio must be positive");
  cal.c0 = (cal.run.gap + 3.0 * cal.run.error) / scale;
  return cal;
}

// ---------------------------------------------------------------------------

MarkovResult markov_check(const LatticeSpec& spec, int band_width, int band_offset,
                          const std::vector<std::pair<std::size_t, std::size_t>>& probes) {
  const int N = spec.sites;
  const std::size_t vol = spec.volume();
  if (vol > 4096) throw InvalidArgument("markov_check: N^D must not exceed 4096 for the dense Schur complement");
  if (band_width < 0 || 2 * band_width >= N) throw InvalidArgument("markov_check: band width must lie in [0, N/2)");
  const int half = N / 2;
  // 0 = band, 1 = side A, 2 = side B
  std::vector<int> label(vol);
  std::vector<int> idx(static_cast<std::size_t>(spec.dim));
  for (std::size_t s = 0; s < vol; ++s) {
    spec.unravel(s, idx);
    const int t = ((idx.back() - band_offset) % N + N) % N;
    if (t < band_width || (t >= half && t < half + band_width))
      label[s] = 0;
    else
      label[s] = t < half ? 1 : 2;
  }

  const double h = spec.spacing();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vol), static_cast<Eigen::Index>(vol));
  std::vector<int> nb(idx.size());
  for (std::size_t s = 0; s < vol; ++s) {
    spec.unravel(s, idx);
    const auto is = static_cast<Eigen::Index>(s);
    Q(is, is) += 2.0 * spec.dim / (h * h) + 1.0;
    for (int a = 0; a < spec.dim; ++a)
      for (int d : {-1, 1}) {
        nb = idx;
        nb[static_cast<std::size_t>(a)] = ((idx[static_cast<std::size_t>(a)] + d) % N + N) % N;
        Q(is, static_cast<Eigen::Index>(spec.ravel(nb))) -= 1.0 / (h * h);
      }
  }
  Q *= spec.cell_volume();

  std::vector<std::pair<std::size_t, std::size_t>> pairs = probes;
  if (pairs.empty()) {
    for (std::size_t x = 0; x < vol; ++x)
      for (std::size_t y = 0; y < vol; ++y)
        if (label[x] == 1 && label[y] == 2) pairs.emplace_back(x, y);
  }
  for (const auto& [x, y] : pairs) {
    if (x >= vol || y >= vol) throw InvalidArgument("markov_check: probe site out of range");
    const bool opposite = (label[x] == 1 && label[y] == 2) || (label[x] == 2 && label[y] == 1);
    if (!opposite)
      throw SupportError("markov_check: band does not separate probe sites " + std::to_string(x) + " and " +
                         std::to_string(y));
  }

  std::vector<Eigen::Index> free_sites, position(vol, -1);
  MarkovResult out;
  for (std::size_t s = 0; s < vol; ++s) {
    if (label[s] == 0) {
      ++out.band_sites;
      continue;
    }
    ++out.side_sites[label[s] - 1];
    position[s] = static_cast<Eigen::Index>(free_sites.size());
    free_sites.push_back(static_cast<Eigen::Index>(s));
  }
  const auto nu = static_cast<Eigen::Index>(free_sites.size());
  Eigen::MatrixXd Quu(nu, nu);
  for (Eigen::Index i = 0; i < nu; ++i)
    for (Eigen::Index j = 0; j < nu; ++j) Quu(i, j) = Q(free_sites[static_cast<std::size_t>(i)], free_sites[static_cast<std::size_t>(j)]);
  Eigen::LLT<Eigen::MatrixXd> llt(Quu);
  if (llt.info() != Eigen::Success) throw SolverError("markov_check: precision block is not positive definite");
  const Eigen::MatrixXd cond = llt.solve(Eigen::MatrixXd::Identity(nu, nu));
  Eigen::LLT<Eigen::MatrixXd> full(Q);
  const Eigen::MatrixXd cov = full.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  for (const auto& [x, y] : pairs) {
    out.max_abs = std::max(out.max_abs, std::abs(cond(position[x], position[y])));
    out.max_unconditioned =
        std::max(out.max_unconditioned, std::abs(cov(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))));
  }
  out.pairs = pairs.size();
  return out;
}

}  // namespace rpf
