#include "rpfield/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fft.hpp"
#include "rpfield/error.hpp"
#include "rpfield/random.hpp"

namespace rpf {

std::vector<std::vector<double>> mollified_jet(const LatticeField& field, const Mollifier& mollifier, int order) {
  if (order < 0) throw InvalidArgument("jet order must be >= 0");
  std::vector<std::vector<double>> jet;
  const auto smooth = mollify(field, mollifier);
  for (int j = 0; j <= order; ++j) jet.push_back(laplacian_power(smooth, j).data());
  return jet;
}

double action_integral(const LatticeField& field, const Lagrangian& lagrangian, const Region& region,
                       const Mollifier& mollifier) {
  const auto& spec = field.spec();
  lagrangian.validate(spec.components);
  const auto sites = region.sites(spec);
  const auto jet = mollified_jet(field, mollifier, lagrangian.jet_order);
  const int K = spec.components;
  const std::size_t vol = spec.volume();
  const double lower = lagrangian.lower_bound();
  std::vector<double> x(static_cast<std::size_t>((lagrangian.jet_order + 1) * K));
  double sum = 0.0;
  for (std::size_t site : sites) {
    for (int j = 0; j <= lagrangian.jet_order; ++j)
      for (int c = 0; c < K; ++c)
        x[static_cast<std::size_t>(j * K + c)] = jet[static_cast<std::size_t>(j)][static_cast<std::size_t>(c) * vol + site];
    sum += bound_value(lagrangian.raw(x, K), lower, lagrangian.epsilon);
  }
  return spec.cell_volume() * sum;
}

// ---------------------------------------------------------------------------

std::size_t jackknife_block_size(std::size_t samples) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(samples)))));
}

JackknifeResult jackknife(std::size_t samples, std::size_t columns,
                          const std::function<void(std::size_t, std::span<double>)>& row,
                          const std::function<double(std::span<const double>)>& statistic) {
  if (samples < 2) throw InvalidArgument("jackknife needs at least 2 samples");
  const std::size_t b = jackknife_block_size(samples);
  const std::size_t blocks = samples / b;
  std::vector<double> block_sums(blocks * columns, 0.0);
  std::vector<double> buf(columns);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = std::min(s / b, blocks - 1);  // remainder joins the last block
    row(s, buf);
    for (std::size_t c = 0; c < columns; ++c) block_sums[k * columns + c] += buf[c];
  }
  std::vector<double> total(columns, 0.0);
  for (std::size_t k = 0; k < blocks; ++k)
    for (std::size_t c = 0; c < columns; ++c) total[c] += block_sums[k * columns + c];

  JackknifeResult out;
  out.blocks = blocks;
  out.value = statistic(total);
  std::vector<double> loo(columns);
  std::vector<double> theta(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    for (std::size_t c = 0; c < columns; ++c) loo[c] = total[c] - block_sums[k * columns + c];
    theta[k] = statistic(loo);
  }
  const double mean = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(blocks);
  double ss = 0.0;
  for (double t : theta) ss += (t - mean) * (t - mean);
  out.error = std::sqrt(ss * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_constant(const Lagrangian& l) {
  if (l.kind != Lagrangian::Kind::polynomial) return false;
  for (const auto& row : l.coefficients)
    for (std::size_t m = 1; m < row.size(); ++m)
      if (row[m] != 0.0) return false;
  return true;
}

struct PreparedTerm {
  const Lagrangian* lagrangian;
  std::vector<std::size_t> sites;
  double lower;
  bool constant;
  double constant_action;
};

}  // namespace

SampleTable draw_samples(const SamplingPlan& plan, const MonteCarloConfig& mc) {
  const auto& spec = plan.spec;
  if (mc.samples < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");
  if (plan.keep_site_values && plan.terms.empty()) throw InvalidArgument("site values requested without an action term");
  const int K = spec.components;
  const std::size_t vol = spec.volume();
  const double hd = spec.cell_volume();

  std::vector<PreparedTerm> terms;
  int order = -1;
  for (const auto& t : plan.terms) {
    t.lagrangian.validate(K);
    PreparedTerm p{&t.lagrangian, t.region.sites(spec), t.lagrangian.lower_bound(), is_constant(t.lagrangian), 0.0};
    if (p.constant) {
      std::vector<double> zero(static_cast<std::size_t>((t.lagrangian.jet_order + 1) * K), 0.0);
      p.constant_action = hd * static_cast<double>(p.sites.size()) *
                          bound_value(t.lagrangian.raw(zero, K), p.lower, t.lagrangian.epsilon);
    } else {
      order = std::max(order, t.lagrangian.jet_order);
    }
    terms.push_back(std::move(p));
  }
  if (plan.keep_site_values) order = std::max(order, plan.terms[0].lagrangian.jet_order);

  // multipliers sigma^(p/Lambda) (-p^2)^j / N^D on the raw FFT grid
  std::vector<std::vector<double>> multipliers;
  if (order >= 0) {
    const Mollifier moll(spec.dim, plan.Lambda);
    if (!(1.0 / plan.Lambda < 0.5 * spec.length)) throw InvalidArgument("mollifier support 1/Lambda must be smaller than L/2");
    const auto sigma = mollifier_multiplier(spec, moll);
    const auto p2 = momentum_squared_table(spec);
    for (int j = 0; j <= order; ++j) {
      std::vector<double> m(vol);
      for (std::size_t i = 0; i < vol; ++i) m[i] = sigma[i] * std::pow(-p2[i], j) / static_cast<double>(vol);
      multipliers.push_back(std::move(m));
    }
  }

  std::vector<std::vector<double>> probe_samples;
  for (const auto& g : plan.probes) {
    if (g.dim() != spec.dim || g.components() != K) throw InvalidArgument("probe test function does not match lattice");
    g.check_fits(spec);
    probe_samples.push_back(g.sample(spec));
  }

  SampleTable table;
  table.samples = mc.samples;
  table.cell_volume = hd;
  table.actions.assign(terms.size(), std::vector<double>(mc.samples));
  table.pairings.assign(plan.probes.size(), std::vector<double>(mc.samples));
  if (plan.keep_site_values) {
    table.region_sites = terms[0].sites.size();
    table.lower = terms[0].lower;
    table.site_values.assign(mc.samples * table.region_sites, 0.0);
  }

  const GffSampler sampler(spec);
  parallel_for(mc.samples, mc.threads, [&](std::size_t begin, std::size_t end) {
    LatticeField field(spec);
    std::vector<Complex> work, spectrum(vol), tmp(vol);
    std::vector<std::vector<double>> jet(static_cast<std::size_t>(order + 1), std::vector<double>(spec.size()));
    std::vector<double> x(static_cast<std::size_t>((order + 1) * K));
    for (std::size_t s = begin; s < end; ++s) {
      std::mt19937_64 rng(derive_seed(mc.seed, s));
      sampler.draw(rng, field.data(), work);
      const auto& phi = field.data();
      for (std::size_t g = 0; g < probe_samples.size(); ++g) {
        const auto& gs = probe_samples[g];
        double acc = 0.0;
        for (std::size_t i = 0; i < gs.size(); ++i) acc += gs[i] * phi[i];
        table.pairings[g][s] = hd * acc;
      }
      if (order >= 0) {
        for (int c = 0; c < K; ++c) {
          const std::size_t off = static_cast<std::size_t>(c) * vol;
          for (std::size_t i = 0; i < vol; ++i) spectrum[i] = phi[off + i];
          detail::fft(spectrum.data(), spec.dim, spec.sites, -1);
          for (int j = 0; j <= order; ++j) {
            const auto& m = multipliers[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < vol; ++i) tmp[i] = spectrum[i] * m[i];
            detail::fft(tmp.data(), spec.dim, spec.sites, +1);
            auto& dst = jet[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < vol; ++i) dst[off + i] = tmp[i].real();
          }
        }
      }
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        if (term.constant && !(t == 0 && plan.keep_site_values)) {
          table.actions[t][s] = term.constant_action;
          continue;
        }
        const auto& L = *term.lagrangian;
        const int l = L.jet_order;
        double sum = 0.0;
        for (std::size_t k = 0; k < term.sites.size(); ++k) {
          const std::size_t site = term.sites[k];
          for (int j = 0; j <= l; ++j)
            for (int c = 0; c < K; ++c)
              x[static_cast<std::size_t>(j * K + c)] =
                  jet[static_cast<std::size_t>(j)][static_cast<std::size_t>(c) * vol + site];
          const double raw = L.raw(std::span<const double>(x.data(), static_cast<std::size_t>((l + 1) * K)), K);
          if (t == 0 && plan.keep_site_values) table.site_values[s * table.region_sites + k] = raw - term.lower;
          sum += bound_value(raw, term.lower, L.epsilon);
        }
        table.actions[t][s] = hd * sum;
      }
    }
  });
  return table;
}

// ---------------------------------------------------------------------------

std::vector<double> boltzmann_weights(std::span<const double> actions, double min_ess, double* ess_out) {
  if (actions.empty()) throw InvalidArgument("no samples");
  double amin = std::numeric_limits<double>::infinity();
  for (double a : actions) {
    if (std::isnan(a)) throw DegenerateWeightsError("non-finite action", 0.0);
    amin = std::min(amin, a);
  }
  if (!std::isfinite(amin)) throw DegenerateWeightsError("every action is infinite", 0.0);
  std::vector<double> w(actions.size());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    w[i] = std::exp(-(actions[i] - amin));
    s1 += w[i];
    s2 += w[i] * w[i];
  }
  const double ess = s1 * s1 / s2;
  if (ess_out) *ess_out = ess;
  if (!(ess >= min_ess))
    throw DegenerateWeightsError("effective sample size " + std::to_string(ess) + " of " +
                                     std::to_string(actions.size()) +
                                     " samples is below the threshold; the penalty is too strong for reweighting, "
                                     "use the exact Gaussian path of the constraint engine",
                                 ess);
  return w;
}

EstimatorResult weighted_ratio(std::span<const double> actions, std::span<const double> observable, double min_ess) {
  if (actions.size() != observable.size()) throw InvalidArgument("weighted_ratio: length mismatch");
  EstimatorResult out;
  out.samples = actions.size();
  const auto w = boltzmann_weights(actions, min_ess, &out.ess);
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    num += w[s] * observable[s];
    den += w[s];
  }
  out.value = num / den;
  const auto jk = jackknife(
      w.size(), 2,
      [&](std::size_t s, std::span<double> r) {
        r[0] = w[s] * observable[s];
        r[1] = w[s];
      },
      [](std::span<const double> t) { return t[0] / t[1]; });
  out.error = jk.error;
  out.exact = std::all_of(observable.begin(), observable.end(), [&](double v) { return v == observable[0]; });
  if (out.exact) out.error = 0.0;
  return out;
}

// ---------------------------------------------------------------------------

std::size_t ObservableSet::add(const CylindricalFunction& F) {
  std::vector<std::size_t> slots;
  for (const auto& g : F.inner) {
    auto it = std::find(probes_.begin(), probes_.end(), g);
    if (it == probes_.end()) {
      probes_.push_back(g);
      slots.push_back(probes_.size() - 1);
    } else {
      slots.push_back(static_cast<std::size_t>(it - probes_.begin()));
    }
  }
  functions_.push_back(F);
  slots_.push_back(std::move(slots));
  return functions_.size() - 1;
}

double ObservableSet::value(std::size_t i, const SampleTable& table, std::size_t s) const {
  const auto& slots = slots_[i];
  double args[16];
  std::vector<double> heap;
  double* a = args;
  if (slots.size() > 16) {
    heap.resize(slots.size());
    a = heap.data();
  }
  for (std::size_t k = 0; k < slots.size(); ++k) a[k] = table.pairings[slots[k]][s];
  return functions_[i].outer(std::span<const double>(a, slots.size()));
}

std::vector<double> ObservableSet::values(std::size_t i, const SampleTable& table) const {
  std::vector<double> v(table.samples);
  for (std::size_t s = 0; s < table.samples; ++s) v[s] = value(i, table, s);
  return v;
}

EstimatorResult estimate_ratio(const CylindricalFunction& F, const Lagrangian& lagrangian, const CutoffPoint& point,
                               const LatticeSpec& spec, const MonteCarloConfig& mc) {
  ObservableSet obs;
  obs.add(F);
  SamplingPlan plan;
  plan.spec = spec;
  plan.Lambda = point.Lambda;
  plan.terms = {{lagrangian, Region::centered_ball(spec.dim, point.r)}};
  plan.probes = obs.probes();
  const auto table = draw_samples(plan, mc);
  return weighted_ratio(table.actions[0], obs.values(0, table), mc.min_ess);
}

// ---------------------------------------------------------------------------

LimitDiagnostic extract_limit(std::span<const EstimatorResult> seq, double tolerance) {
  if (seq.size() < 4) throw InvalidArgument("extract_limit needs at least 4 entries");
  LimitDiagnostic out;
  const std::size_t n = seq.size();
  out.tail.assign(seq.end() - 3, seq.end());
  out.converged = true;
  for (std::size_t k = n - 2; k < n; ++k) {
    const double diff = std::abs(seq[k].value - seq[k - 1].value);
    const double thr = std::max(tolerance, std::hypot(seq[k].error, seq[k - 1].error));
    out.cauchy = std::max(out.cauchy, diff);
    out.threshold = std::max(out.threshold, thr);
    if (!(diff <= thr)) out.converged = false;
  }
  if (out.converged) {
    double v = 0.0, e2 = 0.0;
    for (const auto& r : out.tail) {
      v += r.value;
      e2 += r.error * r.error;
    }
    out.value = v / 3.0;
    out.error = std::sqrt(e2) / 3.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

EpsilonSelection epsilon_discrepancy(const SampleTable& table, double epsilon) {
  if (table.region_sites == 0 && table.site_values.empty() && table.actions.empty())
    throw InvalidArgument("epsilon_discrepancy: table has no site values");
  const std::size_t S = table.samples;
  const std::size_t R = table.region_sites;
  std::vector<double> a(S), at(S);
  double cmin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < S; ++s) {
    double full = 0.0, bounded = 0.0;
    const double* v = table.site_values.data() + s * R;
    for (std::size_t i = 0; i < R; ++i) {
      full += v[i];
      bounded += epsilon == 0.0 ? v[i] : v[i] / (epsilon * v[i] + 1.0);
    }
    a[s] = table.cell_volume * full;
    at[s] = table.cell_volume * bounded;
    cmin = std::min(cmin, at[s]);
  }
  std::vector<double> w(S), wt(S);
  for (std::size_t s = 0; s < S; ++s) {
    w[s] = std::exp(-(a[s] - cmin));
    wt[s] = std::exp(-(at[s] - cmin));
  }
  EpsilonSelection out;
  out.epsilon = epsilon;
  out.samples = S;
  const auto jk = jackknife(
      S, 2,
      [&](std::size_t s, std::span<double> r) {
        r[0] = wt[s] - w[s];
        r[1] = w[s];
      },
      [](std::span<const double> t) { return t[1] > 0.0 ? t[0] / t[1] : std::numeric_limits<double>::infinity(); });
  out.discrepancy = jk.value;
  out.error = std::isfinite(jk.error) ? jk.error : std::numeric_limits<double>::infinity();
  out.upper = out.discrepancy + 1.645 * out.error;
  return out;
}

EpsilonSelection select_epsilon(int n, const Lagrangian& lagrangian, const CutoffPoint& point, const LatticeSpec& spec,
                                const MonteCarloConfig& mc) {
  if (n < 1) throw InvalidArgument("select_epsilon: n must be >= 1");
  if (lagrangian.epsilon != 0.0) throw InvalidArgument("select_epsilon: lagrangian is already bounded");
  const double target = 1.0 / n;
  MonteCarloConfig run = mc;
  int evaluations = 0;
  for (;;) {
    SamplingPlan plan;
    plan.spec = spec;
    plan.Lambda = point.Lambda;
    plan.terms = {{lagrangian, Region::centered_ball(spec.dim, point.r)}};
    plan.keep_site_values = true;
    const auto table = draw_samples(plan, run);
    boltzmann_weights(table.actions[0], run.min_ess);  // degenerate-weight guard on Z itself

    auto eval = [&](double eps) {
      ++evaluations;
      return epsilon_discrepancy(table, eps);
    };
    constexpr int kDecades = 30;
    EpsilonSelection pass;
    bool found = false;
    double fail_eps = 0.0;
    for (int k = 0; k <= kDecades; ++k) {
      const double eps = std::pow(10.0, 3 - k);
      auto r = eval(eps);
      if (r.upper < target) {
        pass = r;
        found = true;
        break;
      }
      fail_eps = eps;
    }
    if (found) {
      if (fail_eps > 0.0) {
        double lo = std::log(pass.epsilon), hi = std::log(fail_eps);
        for (int it = 0; it < 20; ++it) {
          const double mid = 0.5 * (lo + hi);
          auto r = eval(std::exp(mid));
          if (r.upper < target) {
            pass = r;
            lo = mid;
          } else {
            hi = mid;
          }
        }
      }
      pass.evaluations = evaluations;
      return pass;
    }
    if (run.samples * 2 > run.max_samples)
      throw BudgetError("select_epsilon: discrepancy below 1/" + std::to_string(n) +
                        " not confirmed at 95% within " + std::to_string(run.samples) + " samples");
    run.samples *= 2;
  }
}

}  // namespace rpf
