#include "rpfield/run.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>

#include "atomic_write.hpp"
#include "rpfield/error.hpp"
#include "rpfield/random.hpp"

namespace rpf {

namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Verdict verdict(std::string check, Parameters params, double statistic, std::string relation, double threshold) {
  Verdict v;
  v.check = std::move(check);
  v.parameters = std::move(params);
  v.statistic = statistic;
  v.relation = relation;
  v.threshold = threshold;
  if (relation == "<=") v.pass = statistic <= threshold;
  else if (relation == "<") v.pass = statistic < threshold;
  else if (relation == ">=") v.pass = statistic >= threshold;
  else v.pass = statistic > threshold;
  return v;
}

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

SeedChain index_chain(std::uint64_t root, int n) {
  return {"index " + std::to_string(n), derive_seed(root, static_cast<std::uint64_t>(n)),
          "derive_seed(root, " + std::to_string(n) + "); sample s uses derive_seed(chain, s)"};
}

/// Error attached to a quadrature value that met its tolerance.
void quad_result(ResultItem& item, const QuadratureResult& q) {
  item.value = q.value;
  item.exact = q.exact;
  item.error = q.error;
}

class Runner {
 public:
  Runner(const RunConfig& c, Report& r) : c_(c), r_(r) {}

  void covariance() {
    const bool constrained = c_.has_constraints && !c_.constraints.empty();
    for (const auto& [fn, gn] : c_.covariance.pairs) {
      const auto& f = c_.test_functions.at(fn);
      const auto& g = c_.test_functions.at(gn);
      ResultItem item;
      item.name = "C(" + fn + "," + gn + ")";
      if (constrained) {
        const auto q = constrained_covariance(f, g, c_.constraints, c_.quadrature);
        quad_result(item, q);
        item.parameters["near_cut_nodes"] = i64(q.near_cut_nodes);
      } else {
        quad_result(item, free_covariance(f, g, c_.quadrature));
      }
      r_.results.push_back(item);
      if (!constrained) {
        ResultItem lat;
        lat.name = "C_lattice(" + fn + "," + gn + ")";
        lat.value = lattice_covariance(f, g, c_.lattice);
        lat.exact = true;
        r_.results.push_back(lat);
      }
    }
  }

  void sample(const fs::path& dir, bool write) {
    r_.chains.push_back({"samples", c_.seed, "sample s uses derive_seed(root, s)"});
    if (c_.sample.snapshots > 0 && write) {
      const GffSampler sampler(c_.lattice);
      for (std::size_t s = 0; s < c_.sample.snapshots; ++s) {
        const auto seed = derive_seed(c_.seed, s);
        const auto base = dir / (c_.output.prefix + "-sample-" + std::to_string(s));
        write_snapshot(sampler.sample(seed), seed, base);
        r_.files.push_back(base.string() + ".f64");
        r_.files.push_back(base.string() + ".json");
      }
    }
    if (c_.sample.probes.empty()) return;

    SamplingPlan plan;
    plan.spec = c_.lattice;
    plan.Lambda = 1.0;
    for (const auto& name : c_.sample.probes) plan.probes.push_back(c_.test_functions.at(name));
    const auto table = draw_samples(plan, c_.monte_carlo(c_.seed));
    const std::size_t S = table.samples;
    const std::size_t m = plan.probes.size();

    Table t{"covariance", {"i", "j", "empirical", "stderr", "exact", "z"}, {}};
    std::size_t failures = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          const double v = table.pairings[i][s] * table.pairings[j][s];
          sum += v;
          sum2 += v * v;
        }
        const double mean = sum / static_cast<double>(S);
        const double var = std::max(0.0, sum2 / static_cast<double>(S) - mean * mean);
        const double se = std::sqrt(var / static_cast<double>(S - 1));
        const double exact = lattice_covariance(plan.probes[i], plan.probes[j], c_.lattice);
        const double z = se > 0.0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : INFINITY);
        if (!(z <= c_.sample.sigmas)) ++failures;
        worst = std::max(worst, z);
        ResultItem item;
        item.name = "Cov(" + c_.sample.probes[i] + "," + c_.sample.probes[j] + ")";
        item.value = mean;
        item.error = se;
        item.samples = S;
        item.ess = static_cast<double>(S);
        item.parameters["exact_lattice"] = exact;
        item.parameters["z"] = z;
        r_.results.push_back(item);
        t.rows.push_back({double(i), double(j), mean, se, exact, z});
      }
    }
    r_.tables.push_back(std::move(t));
    r_.verdicts.push_back(verdict("sampler-fidelity",
                                  {{"entries", i64(m * (m + 1) / 2)},
                                   {"samples", i64(S)},
                                   {"sigmas", c_.sample.sigmas},
                                   {"max_z", worst}},
                                  double(failures), "<=", double(c_.sample.allowed_failures)));
  }

  void estimate() {
    ObservableSet obs;
    for (const auto& name : c_.estimate.observables) obs.add(c_.observables.at(name));
    std::vector<std::vector<EstimatorResult>> seqs(obs.size());
    Table t{"estimate", {"n", "r", "Lambda", "M"}, {}};
    for (const auto& name : c_.estimate.observables) {
      t.columns.push_back(name);
      t.columns.push_back(name + "_stderr");
    }
    t.columns.push_back("ess");
    for (int n : c_.indices) {
      const auto pt = c_.schedule.at(n);
      r_.chains.push_back(index_chain(c_.seed, n));
      SamplingPlan plan;
      plan.spec = c_.lattice;
      plan.Lambda = pt.Lambda;
      plan.terms = {{c_.lagrangian, Region::centered_ball(c_.lattice.dim, pt.r)}};
      plan.probes = obs.probes();
      const auto table = draw_samples(plan, c_.monte_carlo(r_.chains.back().seed));
      std::vector<double> row = {double(n), pt.r, pt.Lambda, pt.M};
      double ess = 0.0;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto e = weighted_ratio(table.actions[0], obs.values(i, table), c_.min_ess);
        seqs[i].push_back(e);
        ess = e.ess;
        ResultItem item;
        item.name = "I_" + std::to_string(n) + "(" + c_.estimate.observables[i] + ")";
        item.value = e.value;
        item.error = e.error;
        item.exact = e.exact;
        item.samples = e.samples;
        item.ess = e.ess;
        item.parameters = {{"n", std::int64_t(n)}, {"r", pt.r}, {"Lambda", pt.Lambda}};
        r_.results.push_back(item);
        row.push_back(e.value);
        row.push_back(e.error);
      }
      row.push_back(ess);
      t.rows.push_back(std::move(row));
    }
    r_.tables.push_back(std::move(t));
    if (c_.indices.size() < 4) return;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto lim = extract_limit(seqs[i], c_.estimate.limit_tolerance);
      const auto& name = c_.estimate.observables[i];
      ResultItem item;
      item.name = "limit(" + name + ")";
      item.value = lim.converged ? lim.value : seqs[i].back().value;
      item.error = lim.converged ? lim.error : seqs[i].back().error;
      item.parameters["converged"] = std::int64_t(lim.converged);
      r_.results.push_back(item);
      r_.verdicts.push_back(verdict("limit-converged",
                                    {{"observable", name}, {"tolerance", c_.estimate.limit_tolerance}},
                                    lim.cauchy, "<=", lim.threshold));
    }
  }

  void constrain_sweep() {
    const auto& f = c_.test_functions.at(c_.sweep.f);
    const auto& g = c_.test_functions.at(c_.sweep.g);
    PenalizedSolveOptions opt;
    opt.method = c_.sweep.method;
    opt.dense_limit = c_.sweep.dense_limit;
    opt.tolerance = c_.sweep.solver_tolerance;
    const auto sweep =
        penalty_sweep(f, g, c_.constraints, c_.schedule, c_.indices, c_.lattice, c_.quadrature, c_.sweep.limit_tolerance, opt);

    const bool lattice_quad = c_.quadrature.scheme == QuadratureConfig::Scheme::lattice_sum;
    auto quad_error = [&](double v) { return lattice_quad ? 0.0 : std::max(c_.quadrature.abs_tol, c_.quadrature.rel_tol * std::abs(v)); };

    Table t{"sweep",
            {"n", "a", "Lambda", "r", "C_aLr", "C_aLinf", "C_kappa", "gap_r", "gap_inf", "gap_volume", "solver_residual"},
            {}};
    double worst_increase = -INFINITY, worst_residual = 0.0;
    for (std::size_t k = 0; k < sweep.rows.size(); ++k) {
      const auto& row = sweep.rows[k];
      t.rows.push_back({double(row.n), row.a, row.Lambda, row.r, row.C_aLr, row.C_aLinf, row.C_kappa, row.gap_r,
                        row.gap_inf, row.gap_volume, row.solver_residual});
      const Parameters p = {{"n", std::int64_t(row.n)}, {"a", row.a}, {"Lambda", row.Lambda}, {"r", row.r}};
      ResultItem a{"C_aLr[" + std::to_string(row.n) + "]", row.C_aLr, row.solver_residual * std::abs(row.C_aLr), false, 0, 0.0, p};
      ResultItem b{"C_aLinf[" + std::to_string(row.n) + "]", row.C_aLinf, quad_error(row.C_aLinf), lattice_quad, 0, 0.0, p};
      r_.results.push_back(a);
      r_.results.push_back(b);
      if (k > 0) worst_increase = std::max(worst_increase, row.gap_r - sweep.rows[k - 1].gap_r);
      worst_residual = std::max(worst_residual, row.solver_residual);
    }
    ResultItem kappa{"C_kappa", sweep.rows.front().C_kappa, quad_error(sweep.rows.front().C_kappa), lattice_quad, 0, 0.0, {}};
    ResultItem free{"C_free", sweep.free_value, quad_error(sweep.free_value), lattice_quad, 0, 0.0, {}};
    r_.results.push_back(kappa);
    r_.results.push_back(free);
    r_.tables.push_back(std::move(t));

    if (sweep.rows.size() >= 2) {
      r_.verdicts.push_back(verdict("gap-nonincreasing", {{"rows", i64(sweep.rows.size())}}, worst_increase, "<=", 0.0));
      r_.verdicts.push_back(verdict("final-below-first", {{"first_gap", sweep.rows.front().gap_r}},
                                    sweep.rows.back().gap_r, "<", sweep.rows.front().gap_r));
    }
    const double residual_cap = std::max(1e-8, 100.0 * c_.sweep.solver_tolerance);
    r_.verdicts.push_back(verdict("solver-residual", {{"tolerance", c_.sweep.solver_tolerance}}, worst_residual, "<=", residual_cap));
    if (sweep.rows.size() >= 4) {
      std::vector<EstimatorResult> seq;
      for (const auto& row : sweep.rows) seq.push_back({row.C_aLr, 0.0, 0, 0.0, true});
      const auto lim = extract_limit(seq, c_.sweep.limit_tolerance);
      r_.verdicts.push_back(verdict("limit-converged", {{"tolerance", c_.sweep.limit_tolerance}, {"limit", lim.value}},
                                    lim.cauchy, "<=", lim.threshold));
    }
  }

  void verify_rp() {
    std::vector<CylindricalFunction> Fs;
    for (const auto& name : c_.rp.observables) Fs.push_back(c_.observables.at(name));
    const std::size_t m = Fs.size();

    bool all_cosine = true;
    for (const auto& F : Fs) all_cosine = all_cosine && F.outer.kind == OuterFunction::Kind::cosine;
    if (all_cosine) {
      const Eigen::MatrixXd G0 = free_cosine_gram(Fs, c_.lattice);
      const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G0).eigenvalues()(0);
      ResultItem item{"free_gram_min_eigenvalue", lo, 0.0, true, 0, 0.0, {}};
      r_.results.push_back(item);
      r_.verdicts.push_back(verdict("free-gram-psd", {{"size", i64(m)}}, lo, ">=", -c_.rp.free_tolerance));
    }

    for (int n : c_.indices) {
      const auto pt = c_.schedule.at(n);
      r_.chains.push_back(index_chain(c_.seed, n));
      const auto mc = c_.monte_carlo(r_.chains.back().seed);
      RpGram g;
      if (c_.rp.cross_check) {
        const auto cc = rp_cross_check(Fs, c_.lagrangian, pt, c_.lattice, mc);
        g = cc.full;
        const double err = std::max(cc.full.error.maxCoeff(), cc.split.error.maxCoeff());
        r_.verdicts.push_back(verdict("split-vs-full",
                                      {{"n", std::int64_t(n)}, {"bound", cc.bound}, {"slab_volume", cc.slab_volume}},
                                      cc.max_difference, "<=", cc.bound + c_.rp.sigmas * err));
        ResultItem s{"split_min_eigenvalue[" + std::to_string(n) + "]", cc.split.min_eigenvalue,
                     cc.split.min_eigenvalue_error, false, cc.split.samples, cc.split.ess, {}};
        r_.results.push_back(s);
      } else {
        g = rp_gram(Fs, c_.lagrangian, pt, c_.lattice, mc);
      }
      Table t{"gram-" + std::to_string(n), {"i", "j", "G", "stderr"}, {}};
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          t.rows.push_back({double(i), double(j), g.gram(ii, jj), g.error(ii, jj)});
        }
      r_.tables.push_back(std::move(t));
      const Parameters p = {{"n", std::int64_t(n)}, {"r", pt.r}, {"Lambda", pt.Lambda}, {"asymmetry", g.asymmetry}};
      r_.results.push_back({"min_eigenvalue[" + std::to_string(n) + "]", g.min_eigenvalue, g.min_eigenvalue_error, false,
                            g.samples, g.ess, p});
      r_.verdicts.push_back(verdict("rp-min-eigenvalue", p, g.min_eigenvalue, ">=", -c_.rp.sigmas * g.min_eigenvalue_error));
    }
  }

  void verify_invariance() {
    const auto& F = c_.observables.at(c_.invariance.observable);
    const auto& T = c_.invariance.transform;
    double c0 = 0.0;
    if (c_.invariance.c0) {
      c0 = *c_.invariance.c0;
    } else {
      const auto cal = calibrate_invariance(F, T, c_.lagrangian, c_.schedule.at(c_.invariance.calibration_index),
                                            c_.lattice, c_.monte_carlo(c_.seed));
      c0 = cal.c0;
      r_.chains.push_back({"calibration", cal.seed, "splitmix64(root ^ 0xC0FFEE); sample s uses derive_seed(chain, s)"});
      r_.results.push_back({"c0", cal.c0, 3.0 * cal.run.error / (F.sup_norm() * cal.run.ratio), false, cal.run.samples,
                            cal.run.ess, {{"calibration_index", std::int64_t(c_.invariance.calibration_index)}}});
    }

    Table t{"invariance", {"n", "ratio", "gap", "stderr", "bound", "value", "value_T", "ess"}, {}};
    std::vector<InvarianceGap> gaps;
    for (int n : c_.indices) {
      const auto pt = c_.schedule.at(n);
      r_.chains.push_back(index_chain(c_.seed, n));
      const auto g = invariance_gap(F, T, c_.lagrangian, pt, c_.lattice, c_.monte_carlo(r_.chains.back().seed), c0);
      gaps.push_back(g);
      t.rows.push_back({double(n), g.ratio, g.gap, g.error, g.bound, g.value, g.value_T, g.ess});
      const Parameters p = {{"n", std::int64_t(n)}, {"ratio", g.ratio}, {"bound", g.bound}, {"c0", c0}};
      r_.results.push_back({"gap[" + std::to_string(n) + "]", g.gap, g.error, false, g.samples, g.ess, p});
      r_.verdicts.push_back(verdict("invariance-gap", p, g.gap, "<=", g.bound + c_.invariance.sigmas * g.error));
    }
    r_.tables.push_back(std::move(t));
    r_.verdicts.push_back(verdict("invariance-trend",
                                  {{"first_index", std::int64_t(c_.indices.front())},
                                   {"last_index", std::int64_t(c_.indices.back())}},
                                  gaps.back().gap, "<", gaps.front().gap));
  }

  void verify_markov() {
    const auto spec = LatticeSpec::build(c_.lattice.dim, c_.lattice.sites, c_.lattice.length, 1);
    const auto m = markov_check(spec, c_.markov.band_width, c_.markov.band_offset);
    r_.results.push_back({"max_conditional_covariance", m.max_abs, 0.0, true, 0, 0.0,
                          {{"pairs", i64(m.pairs)}, {"band_sites", i64(m.band_sites)}}});
    r_.results.push_back({"max_unconditioned_covariance", m.max_unconditioned, 0.0, true, 0, 0.0, {}});
    r_.verdicts.push_back(verdict("markov",
                                  {{"band_width", std::int64_t(c_.markov.band_width)},
                                   {"band_offset", std::int64_t(c_.markov.band_offset)},
                                   {"pairs", i64(m.pairs)}},
                                  m.max_abs, "<", c_.markov.tolerance));
  }

  void schedule_check() {
    const auto s = check_schedule(c_.schedule, c_.schedule_check.scan_limit);
    r_.results.push_back({"ratio_at_n0", s.ratio_at_n0, 0.0, true, 0, 0.0, {{"n0", std::int64_t(s.n0)}}});
    r_.results.push_back({"ratio_at_limit", s.ratio_at_limit, 0.0, true, 0, 0.0, {{"n", std::int64_t(s.scan_limit)}}});
    Verdict v = verdict("schedule-condition",
                        {{"reason", s.reason},
                         {"rate", s.rate},
                         {"exponent", s.exponent},
                         {"log_power", s.log_power},
                         {"n0", std::int64_t(s.n0)},
                         {"scan_limit", std::int64_t(s.scan_limit)}},
                        s.ratio_at_limit, "<", s.ratio_at_n0);
    v.pass = s.pass;
    r_.verdicts.push_back(v);
  }

 private:
  const RunConfig& c_;
  Report& r_;
};

}  // namespace

RunConfig effective_config(const RunConfig& config, const RunOptions& o) {
  RunConfig c = config;
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.output.directory = *o.out_dir;
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("/threads", "must be >= 0");
    c.threads = *o.threads;
  }
  if (o.format) c.output.format = *o.format;
  return c;
}

Report run(const std::string& command, const RunConfig& config, const RunOptions& options) {
  const auto start = Clock::now();
  const RunConfig c = effective_config(config, options);
  validate_config(c, command);

  Report r;
  r.command = command;
  r.config = emit_config(c);
  r.root_seed = c.seed;
  r.threads = c.threads;
  r.started = utc_now();

  const fs::path dir = c.output.directory;
  if (options.write_files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }

  Runner runner(c, r);
  if (command == "covariance") runner.covariance();
  else if (command == "sample") runner.sample(dir, options.write_files);
  else if (command == "estimate") runner.estimate();
  else if (command == "constrain-sweep") runner.constrain_sweep();
  else if (command == "verify-rp") runner.verify_rp();
  else if (command == "verify-invariance") runner.verify_invariance();
  else if (command == "verify-markov") runner.verify_markov();
  else runner.schedule_check();

  r.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  if (options.write_files) {
    const std::string stem = c.output.prefix + "-" + command;
    const bool json = c.output.format != OutputFormat::csv;
    const bool csv = c.output.format != OutputFormat::json;
    if (csv)
      for (const auto& t : r.tables) {
        const auto path = dir / (stem + "-" + t.name + ".csv");
        detail::write_file_atomically(path, table_to_csv(t));
        r.files.push_back(path.string());
      }
    if (json) {
      const auto path = dir / (stem + ".json");
      r.files.push_back(path.string());
      detail::write_file_atomically(path, report_to_json(r));
    }
  }
  return r;
}

Report run(const std::string& command, const std::string& config_json, const RunOptions& options) {
  return run(command, parse_config(config_json), options);
}

}  // namespace rpf
