#include "rpfield/constraints.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fft.hpp"
#include "rpfield/error.hpp"
#include "rpfield/estimator.hpp"
#include "rpfield/region.hpp"

namespace rpf {

DiffOperator DiffOperator::identity(int components) {
  DiffOperator op;
  op.name = "identity";
  op.rows = op.cols = components;
  std::vector<std::vector<double>> m(static_cast<std::size_t>(components), std::vector<double>(static_cast<std::size_t>(components), 0.0));
  for (int i = 0; i < components; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
  op.terms.push_back({{}, std::move(m)});
  return op;
}

DiffOperator DiffOperator::divergence(int dim) {
  DiffOperator op;
  op.name = "divergence";
  op.rows = 1;
  op.cols = dim;
  for (int i = 0; i < dim; ++i) {
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    alpha[static_cast<std::size_t>(i)] = 1;
    std::vector<std::vector<double>> m(1, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    m[0][static_cast<std::size_t>(i)] = 1.0;
    op.terms.push_back({std::move(alpha), std::move(m)});
  }
  return op;
}

DiffOperator DiffOperator::laplacian(int dim, int components) {
  DiffOperator op;
  op.name = "laplacian";
  op.rows = op.cols = components;
  for (int i = 0; i < dim; ++i) {
    std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
    alpha[static_cast<std::size_t>(i)] = 2;
    std::vector<std::vector<double>> m(static_cast<std::size_t>(components), std::vector<double>(static_cast<std::size_t>(components), 0.0));
    for (int c = 0; c < components; ++c) m[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] = 1.0;
    op.terms.push_back({std::move(alpha), std::move(m)});
  }
  return op;
}

void DiffOperator::validate(int dim, int components) const {
  const std::string who = "operator '" + name + "': ";
  if (rows < 1) throw InvalidArgument(who + "needs at least one row");
  if (cols != components)
    throw InvalidArgument(who + "acts on " + std::to_string(cols) + " components, field has " + std::to_string(components));
  if (terms.empty()) throw InvalidArgument(who + "has no terms");
  for (const auto& t : terms) {
    if (!t.alpha.empty() && t.alpha.size() != static_cast<std::size_t>(dim))
      throw InvalidArgument(who + "multi-index length differs from D");
    for (int a : t.alpha)
      if (a < 0) throw InvalidArgument(who + "negative multi-index entry");
    if (t.matrix.size() != static_cast<std::size_t>(rows)) throw InvalidArgument(who + "coefficient row count differs");
    for (const auto& row : t.matrix) {
      if (row.size() != static_cast<std::size_t>(cols)) throw InvalidArgument(who + "coefficient column count differs");
      for (double v : row)
        if (!std::isfinite(v)) throw InvalidArgument(who + "non-finite coefficient");
    }
  }
}

int DiffOperator::order() const {
  int o = 0;
  for (const auto& t : terms) {
    int s = 0;
    for (int a : t.alpha) s += a;
    o = std::max(o, s);
  }
  return o;
}

void ConstraintSet::validate(int dim, int components) const {
  if (!(tau > 0.0 && tau <= 1e-6)) throw InvalidArgument("rank tolerance tau must lie in (0, 1e-6]");
  for (const auto& op : ops) op.validate(dim, components);
}

int ConstraintSet::rows() const {
  int r = 0;
  for (const auto& op : ops) r += op.rows;
  return r;
}

Eigen::MatrixXcd symbol_matrix(const DiffOperator& op, std::span<const double> p) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(op.rows, op.cols);
  for (const auto& t : op.terms) {
    Complex factor = 1.0;
    for (std::size_t j = 0; j < t.alpha.size(); ++j)
      for (int k = 0; k < t.alpha[j]; ++k) factor *= Complex(0.0, p[j]);
    for (int r = 0; r < op.rows; ++r)
      for (int c = 0; c < op.cols; ++c)
        s(r, c) += factor * t.matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return s;
}

Eigen::MatrixXcd stacked_symbol(const ConstraintSet& cs, std::span<const double> p, int components) {
  Eigen::MatrixXcd s(cs.rows(), components);
  int r = 0;
  for (const auto& op : cs.ops) {
    s.middleRows(r, op.rows) = symbol_matrix(op, p);
    r += op.rows;
  }
  return s;
}

ProjectorInfo projector_info(const ConstraintSet& cs, std::span<const double> p, int components) {
  ProjectorInfo out;
  const int K = components;
  if (cs.empty()) {
    out.matrix = Eigen::MatrixXcd::Identity(K, K);
    return out;
  }
  const Eigen::MatrixXcd s = stacked_symbol(cs, p, K);
  if (s.cwiseAbs().maxCoeff() == 0.0) {
    out.matrix = Eigen::MatrixXcd::Identity(K, K);
    return out;
  }
  // SVD of the stack padded to at least K rows so that V is a full basis
  Eigen::MatrixXcd padded = Eigen::MatrixXcd::Zero(std::max<Eigen::Index>(s.rows(), K), K);
  padded.topRows(s.rows()) = s;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(padded, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = cs.tau * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) >= cut) ++rank;
    const double rel = sv(i) / sv(0);
    if (rel >= 0.1 * cs.tau && rel <= 10.0 * cs.tau) out.near_cut = true;
  }
  out.rank = rank;
  const Eigen::MatrixXcd kernel = svd.matrixV().rightCols(K - rank);
  out.matrix = kernel * kernel.adjoint();
  return out;
}

Eigen::MatrixXcd projector(const ConstraintSet& cs, std::span<const double> p, int components) {
  return projector_info(cs, p, components).matrix;
}

namespace {

Eigen::VectorXcd fourier_vector(const TestFunction& tf, std::span<const double> p) {
  const Complex s = fourier_scalar(tf, p);
  Eigen::VectorXcd v(tf.components());
  for (int c = 0; c < tf.components(); ++c) v(c) = s * tf.component[static_cast<std::size_t>(c)];
  return v;
}

void check_pair(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs, const QuadratureConfig& quad) {
  if (f.dim() != g.dim() || f.components() != g.components())
    throw InvalidArgument("test functions have different shapes");
  cs.validate(f.dim(), f.components());
  if (quad.lattice) {
    f.check_fits(*quad.lattice);
    g.check_fits(*quad.lattice);
  }
}

}  // namespace

CovarianceResult constrained_covariance(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs,
                                        const QuadratureConfig& quad) {
  check_pair(f, g, cs, quad);
  const int K = f.components();
  std::size_t flagged = 0;
  auto integrand = [&](std::span<const double> p) {
    double p2 = 0.0;
    for (double v : p) p2 += v * v;
    const auto info = projector_info(cs, p, K);
    if (info.near_cut) ++flagged;
    const Eigen::VectorXcd a = info.matrix * fourier_vector(f, p);
    const Eigen::VectorXcd b = info.matrix * fourier_vector(g, p);
    return a.dot(b).real() / (p2 + 1.0);
  };
  CovarianceResult out;
  static_cast<QuadratureResult&>(out) = integrate_momentum(f.dim(), integrand, quad);
  out.near_cut_nodes = flagged;
  return out;
}

CovarianceResult penalized_covariance(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs, double a,
                                      const Mollifier& mollifier, const QuadratureConfig& quad) {
  check_pair(f, g, cs, quad);
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("penalty strength a must be finite and >= 0");
  if (mollifier.dim() != f.dim()) throw InvalidArgument("mollifier dimension does not match test functions");
  const int K = f.components();
  auto integrand = [&](std::span<const double> p) {
    double p2 = 0.0;
    for (double v : p) p2 += v * v;
    Eigen::MatrixXcd m = (p2 + 1.0) * Eigen::MatrixXcd::Identity(K, K);
    if (a > 0.0 && !cs.empty()) {
      const double sig = mollifier.fourier(std::sqrt(p2));
      const Eigen::MatrixXcd s = stacked_symbol(cs, p, K);
      m += a * sig * sig * (s.adjoint() * s);
    }
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success) {
      std::string at;
      for (double v : p) at += (at.empty() ? "" : ", ") + std::to_string(v);
      throw SolverError("penalized_covariance: hermitian solve failed at p = (" + at + ")");
    }
    const Eigen::VectorXcd x = llt.solve(fourier_vector(g, p));
    return fourier_vector(f, p).dot(x).real();
  };
  CovarianceResult out;
  static_cast<QuadratureResult&>(out) = integrate_momentum(f.dim(), integrand, quad);
  return out;
}

// ---------------------------------------------------------------------------

PenalizedOperator::PenalizedOperator(const ConstraintSet& cs, double a, const Mollifier& mollifier, double r,
                                     const LatticeSpec& spec)
    : spec_(spec), a_(a), rows_(cs.rows()) {
  cs.validate(spec.dim, spec.components);
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("penalty strength a must be finite and >= 0");
  if (mollifier.dim() != spec.dim) throw InvalidArgument("mollifier dimension does not match lattice");
  if (!(1.0 / mollifier.scale() < 0.5 * spec.length))
    throw InvalidArgument("mollifier support 1/Lambda must be smaller than L/2");
  p2_ = momentum_squared_table(spec);
  const auto moms = momentum_table(spec);
  const std::size_t vol = spec.volume();
  symbol_.resize(rows_ > 0 ? vol : 0);
  for (std::size_t m = 0; m < symbol_.size(); ++m) {
    std::span<const double> p(moms.data() + m * static_cast<std::size_t>(spec.dim), static_cast<std::size_t>(spec.dim));
    symbol_[m] = mollifier.fourier(std::sqrt(p2_[m])) * stacked_symbol(cs, p, spec.components);
  }
  if (std::isinf(r) && r > 0.0) {
    mask_.assign(vol, 1);
  } else {
    mask_.assign(vol, 0);
    for (std::size_t s : Region::centered_ball(spec.dim, r).sites(spec)) mask_[s] = 1;
  }
}

void PenalizedOperator::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t vol = spec_.volume();
  const int K = spec_.components;
  const double inv = 1.0 / static_cast<double>(vol);
  std::vector<std::vector<Complex>> uh(static_cast<std::size_t>(K), std::vector<Complex>(vol));
  for (int c = 0; c < K; ++c) {
    auto& v = uh[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < vol; ++i) v[i] = u[static_cast<std::size_t>(c) * vol + i];
    detail::fft(v.data(), spec_.dim, spec_.sites, -1);
  }
  std::vector<std::vector<Complex>> acc(static_cast<std::size_t>(K), std::vector<Complex>(vol));
  for (int c = 0; c < K; ++c)
    for (std::size_t m = 0; m < vol; ++m) acc[static_cast<std::size_t>(c)][m] = (p2_[m] + 1.0) * uh[static_cast<std::size_t>(c)][m];

  if (a_ > 0.0 && rows_ > 0) {
    std::vector<Complex> k(vol);
    for (int r = 0; r < rows_; ++r) {
      for (std::size_t m = 0; m < vol; ++m) {
        Complex s = 0.0;
        for (int c = 0; c < K; ++c) s += symbol_[m](r, c) * uh[static_cast<std::size_t>(c)][m];
        k[m] = s * inv;
      }
      detail::fft(k.data(), spec_.dim, spec_.sites, +1);
      for (std::size_t i = 0; i < vol; ++i) k[i] = mask_[i] ? Complex(k[i].real(), 0.0) : Complex(0.0, 0.0);
      detail::fft(k.data(), spec_.dim, spec_.sites, -1);
      for (int c = 0; c < K; ++c)
        for (std::size_t m = 0; m < vol; ++m) acc[static_cast<std::size_t>(c)][m] += a_ * std::conj(symbol_[m](r, c)) * k[m];
    }
  }
  for (int c = 0; c < K; ++c) {
    auto& v = acc[static_cast<std::size_t>(c)];
    detail::fft(v.data(), spec_.dim, spec_.sites, +1);
    for (std::size_t i = 0; i < vol; ++i) out[static_cast<std::size_t>(c) * vol + i] = v[i].real() * inv;
  }
}

void PenalizedOperator::apply_free_covariance(std::span<const double> u, std::span<double> out) const {
  const std::size_t vol = spec_.volume();
  std::vector<double> mult(vol);
  for (std::size_t m = 0; m < vol; ++m) mult[m] = 1.0 / (p2_[m] + 1.0);
  std::vector<Complex> v(vol);
  for (int c = 0; c < spec_.components; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * vol;
    for (std::size_t i = 0; i < vol; ++i) v[i] = u[off + i];
    apply_filter(spec_, v, mult);
    for (std::size_t i = 0; i < vol; ++i) out[off + i] = v[i].real();
  }
}

Eigen::MatrixXd PenalizedOperator::dense() const {
  const std::size_t n = size();
  Eigen::MatrixXd A(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return 0.5 * (A + A.transpose());
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

PenalizedSolve lattice_penalized_exact(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs, double a,
                                       const Mollifier& mollifier, double r, const LatticeSpec& spec,
                                       const PenalizedSolveOptions& options) {
  if (f.dim() != spec.dim || g.dim() != spec.dim || f.components() != spec.components ||
      g.components() != spec.components)
    throw InvalidArgument("test functions do not match the lattice");
  f.check_fits(spec);
  g.check_fits(spec);
  const PenalizedOperator op(cs, a, mollifier, r, spec);
  const auto fs = f.sample(spec);
  const auto gs = g.sample(spec);
  const std::size_t n = op.size();
  const double hd = spec.cell_volume();
  const double gnorm = std::sqrt(dot(gs, gs));

  PenalizedSolve out;
  std::vector<double> u(n, 0.0), Au(n);
  const bool dense = options.method == PenalizedSolveOptions::Method::dense ||
                     (options.method == PenalizedSolveOptions::Method::automatic && n <= options.dense_limit);
  if (gnorm == 0.0) return out;
  if (dense) {
    const Eigen::MatrixXd A = op.dense();
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw SolverError("lattice_penalized_exact: Cholesky factorization failed");
    const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(gs.data(), static_cast<Eigen::Index>(n)));
    for (std::size_t i = 0; i < n; ++i) u[i] = x(static_cast<Eigen::Index>(i));
    out.dense = true;
  } else {
    // preconditioned conjugate gradients, preconditioner = free covariance
    std::vector<double> res(gs), z(n), p(n), q(n);
    op.apply_free_covariance(res, z);
    p = z;
    double rz = dot(res, z);
    int it = 0;
    for (; it < options.max_iterations; ++it) {
      if (std::sqrt(dot(res, res)) <= options.tolerance * gnorm) break;
      op.apply(p, q);
      const double alpha = rz / dot(p, q);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += alpha * p[i];
        res[i] -= alpha * q[i];
      }
      op.apply_free_covariance(res, z);
      const double rz_new = dot(res, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    out.iterations = it;
  }
  op.apply(u, Au);
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) rr += (Au[i] - gs[i]) * (Au[i] - gs[i]);
  out.residual = std::sqrt(rr) / gnorm;
  if (!dense && !(out.residual <= std::max(options.tolerance * 10.0, 1e-10)))
    throw SolverError("lattice_penalized_exact: CG stopped at relative residual " + std::to_string(out.residual) +
                      " after " + std::to_string(out.iterations) + " iterations");
  out.value = hd * dot(fs, u);
  return out;
}

// ---------------------------------------------------------------------------

SweepResult penalty_sweep(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs,
                           const CutoffSchedule& schedule, std::span<const int> indices, const LatticeSpec& spec,
                           const QuadratureConfig& quad, double limit_tolerance, const PenalizedSolveOptions& options) {
  if (!schedule.a) throw InvalidArgument("penalty_sweep: schedule has no penalty law a_n");
  if (indices.empty()) throw InvalidArgument("penalty_sweep: no indices");
  SweepResult out;
  out.free_value = free_covariance(f, g, quad).value;
  const double kappa = constrained_covariance(f, g, cs, quad).value;
  for (int n : indices) {
    const auto pt = schedule.at(n);
    const Mollifier moll(spec.dim, pt.Lambda);
    SweepRow row;
    row.n = n;
    row.a = pt.a;
    row.Lambda = pt.Lambda;
    row.r = pt.r;
    const auto solve = lattice_penalized_exact(f, g, cs, pt.a, moll, pt.r, spec, options);
    row.C_aLr = solve.value;
    row.solver_residual = solve.residual;
    row.C_aLinf = penalized_covariance(f, g, cs, pt.a, moll, quad).value;
    row.C_kappa = kappa;
    row.gap_r = std::abs(row.C_aLr - kappa);
    row.gap_inf = std::abs(row.C_aLinf - kappa);
    row.gap_volume = std::abs(row.C_aLr - row.C_aLinf);
    out.rows.push_back(row);
  }
  out.gaps_nonincreasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].gap_r > out.rows[i - 1].gap_r) out.gaps_nonincreasing = false;
  out.final_below_first = out.rows.size() >= 2 && out.rows.back().gap_r < out.rows.front().gap_r;
  if (out.rows.size() >= 4) {
    std::vector<EstimatorResult> seq;
    for (const auto& r : out.rows) seq.push_back({r.C_aLr, 0.0, 0, 0.0, true});
    const auto lim = extract_limit(seq, limit_tolerance);
    out.limit_converged = lim.converged;
    out.limit_value = lim.value;
  }
  return out;
}

}  // namespace rpf
