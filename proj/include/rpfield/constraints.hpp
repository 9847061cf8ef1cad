#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "rpfield/free_measure.hpp"
#include "rpfield/schedule.hpp"

namespace rpf {

/// Constant-coefficient linear differential operator sum_alpha C_alpha d^alpha
/// mapping K field components to `rows` constraint components.
struct DiffOperator {
  struct Term {
    std::vector<int> alpha;                   ///< multi-index, length D
    std::vector<std::vector<double>> matrix;  ///< rows x K
    bool operator==(const Term&) const = default;
  };

  std::string name;
  int rows = 1;
  int cols = 1;  ///< K
  std::vector<Term> terms;

  static DiffOperator identity(int components);
  /// sum_i d_i phi_i, for K = D.
  static DiffOperator divergence(int dim);
  /// lap phi applied componentwise.
  static DiffOperator laplacian(int dim, int components);

  /// Throws InvalidArgument on shape mismatches.
  void validate(int dim, int components) const;
  /// Largest total derivative order.
  int order() const;

  bool operator==(const DiffOperator&) const = default;
};

struct ConstraintSet {
  std::vector<DiffOperator> ops;
  double tau = 1e-10;  ///< relative singular-value cut

  void validate(int dim, int components) const;
  int rows() const;
  bool empty() const { return ops.empty(); }

  bool operator==(const ConstraintSet&) const = default;
};

/// sum_alpha C_alpha (i p)^alpha.
Eigen::MatrixXcd symbol_matrix(const DiffOperator& op, std::span<const double> p);
/// Vertical stack of every operator's symbol.
Eigen::MatrixXcd stacked_symbol(const ConstraintSet& cs, std::span<const double> p, int components);

struct ProjectorInfo {
  Eigen::MatrixXcd matrix;
  int rank = 0;            ///< numerical rank of the stacked symbol
  bool near_cut = false;   ///< some sigma_i / sigma_max lies in [tau/10, 10 tau]
};

/// Orthogonal projector onto the intersection of the symbol kernels at p.
ProjectorInfo projector_info(const ConstraintSet& cs, std::span<const double> p, int components);
Eigen::MatrixXcd projector(const ConstraintSet& cs, std::span<const double> p, int components);

struct CovarianceResult : QuadratureResult {
  std::size_t near_cut_nodes = 0;  ///< quadrature nodes where the rank decision was close
};

/// (2 pi)^-D int conj(Pi f^) . Pi g^ / (p^2 + 1) dp.
CovarianceResult constrained_covariance(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs,
                                        const QuadratureConfig& quad);

/// (2 pi)^-D int conj(f^) . [(p^2+1) I + a sigma_Lambda(p)^2 sum_i D_i^+ D_i]^-1 g^ dp.
/// The quadratic form a * |D phi_Lambda|^2 enters without a factor 1/2, so a
/// reweighting Lagrangian a' kappa^2 corresponds to a = 2 a'.
CovarianceResult penalized_covariance(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs, double a,
                                      const Mollifier& mollifier, const QuadratureConfig& quad);

struct PenalizedSolveOptions {
  enum class Method { automatic, dense, cg };
  Method method = Method::automatic;
  /// automatic picks the dense Cholesky path up to this many unknowns.
  std::size_t dense_limit = 2048;
  double tolerance = 1e-12;  ///< relative residual of the CG path
  int max_iterations = 100000;
};

struct PenalizedSolve {
  double value = 0.0;
  double residual = 0.0;  ///< relative residual |A u - g| / |g|
  int iterations = 0;     ///< 0 for the dense path
  bool dense = false;
};

/// Covariance <f, (P + a S)^-1 g>_h of the finite-volume penalized Gaussian on
/// the lattice: P has symbol p^2 + 1 and S = T^T chi_B T with T the stacked
/// symbols composed with the mollifier and chi_B the indicator of B(0, r).
/// r = +inf penalizes the whole torus.
PenalizedSolve lattice_penalized_exact(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs, double a,
                                       const Mollifier& mollifier, double r, const LatticeSpec& spec,
                                       const PenalizedSolveOptions& options = {});

/// Matrix-free operator of the solve above; exposed for tests and the dense
/// path. apply(u, out) computes (P + a S) u.
class PenalizedOperator {
 public:
  PenalizedOperator(const ConstraintSet& cs, double a, const Mollifier& mollifier, double r, const LatticeSpec& spec);
  std::size_t size() const { return spec_.size(); }
  void apply(std::span<const double> u, std::span<double> out) const;
  /// P^-1 u, the preconditioner.
  void apply_free_covariance(std::span<const double> u, std::span<double> out) const;
  Eigen::MatrixXd dense() const;

 private:
  LatticeSpec spec_;
  double a_;
  int rows_;
  std::vector<double> p2_;
  std::vector<Eigen::MatrixXcd> symbol_;  ///< per mode, rows x K, mollifier included
  std::vector<char> mask_;
};

struct SweepRow {
  int n = 0;
  double a = 0.0, Lambda = 0.0, r = 0.0;
  double C_aLr = 0.0;     ///< finite-volume lattice value
  double C_aLinf = 0.0;   ///< infinite-volume penalized value
  double C_kappa = 0.0;   ///< projected value
  double gap_r = 0.0;     ///< |C_aLr - C_kappa|
  double gap_inf = 0.0;   ///< |C_aLinf - C_kappa|
  double gap_volume = 0.0;  ///< |C_aLr - C_aLinf|
  double solver_residual = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double free_value = 0.0;  ///< C(f, g), scale for relative gaps
  bool gaps_nonincreasing = false;
  bool final_below_first = false;
  bool limit_converged = false;
  double limit_value = 0.0;
};

/// Rows over the given indices of the schedule (a_n required).
/// `limit_tolerance` is the absolute tolerance of the limit diagnostic on C_aLr.
SweepResult penalty_sweep(const TestFunction& f, const TestFunction& g, const ConstraintSet& cs,
                           const CutoffSchedule& schedule, std::span<const int> indices, const LatticeSpec& spec,
                           const QuadratureConfig& quad, double limit_tolerance,
                           const PenalizedSolveOptions& options = {});

}  // namespace rpf
