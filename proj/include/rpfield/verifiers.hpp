#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "rpfield/estimator.hpp"

namespace rpf {

/// Lattice-exact Euclidean transform of the torus. Field components are an
/// internal index and are not rotated.
struct EuclideanTransform {
  enum class Kind { identity, translation, permutation, flip };

  Kind kind = Kind::identity;
  std::vector<int> steps;        ///< translation, lattice steps per axis
  std::vector<int> permutation;  ///< new axis a takes old axis permutation[a]
  int axis = 0;                  ///< flip

  static EuclideanTransform identity() { return {}; }
  static EuclideanTransform translation(std::vector<int> steps);
  static EuclideanTransform axis_permutation(std::vector<int> permutation);
  static EuclideanTransform axis_flip(int axis);
  /// Theta(x_1, ..., x_D) = (x_1, ..., -x_D).
  static EuclideanTransform time_reflection(int dim) { return axis_flip(dim - 1); }

  /// T x for a physical point.
  std::vector<double> apply(std::span<const double> x, const LatticeSpec& spec) const;
  /// Site index of T x for a site x.
  std::size_t apply_site(std::size_t site, const LatticeSpec& spec) const;
  void validate(const LatticeSpec& spec) const;

  bool operator==(const EuclideanTransform&) const = default;
};

/// Tg: center moved to T c. Throws SupportError if it leaves the torus.
TestFunction apply_transform(const TestFunction& tf, const EuclideanTransform& T, const LatticeSpec& spec);
/// F_T = f(<Tg_1, .>, ..., <Tg_k, .>).
CylindricalFunction apply_transform(const CylindricalFunction& F, const EuclideanTransform& T, const LatticeSpec& spec);
/// (T phi)(x) = phi(T^-1 x); <Tg, T phi> = <g, phi> exactly up to rounding.
LatticeField apply_transform(const LatticeField& field, const EuclideanTransform& T);

enum class RpRegion {
  /// weight exp(-int_{B(0, r)} L)
  full_ball,
  /// weight exp(-int_{B+_{2 delta} cup B-_{2 delta}} L), the factorized form
  split,
};

struct RpGram {
  Eigen::MatrixXd gram;       ///< G_ij = I(Theta(F_i) F_j)
  Eigen::MatrixXd error;      ///< entrywise jackknife errors
  Eigen::MatrixXd symmetric;  ///< (G + G^T) / 2
  double min_eigenvalue = 0.0;
  double min_eigenvalue_error = 0.0;
  /// max_ij |G_ij - G_ji| / max(3 err, tiny), symmetry check statistic
  double asymmetry = 0.0;
  double ess = 0.0;
  std::size_t samples = 0;
};

/// Throws SupportError unless every inner test function lies in Pi+_{2 delta},
/// delta = 1/Lambda, i.e. c_D - reach > 2 delta.
void check_upper_support(const std::vector<CylindricalFunction>& Fs, const CutoffPoint& point);

RpGram rp_gram(const std::vector<CylindricalFunction>& Fs, const Lagrangian& lagrangian, const CutoffPoint& point,
               const LatticeSpec& spec, const MonteCarloConfig& mc, RpRegion region = RpRegion::full_ball);

/// Both forms on one sample set, with the bound on their difference
/// 2 |F_i| |F_j| (exp(M |B0_{2 delta}|) - 1).
struct RpCrossCheck {
  RpGram full;
  RpGram split;
  double max_difference = 0.0;
  double bound = 0.0;
  double slab_volume = 0.0;
};
RpCrossCheck rp_cross_check(const std::vector<CylindricalFunction>& Fs, const Lagrangian& lagrangian,
                            const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc);

/// Free-measure Gram of cosine cylindricals F_i = A_i cos(Z_i + alpha_i),
/// Z_i linear in the pairings, from the lattice covariance:
/// G_ij = A_i A_j / 2 [cos(a_i - a_j) e^{-Var(Theta Z_i - Z_j)/2} + cos(a_i + a_j) e^{-Var(Theta Z_i + Z_j)/2}].
Eigen::MatrixXd free_cosine_gram(const std::vector<CylindricalFunction>& Fs, const LatticeSpec& spec);

struct InvarianceGap {
  double gap = 0.0;  ///< |I(F_T) - I(F)| on shared samples
  double error = 0.0;
  double value = 0.0;    ///< I(F)
  double value_T = 0.0;  ///< I(F_T)
  double ratio = 0.0;    ///< M_n r_n^(D-1) / Lambda_n
  double bound = 0.0;    ///< |f| c0 ratio
  double c0 = 0.0;
  double ess = 0.0;
  std::size_t samples = 0;
};

InvarianceGap invariance_gap(const CylindricalFunction& F, const EuclideanTransform& T, const Lagrangian& lagrangian,
                             const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc, double c0);

/// c0 = (gap + 3 err) / (|f| ratio) measured at `point` on the seed stream
/// splitmix64(root ^ 0xC0FFEE), disjoint from the runs it calibrates.
struct Calibration {
  double c0 = 0.0;
  InvarianceGap run;
  std::uint64_t seed = 0;
};
Calibration calibrate_invariance(const CylindricalFunction& F, const EuclideanTransform& T, const Lagrangian& lagrangian,
                                 const CutoffPoint& point, const LatticeSpec& spec, const MonteCarloConfig& mc);

struct MarkovResult {
  double max_abs = 0.0;  ///< max |Cov(phi_x, phi_y | band)| over the probes
  std::size_t pairs = 0;
  std::size_t band_sites = 0;
  std::size_t side_sites[2] = {0, 0};
  double max_unconditioned = 0.0;  ///< max |Cov(phi_x, phi_y)| for reference
};

/// Nearest-neighbour precision h^D (-lap_h + 1). On the torus a separating set
/// is two bands of `band_width` layers across axis D-1, at offset and
/// offset + N/2. Probe pairs must lie on opposite sides; an empty list probes
/// every cross pair. Needs N^D <= 4096.
MarkovResult markov_check(const LatticeSpec& spec, int band_width, int band_offset,
                          const std::vector<std::pair<std::size_t, std::size_t>>& probes = {});

}  // namespace rpf
