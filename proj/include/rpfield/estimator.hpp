#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rpfield/free_measure.hpp"
#include "rpfield/lagrangian.hpp"
#include "rpfield/region.hpp"
#include "rpfield/schedule.hpp"
#include "rpfield/test_function.hpp"

namespace rpf {

/// Jet fields (lap^j phi_Lambda)_{j = 0..l}, entry [j][c * N^D + site].
std::vector<std::vector<double>> mollified_jet(const LatticeField& field, const Mollifier& mollifier, int order);

/// h^D sum_{x in region} L(jet of the mollified field at x).
double action_integral(const LatticeField& field, const Lagrangian& lagrangian, const Region& region,
                       const Mollifier& mollifier);

struct MonteCarloConfig {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Effective sample size below which the weights count as degenerate.
  double min_ess = 2.0;
  /// Ceiling used when an estimator grows its sample count (select_epsilon).
  std::size_t max_samples = 1u << 20;

  bool operator==(const MonteCarloConfig&) const = default;
};

struct EstimatorResult {
  double value = 0.0;
  double error = 0.0;  ///< jackknife standard error
  std::size_t samples = 0;
  double ess = 0.0;    ///< (sum W)^2 / sum W^2
  bool exact = false;  ///< value carries no sampling error
};

/// Delete-a-block jackknife with block size floor(sqrt(samples)). `row(s, out)`
/// writes the per-sample summands of `columns` running sums; `statistic` maps
/// a vector of sums to the estimate. Summation order is fixed.
struct JackknifeResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t blocks = 0;
};
JackknifeResult jackknife(std::size_t samples, std::size_t columns,
                          const std::function<void(std::size_t, std::span<double>)>& row,
                          const std::function<double(std::span<const double>)>& statistic);
std::size_t jackknife_block_size(std::size_t samples);

/// One term of the Boltzmann weight: int_region L.
struct ActionTerm {
  Lagrangian lagrangian;
  Region region;
};

/// What one pass over the free-field samples records.
struct SamplingPlan {
  LatticeSpec spec;
  double Lambda = 1.0;
  std::vector<ActionTerm> terms;
  std::vector<TestFunction> probes;  ///< pairings <g, phi> to record
  /// Also keep, for term 0, the per-site values L - inf L (select_epsilon).
  bool keep_site_values = false;
};

struct SampleTable {
  std::size_t samples = 0;
  std::vector<std::vector<double>> actions;   ///< [term][sample]
  std::vector<std::vector<double>> pairings;  ///< [probe][sample]
  std::vector<double> site_values;            ///< [sample * region_sites + i]
  std::size_t region_sites = 0;
  double cell_volume = 0.0;
  double lower = 0.0;  ///< inf L of term 0
};

/// Sample s uses sample_gff(spec, derive_seed(mc.seed, s)), independent of
/// the thread count.
SampleTable draw_samples(const SamplingPlan& plan, const MonteCarloConfig& mc);

/// Normalized weights exp(-(A_s - min A)); throws DegenerateWeightsError when
/// the effective sample size falls below min_ess.
std::vector<double> boltzmann_weights(std::span<const double> actions, double min_ess, double* ess = nullptr);

/// sum_s W_s F_s / sum_s W_s with its jackknife error.
EstimatorResult weighted_ratio(std::span<const double> actions, std::span<const double> observable, double min_ess);

/// Maps cylindrical functions onto the probe list of a plan and evaluates
/// them from recorded pairings.
class ObservableSet {
 public:
  std::size_t add(const CylindricalFunction& F);
  const std::vector<TestFunction>& probes() const { return probes_; }
  std::size_t size() const { return functions_.size(); }
  const CylindricalFunction& function(std::size_t i) const { return functions_[i]; }
  /// F_i at sample s.
  double value(std::size_t i, const SampleTable& table, std::size_t s) const;
  std::vector<double> values(std::size_t i, const SampleTable& table) const;

 private:
  std::vector<CylindricalFunction> functions_;
  std::vector<std::vector<std::size_t>> slots_;
  std::vector<TestFunction> probes_;
};

/// Ratio (sum_s F[phi_s] W_s) / (sum_s W_s) with W_s = exp(-int_{B(0, r_n)} L),
/// phi_s i.i.d. free samples and the mollifier at Lambda_n.
EstimatorResult estimate_ratio(const CylindricalFunction& F, const Lagrangian& lagrangian, const CutoffPoint& point,
                               const LatticeSpec& spec, const MonteCarloConfig& mc);

struct LimitDiagnostic {
  bool converged = false;
  double value = 0.0;  ///< tail average when converged
  double error = 0.0;  ///< standard error of the tail average
  /// max |x_k - x_{k-1}| over the last three entries.
  double cauchy = 0.0;
  double threshold = 0.0;
  std::vector<EstimatorResult> tail;
};

/// Convergence-diagnosed limit of a sequence: converged when both successive
/// differences among the last three entries are at most
/// max(tolerance, sqrt(se_k^2 + se_{k-1}^2)). Needs at least four entries.
LimitDiagnostic extract_limit(std::span<const EstimatorResult> sequence, double tolerance);

struct EpsilonSelection {
  double epsilon = 0.0;
  double discrepancy = 0.0;  ///< estimate of (Z~ - Z) / Z
  double error = 0.0;
  double upper = 0.0;        ///< discrepancy + 1.645 error
  std::size_t samples = 0;
  int evaluations = 0;
};

/// Largest epsilon found (log-space scan from 1e3 downwards, then bisection)
/// whose discrepancy (Z~ - Z)/Z is below 1/n at one-sided 95% confidence.
/// Doubles the sample count up to mc.max_samples, then throws BudgetError.
EpsilonSelection select_epsilon(int n, const Lagrangian& lagrangian, const CutoffPoint& point, const LatticeSpec& spec,
                                const MonteCarloConfig& mc);

/// Discrepancy estimate for a fixed epsilon on a recorded table.
EpsilonSelection epsilon_discrepancy(const SampleTable& table, double epsilon);

}  // namespace rpf
