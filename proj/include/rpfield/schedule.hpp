#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rpf {

/// x_n = base * rate^n * n^exponent * log(n + 1)^log_power.
struct GrowthLaw {
  double base = 1.0;
  double exponent = 0.0;
  double log_power = 0.0;
  double rate = 1.0;  ///< geometric factor, e.g. a_n = 10^n

  double operator()(int n) const;
  /// Tends to infinity with n.
  bool divergent() const {
    return rate > 1.0 || (rate == 1.0 && (exponent > 0.0 || (exponent == 0.0 && log_power > 0.0)));
  }
  bool operator==(const GrowthLaw&) const = default;
};

/// The schedule evaluated at one index.
struct CutoffPoint {
  int n = 1;
  double r = 1.0;       ///< ball radius
  double Lambda = 1.0;  ///< mollifier scale, delta = 1/Lambda
  double a = 0.0;       ///< penalty strength (0 without constraints)
  double M = 1.0;       ///< Lagrangian sup bound

  double delta() const { return 1.0 / Lambda; }
};

struct CutoffSchedule {
  int dim = 1;
  GrowthLaw r;
  GrowthLaw Lambda;
  GrowthLaw M;
  std::optional<GrowthLaw> a;

  CutoffPoint at(int n) const;
  /// M_n r_n^(D-1) / Lambda_n.
  double ratio(int n) const;

  bool operator==(const CutoffSchedule&) const = default;
};

struct ScheduleCheck {
  bool pass = false;
  std::string reason;
  /// ratio ~ rate^n * n^exponent * log(n+1)^log_power.
  double rate = 1.0;
  double exponent = 0.0;
  double log_power = 0.0;
  /// First n from which the ratio is nonincreasing up to the scan limit.
  int n0 = 1;
  int scan_limit = 10000;
  double ratio_at_n0 = 0.0;
  double ratio_at_limit = 0.0;
};

/// Symbolic check that M_n r_n^(D-1)/Lambda_n -> 0 and that r, Lambda (and a)
/// diverge with positive nondecreasing laws, plus a numeric scan for the
/// monotone tail on n <= scan_limit. A tail starting after n = scan_limit/10
/// is reported as a failure.
ScheduleCheck check_schedule(const CutoffSchedule& schedule, int scan_limit = 10000);

}  // namespace rpf
