#include "rpfield/schedule.hpp"

#include <cmath>

#include "rpfield/error.hpp"

namespace rpf {

double GrowthLaw::operator()(int n) const {
  return base * std::pow(rate, n) * std::pow(static_cast<double>(n), exponent) * std::pow(std::log(n + 1.0), log_power);
}

CutoffPoint CutoffSchedule::at(int n) const {
  if (n < 1) throw InvalidArgument("schedule index must be >= 1");
  CutoffPoint p;
  p.n = n;
  p.r = r(n);
  p.Lambda = Lambda(n);
  p.M = M(n);
  p.a = a ? (*a)(n) : 0.0;
  return p;
}

double CutoffSchedule::ratio(int n) const { return M(n) * std::pow(r(n), dim - 1) / Lambda(n); }

ScheduleCheck check_schedule(const CutoffSchedule& s, int scan_limit) {
  ScheduleCheck out;
  out.scan_limit = scan_limit;
  out.rate = s.M.rate * std::pow(s.r.rate, s.dim - 1) / s.Lambda.rate;
  out.exponent = s.M.exponent + (s.dim - 1) * s.r.exponent - s.Lambda.exponent;
  out.log_power = s.M.log_power + (s.dim - 1) * s.r.log_power - s.Lambda.log_power;

  auto fail = [&](std::string why) {
    out.pass = false;
    out.reason = std::move(why);
    return out;
  };

  struct Named {
    const char* name;
    const GrowthLaw* law;
    bool must_diverge;
  };
  std::vector<Named> laws = {{"r", &s.r, true}, {"Lambda", &s.Lambda, true}, {"M", &s.M, false}};
  if (s.a) laws.push_back({"a", &*s.a, true});
  for (const auto& l : laws) {
    if (!(l.law->base > 0.0)) return fail(std::string(l.name) + "_n is not positive");
    if (l.law->exponent < 0.0 || l.law->log_power < 0.0 || l.law->rate < 1.0)
      return fail(std::string(l.name) + "_n is not nondecreasing");
    if (l.must_diverge && !l.law->divergent()) return fail(std::string(l.name) + "_n does not tend to infinity");
  }

  constexpr double tiny = 1e-12;
  const bool geometric = std::abs(out.rate - 1.0) > tiny;
  const bool vanishes = geometric ? out.rate < 1.0
                                  : out.exponent < -tiny || (std::abs(out.exponent) <= tiny && out.log_power < -tiny);
  if (!vanishes) {
    out.reason = "M_n r_n^(D-1)/Lambda_n ~ " + std::to_string(out.rate) + "^n n^" + std::to_string(out.exponent) +
                 " log(n+1)^" + std::to_string(out.log_power) + " does not tend to 0";
    out.pass = false;
  }

  // numeric tail: last index at which the ratio still increases
  int n0 = 1;
  double prev = s.ratio(1);
  for (int n = 2; n <= scan_limit; ++n) {
    const double cur = s.ratio(n);
    if (cur > prev * (1.0 + 1e-14)) n0 = n;
    prev = cur;
  }
  out.n0 = n0;
  out.ratio_at_n0 = s.ratio(n0);
  out.ratio_at_limit = s.ratio(scan_limit);
  if (!vanishes) return out;
  if (n0 > scan_limit / 10)
    return fail("ratio still increasing at n = " + std::to_string(n0) + " within the scan to " +
                std::to_string(scan_limit));
  if (!(out.ratio_at_limit < out.ratio_at_n0)) return fail("ratio does not decrease over the scan");
  out.pass = true;
  out.reason = "ratio nonincreasing from n0 = " + std::to_string(n0) + " and ~ " + std::to_string(out.rate) + "^n n^" +
               std::to_string(out.exponent) +
               " log(n+1)^" + std::to_string(out.log_power);
  return out;
}

}  // namespace rpf
