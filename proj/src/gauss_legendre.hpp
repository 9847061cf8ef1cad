#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace rpf::detail {

struct GaussRule {
  std::vector<double> nodes;    ///< on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, cached per order.
inline const GaussRule& gauss_legendre(unsigned n) {
  static std::mutex mutex;
  static std::map<unsigned, std::unique_ptr<GaussRule>> rules;
  std::lock_guard lock(mutex);
  auto& slot = rules[n];
  if (!slot) {
    auto rule = std::make_unique<GaussRule>();
    // legendre_p_zeros returns the non-negative half of the roots.
    const auto half = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    std::vector<double> x;
    for (auto it = half.rbegin(); it != half.rend(); ++it)
      if (*it > 0.0) x.push_back(-*it);
    for (double z : half) x.push_back(z);
    for (double z : x) {
      const double d = boost::math::legendre_p_prime(static_cast<int>(n), z);
      rule->weights.push_back(2.0 / ((1.0 - z * z) * d * d));
    }
    rule->nodes = std::move(x);
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace rpf::detail
