#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpfield/lattice.hpp"

namespace rpf {

/// Integration region built from balls and half-spaces. Membership is decided
/// at site centers; points on a ball's sphere are outside.
struct Region {
  enum class Kind { ball, half_space, intersection, union_of, difference, everything };

  Kind kind = Kind::everything;
  std::vector<double> center;  ///< ball
  double radius = 0.0;         ///< ball
  int axis = 0;                ///< half-space: side * x_axis > offset
  int side = 1;
  double offset = 0.0;
  std::vector<Region> children;

  static Region ball(std::vector<double> center, double radius);
  static Region centered_ball(int dim, double radius) { return ball(std::vector<double>(static_cast<std::size_t>(dim), 0.0), radius); }
  static Region half_space(int axis, int side, double offset);
  static Region intersection(std::vector<Region> parts);
  static Region union_of(std::vector<Region> parts);
  static Region difference(Region base, Region removed);
  static Region everything() { return {}; }

  /// Pi+_delta = {x_D > delta} and Pi-_delta = {x_D < -delta}.
  static Region upper_half(int dim, double delta) { return half_space(dim - 1, +1, delta); }
  static Region lower_half(int dim, double delta) { return half_space(dim - 1, -1, delta); }
  /// B+-_delta(0, r) = B(0, r) cap Pi+-_delta.
  static Region upper_cap(int dim, double radius, double delta);
  static Region lower_cap(int dim, double radius, double delta);
  /// B0_delta(0, r) = B(0, r) minus both caps, the slab |x_D| <= delta.
  static Region slab(int dim, double radius, double delta);

  bool contains(std::span<const double> x) const;
  /// Radius of a centered ball containing the region (+inf if unbounded).
  double reach() const;

  /// Member sites in increasing order. Throws SupportError unless the region
  /// sits strictly inside the torus (reach < L/2).
  std::vector<std::size_t> sites(const LatticeSpec& spec) const;
  /// Measure h^D * #sites.
  double lattice_volume(const LatticeSpec& spec) const;

  bool operator==(const Region&) const = default;
};

}  // namespace rpf
