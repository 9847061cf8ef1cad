#include "rpfield/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rpfield/error.hpp"

namespace rpf {

Region Region::ball(std::vector<double> center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball radius must be positive");
  Region r;
  r.kind = Kind::ball;
  r.center = std::move(center);
  r.radius = radius;
  return r;
}

Region Region::half_space(int axis, int side, double offset) {
  if (axis < 0 || (side != 1 && side != -1)) throw InvalidArgument("half-space needs axis >= 0 and side +-1");
  Region r;
  r.kind = Kind::half_space;
  r.axis = axis;
  r.side = side;
  r.offset = offset;
  return r;
}

Region Region::intersection(std::vector<Region> parts) {
  Region r;
  r.kind = Kind::intersection;
  r.children = std::move(parts);
  return r;
}

Region Region::union_of(std::vector<Region> parts) {
  Region r;
  r.kind = Kind::union_of;
  r.children = std::move(parts);
  return r;
}

Region Region::difference(Region base, Region removed) {
  Region r;
  r.kind = Kind::difference;
  r.children = {std::move(base), std::move(removed)};
  return r;
}

Region Region::upper_cap(int dim, double radius, double delta) {
  return intersection({centered_ball(dim, radius), upper_half(dim, delta)});
}

Region Region::lower_cap(int dim, double radius, double delta) {
  return intersection({centered_ball(dim, radius), lower_half(dim, delta)});
}

Region Region::slab(int dim, double radius, double delta) {
  return difference(centered_ball(dim, radius), union_of({upper_half(dim, delta), lower_half(dim, delta)}));
}

bool Region::contains(std::span<const double> x) const {
  switch (kind) {
    case Kind::everything:
      return true;
    case Kind::ball: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - (i < center.size() ? center[i] : 0.0);
        s += d * d;
      }
      return s < radius * radius;
    }
    case Kind::half_space:
      return side * x[static_cast<std::size_t>(axis)] > offset;
    case Kind::intersection:
      return std::all_of(children.begin(), children.end(), [&](const Region& c) { return c.contains(x); });
    case Kind::union_of:
      return std::any_of(children.begin(), children.end(), [&](const Region& c) { return c.contains(x); });
    case Kind::difference:
      return children[0].contains(x) && !children[1].contains(x);
  }
  return false;
}

double Region::reach() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case Kind::everything:
    case Kind::half_space:
      return inf;
    case Kind::ball: {
      double s = 0.0;
      for (double c : center) s += c * c;
      return std::sqrt(s) + radius;
    }
    case Kind::intersection: {
      double r = inf;
      for (const auto& c : children) r = std::min(r, c.reach());
      return r;
    }
    case Kind::union_of: {
      double r = children.empty() ? 0.0 : -inf;
      for (const auto& c : children) r = std::max(r, c.reach());
      return r;
    }
    case Kind::difference:
      return children[0].reach();
  }
  return inf;
}

std::vector<std::size_t> Region::sites(const LatticeSpec& spec) const {
  const double r = reach();
  if (!(r < 0.5 * spec.length))
    throw SupportError("region of reach " + std::to_string(r) + " does not fit inside the torus of side " +
                       std::to_string(spec.length));
  if (kind == Kind::ball && center.size() != static_cast<std::size_t>(spec.dim))
    throw InvalidArgument("ball center dimension does not match lattice");
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < spec.volume(); ++s)
    if (contains(spec.position(s))) out.push_back(s);
  return out;
}

double Region::lattice_volume(const LatticeSpec& spec) const {
  return spec.cell_volume() * static_cast<double>(sites(spec).size());
}

}  // namespace rpf
