#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bivcov/errors.hpp"

namespace bivcov {

/// Locations in R^n, n in {1, 2, 3}; unused coordinates are zero.
struct PointSet {
  int dim = 2;
  std::vector<std::array<double, 3>> coords;

  std::size_t size() const { return coords.size(); }

  void add(std::array<double, 3> p) { coords.push_back(p); }

  double distance(std::size_t a, std::size_t b) const { return distance(coords[a], coords[b]); }

  static double distance(const std::array<double, 3>& p, const std::array<double, 3>& q) {
    const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  void validate() const {
    if (dim < 1 || dim > 3) throw ParameterError("point dimension must be 1, 2 or 3");
    for (const auto& p : coords) {
      for (int k = 0; k < 3; ++k) {
        if (!std::isfinite(p[k])) throw ParameterError("non-finite coordinate");
        if (k >= dim && p[k] != 0.0) throw ParameterError("coordinate beyond the declared dimension");
      }
    }
  }
};

/// One row per observation: a location, a 0-based component index and (for data) a value.
/// Files and the CLI number components 1 and 2.
struct FieldSample {
  PointSet points;
  std::vector<int> component;
  std::vector<double> value;

  std::size_t size() const { return points.size(); }

  void validate(bool require_values) const {
    points.validate();
    if (component.size() != points.size()) throw ParameterError("component list length differs from point count");
    if (require_values && value.size() != points.size()) {
      throw ParameterError("value list length differs from point count");
    }
    for (int c : component) {
      if (c != 0 && c != 1) throw ParameterError("component index out of range");
    }
    // Duplicate locations are allowed only across components.
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b = a + 1; b < size(); ++b) {
        if (component[a] == component[b] && points.coords[a] == points.coords[b]) {
          throw ParameterError("duplicate location for component " + std::to_string(component[a] + 1));
        }
      }
    }
  }

  std::size_t count(int c) const {
    std::size_t n = 0;
    for (int k : component) n += k == c;
    return n;
  }
};

/// Every point of `points` observed for both components, rows ordered (p0,c1), (p0,c2), ...
inline FieldSample both_components(const PointSet& points) {
  FieldSample s;
  s.points.dim = points.dim;
  for (const auto& p : points.coords) {
    for (int c = 0; c < 2; ++c) {
      s.points.add(p);
      s.component.push_back(c);
    }
  }
  return s;
}

}  // namespace bivcov
