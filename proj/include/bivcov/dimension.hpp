#pragma once

#include <string>

#include "bivcov/errors.hpp"

namespace bivcov {

/// Spatial dimension n in {1, 2, 3}. The derivative criteria exist for n = 1 and n = 3 only;
/// n = 2 is answered with the n = 3 criterion, since positive definiteness in R^3 implies it
/// in R^2.
class Dimension {
 public:
  explicit Dimension(int n) : n_(n) {
    if (n < 1 || n > 3) throw ParameterError("dimension must be 1, 2 or 3, got " + std::to_string(n));
  }

  int value() const { return n_; }
  int criterion() const { return n_ == 1 ? 1 : 3; }
  bool promoted() const { return n_ == 2; }

  friend bool operator==(Dimension a, Dimension b) { return a.n_ == b.n_; }

 private:
  int n_;
};

}  // namespace bivcov
