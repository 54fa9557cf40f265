#pragma once

#include <cmath>

#include "slipflow/grid.hpp"

namespace slipflow {

/// Neumaier-compensated running sum; order-dependent, so callers always
/// accumulate in flat-index order to keep results reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Compensated sum of interior cell values.
double interior_sum(const ScalarField& f);

/// Volume integrals (midpoint rule for cells, trapezoid on wall planes for
/// faces and edges).
double integrate(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double inner(const EdgeField& a, const EdgeField& b);

}  // namespace slipflow
