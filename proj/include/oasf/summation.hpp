#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace oasf {

// Neumaier-compensated accumulator.  Summation order is fixed by the
// caller, so totals are bit-stable across runs and thread counts as long
// as values are fed in a deterministic order.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace oasf
