#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace psychbench {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile function, Wichura's AS241 (PPND16). Implemented
// in-repo so simulated streams are bit-stable across library versions.
double inverse_normal_cdf(double p);

// Neumaier-compensated accumulator. Accumulation order still matters at the
// last ulp; callers that need permutation invariance sort their terms first.
class CompensatedSum {
 public:
  void add(double value) {
    double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value))
      comp_ += (sum_ - t) + value;
    else
      comp_ += (value - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted_values, double q);

double mean(const std::vector<double>& values);
// Unbiased (n - 1) standard deviation; 0 for a single value.
double sample_sd(const std::vector<double>& values);

}  // namespace psychbench
