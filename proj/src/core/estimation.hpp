#pragma once

#include <string>
#include <vector>

#include "core/types.hpp"

namespace psychbench {

enum class EstimationMethod { Mle, PercentCorrect };

// Point estimate of one test taker's latent proficiency with a Wald CI.
// boundary_flag marks estimates that hit the theta clamp; their se comes from
// expected rather than observed information.
struct ProficiencyEstimate {
  std::string taker_id;
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  EstimationMethod method = EstimationMethod::Mle;
  bool boundary_flag = false;
};

// Fixed-effect combination of several variant estimates.
struct WeightedEstimate {
  double theta_weighted = 0.0;
  double se_weighted = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_components = 0;
};

// Linear rescaling between reporting metrics (e.g. z-scale to 500/100).
struct ScaleTransform {
  double target_mean = 500.0;
  double target_sd = 100.0;
  double source_mean = 0.0;
  double source_sd = 1.0;

  void validate() const;
  double apply(double theta) const {
    return target_mean + target_sd * (theta - source_mean) / source_sd;
  }
  double scale_ratio() const { return target_sd / source_sd; }
  ScaleTransform inverse() const;
};

// Maximum-likelihood theta for one pattern over [-kThetaBound, kThetaBound].
//
// Safeguarded Newton on the score function with bisection fallback on a
// bracketing grid; converges when |score| < 1e-8 or the step falls below
// 1e-10. All-lowest / all-highest patterns (and any pattern whose maximum
// lands on the clamp) are flagged as boundary estimates.
ProficiencyEstimate estimate_theta_mle(const ResponsePattern& pattern, const ItemSet& items);

// Earned score points over maximum score points across observed responses.
// A Gpc item's maximum is num_categories - 1; partial credit counts as its
// category value.
double percent_correct(const ResponsePattern& pattern, const ItemSet& items);

// Inverse-variance (fixed-effect) combination: w_k = 1/se_k^2. Rejects
// boundary-flagged or zero-se components; the caller excludes those first.
// Summation is order-insensitive (terms sorted, compensated).
WeightedEstimate combine_inverse_variance(const std::vector<ProficiencyEstimate>& estimates);

ProficiencyEstimate apply_scale(const ProficiencyEstimate& estimate,
                                const ScaleTransform& transform);
WeightedEstimate apply_scale(const WeightedEstimate& estimate, const ScaleTransform& transform);

// MLE for every row of a matrix; returned in row order.
std::vector<ProficiencyEstimate> estimate_matrix(const ResponseMatrix& matrix,
                                                 const ItemSet& items);

const char* to_string(EstimationMethod method);

}  // namespace psychbench
