#include "core/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/irt.hpp"
#include "core/stats.hpp"

namespace psychbench {

namespace {

constexpr double kZcrit95 = 1.959963984540054;  // Phi^-1(0.975)
constexpr double kScoreTolerance = 1e-8;
constexpr double kStepTolerance = 1e-10;
constexpr int kMaxNewtonIterations = 200;
constexpr int kScanPoints = 481;  // bracketing grid over [-6, 6], step 0.025
constexpr double kCandidateLogLikWindow = 2.0;
constexpr double kBoundaryMargin = 1e-6;

enum class PatternExtreme { None, AllLowest, AllHighest };

PatternExtreme classify_extreme(const ResponsePattern& pattern, const ItemSet& items) {
  bool all_lowest = true;
  bool all_highest = true;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    int cat = pattern.categories[i];
    if (cat == kMissing) continue;
    ++observed;
    if (cat != 0) all_lowest = false;
    if (cat != items.item(i).max_score()) all_highest = false;
  }
  if (observed == 0)
    throw ContractError("pattern '" + pattern.taker_id + "' has no observed responses");
  if (all_lowest) return PatternExtreme::AllLowest;
  if (all_highest) return PatternExtreme::AllHighest;
  return PatternExtreme::None;
}

ProficiencyEstimate finish_estimate(const ResponsePattern& pattern, const ItemSet& items,
                                    double theta, bool boundary) {
  ProficiencyEstimate est;
  est.taker_id = pattern.taker_id;
  est.theta_hat = theta;
  est.boundary_flag = boundary;
  double info;
  if (boundary) {
    info = test_information_observed(pattern, items, theta);
  } else {
    info = score_and_information(pattern, items, theta).information;
    if (!(info > 0.0)) info = test_information_observed(pattern, items, theta);
  }
  est.se = 1.0 / std::sqrt(info);
  est.ci_low = est.theta_hat - kZcrit95 * est.se;
  est.ci_high = est.theta_hat + kZcrit95 * est.se;
  return est;
}

// Polishes one bracketing-grid candidate: Newton steps on the score, clipped
// to the bracket, with bisection whenever a step is unusable.
double polish_candidate(const ResponsePattern& pattern, const ItemSet& items, double start,
                        double lo, double hi) {
  double theta = start;
  for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
    ScoreInfo si = score_and_information(pattern, items, theta);
    if (std::abs(si.score) < kScoreTolerance) return theta;
    if (si.score > 0.0)
      lo = theta;
    else
      hi = theta;
    double candidate = si.information > 0.0 ? theta + si.score / si.information
                                            : 0.5 * (lo + hi);
    if (!(candidate > lo && candidate < hi)) candidate = 0.5 * (lo + hi);
    if (std::abs(candidate - theta) < kStepTolerance) return candidate;
    theta = candidate;
  }
  throw EstimationError("theta MLE did not converge for pattern '" + pattern.taker_id + "'",
                        theta);
}

}  // namespace

void ScaleTransform::validate() const {
  if (!(target_sd > 0.0) || !(source_sd > 0.0))
    throw ContractError("scale transform requires positive standard deviations");
  if (!std::isfinite(target_mean) || !std::isfinite(source_mean))
    throw ContractError("scale transform requires finite means");
}

ScaleTransform ScaleTransform::inverse() const {
  return ScaleTransform{source_mean, source_sd, target_mean, target_sd};
}

ProficiencyEstimate estimate_theta_mle(const ResponsePattern& pattern, const ItemSet& items) {
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");

  PatternExtreme extreme = classify_extreme(pattern, items);
  if (extreme == PatternExtreme::AllLowest)
    return finish_estimate(pattern, items, -kThetaBound, true);
  if (extreme == PatternExtreme::AllHighest)
    return finish_estimate(pattern, items, kThetaBound, true);

  // Bracketing grid scan.
  const double step = 2.0 * kThetaBound / (kScanPoints - 1);
  std::vector<double> ll(kScanPoints);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kScanPoints; ++j) {
    ll[j] = pattern_log_likelihood(pattern, items, -kThetaBound + j * step);
    best_ll = std::max(best_ll, ll[j]);
  }

  // Polish every competitive local grid maximum; the likelihood need not be
  // unimodal once 3PL items are in the mix.
  double best_theta = 0.0;
  double best_polished = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kScanPoints; ++j) {
    bool local_max = (j == 0 || ll[j] >= ll[j - 1]) &&
                     (j == kScanPoints - 1 || ll[j] >= ll[j + 1]);
    if (!local_max || ll[j] < best_ll - kCandidateLogLikWindow) continue;
    double center = -kThetaBound + j * step;
    double lo = std::max(-kThetaBound, center - step);
    double hi = std::min(kThetaBound, center + step);
    double theta = polish_candidate(pattern, items, center, lo, hi);
    double value = pattern_log_likelihood(pattern, items, theta);
    if (value > best_polished) {
      best_polished = value;
      best_theta = theta;
    }
  }

  bool boundary = std::abs(best_theta) > kThetaBound - kBoundaryMargin;
  if (boundary) best_theta = best_theta > 0.0 ? kThetaBound : -kThetaBound;
  return finish_estimate(pattern, items, best_theta, boundary);
}

double percent_correct(const ResponsePattern& pattern, const ItemSet& items) {
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");
  long long earned = 0;
  long long maximum = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    int cat = pattern.categories[i];
    if (cat == kMissing) continue;
    earned += cat;
    maximum += items.item(i).max_score();
  }
  if (maximum == 0)
    throw ContractError("pattern '" + pattern.taker_id + "' has no observed responses");
  return static_cast<double>(earned) / static_cast<double>(maximum);
}

WeightedEstimate combine_inverse_variance(const std::vector<ProficiencyEstimate>& estimates) {
  if (estimates.empty())
    throw ContractError("combine_inverse_variance requires at least one estimate");
  std::vector<double> weights;
  std::vector<double> weighted_thetas;
  weights.reserve(estimates.size());
  weighted_thetas.reserve(estimates.size());
  for (const ProficiencyEstimate& est : estimates) {
    if (est.boundary_flag)
      throw ContractError("boundary-flagged estimate '" + est.taker_id +
                          "' cannot enter inverse-variance weighting");
    if (!(est.se > 0.0) || !std::isfinite(est.se))
      throw ContractError("estimate '" + est.taker_id + "' has non-positive se");
    double w = 1.0 / (est.se * est.se);
    weights.push_back(w);
    weighted_thetas.push_back(w * est.theta_hat);
  }
  // Sorting the terms makes the reduction independent of component order.
  std::sort(weights.begin(), weights.end());
  std::sort(weighted_thetas.begin(), weighted_thetas.end());
  CompensatedSum weight_sum;
  for (double w : weights) weight_sum.add(w);
  CompensatedSum theta_sum;
  for (double wt : weighted_thetas) theta_sum.add(wt);

  WeightedEstimate out;
  out.n_components = estimates.size();
  out.theta_weighted = theta_sum.value() / weight_sum.value();
  out.se_weighted = 1.0 / std::sqrt(weight_sum.value());
  out.ci_low = out.theta_weighted - kZcrit95 * out.se_weighted;
  out.ci_high = out.theta_weighted + kZcrit95 * out.se_weighted;
  return out;
}

ProficiencyEstimate apply_scale(const ProficiencyEstimate& estimate,
                                const ScaleTransform& transform) {
  transform.validate();
  ProficiencyEstimate out = estimate;
  out.theta_hat = transform.apply(estimate.theta_hat);
  out.se = estimate.se * transform.scale_ratio();
  out.ci_low = transform.apply(estimate.ci_low);
  out.ci_high = transform.apply(estimate.ci_high);
  return out;
}

WeightedEstimate apply_scale(const WeightedEstimate& estimate, const ScaleTransform& transform) {
  transform.validate();
  WeightedEstimate out = estimate;
  out.theta_weighted = transform.apply(estimate.theta_weighted);
  out.se_weighted = estimate.se_weighted * transform.scale_ratio();
  out.ci_low = transform.apply(estimate.ci_low);
  out.ci_high = transform.apply(estimate.ci_high);
  return out;
}

std::vector<ProficiencyEstimate> estimate_matrix(const ResponseMatrix& matrix,
                                                 const ItemSet& items) {
  std::vector<ProficiencyEstimate> out;
  out.reserve(matrix.num_respondents());
  for (std::size_t r = 0; r < matrix.num_respondents(); ++r)
    out.push_back(estimate_theta_mle(matrix.row_pattern(r), items));
  return out;
}

const char* to_string(EstimationMethod method) {
  return method == EstimationMethod::Mle ? "mle" : "percent_correct";
}

}  // namespace psychbench
