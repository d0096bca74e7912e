#include "core/irt.hpp"

#include <algorithm>
#include <cmath>

namespace psychbench {

namespace {

void check_theta(double theta) {
  if (!std::isfinite(theta)) throw DomainError("theta must be finite");
}

void check_dichotomous(const ItemParameters& item) {
  if (item.model == ModelKind::Gpc)
    throw ContractError("item '" + item.item_id + "': dichotomous model required");
}

void check_gpc(const ItemParameters& item) {
  if (item.model != ModelKind::Gpc)
    throw ContractError("item '" + item.item_id + "': GPC model required");
  if (static_cast<int>(item.d.size()) != item.num_categories - 1)
    throw ContractError("item '" + item.item_id + "': d length mismatch");
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// Cumulative category logits S_0..S_{m-1} with the v = 0 term cancelled.
void gpc_cumulative_logits(double theta, const ItemParameters& item,
                           std::vector<double>& s) {
  const int m = item.num_categories;
  s.resize(m);
  s[0] = 0.0;
  double acc = 0.0;
  for (int v = 1; v < m; ++v) {
    acc += kScalingConstant * item.a * (theta - item.b + item.d[v - 1]);
    s[v] = acc;
  }
}

double log_sum_exp(const std::vector<double>& s) {
  double mx = *std::max_element(s.begin(), s.end());
  double sum = 0.0;
  for (double v : s) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

struct GpcMoments {
  double mean;      // E[g] under P(. | theta)
  double variance;  // Var[g]
};

GpcMoments gpc_score_moments(const std::vector<double>& probs) {
  double mean = 0.0;
  for (std::size_t g = 0; g < probs.size(); ++g) mean += probs[g] * static_cast<double>(g);
  double var = 0.0;
  for (std::size_t g = 0; g < probs.size(); ++g) {
    double diff = static_cast<double>(g) - mean;
    var += probs[g] * diff * diff;
  }
  return {mean, var};
}

}  // namespace

double prob_3pl(double theta, const ItemParameters& item) {
  check_theta(theta);
  check_dichotomous(item);
  double z = kScalingConstant * item.a * (theta - item.b);
  double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
  return c + (1.0 - c) * logistic(z);
}

std::vector<double> prob_gpc(double theta, const ItemParameters& item) {
  check_theta(theta);
  check_gpc(item);
  std::vector<double> s;
  gpc_cumulative_logits(theta, item, s);
  double lse = log_sum_exp(s);
  std::vector<double> probs(s.size());
  for (std::size_t l = 0; l < s.size(); ++l) probs[l] = std::exp(s[l] - lse);
  return probs;
}

std::vector<double> prob_category(double theta, const ItemParameters& item) {
  if (item.model == ModelKind::Gpc) return prob_gpc(theta, item);
  double p = prob_3pl(theta, item);
  return {1.0 - p, p};
}

double log_prob_category(double theta, const ItemParameters& item, int category) {
  check_theta(theta);
  if (category < 0 || category >= item.num_categories)
    throw ContractError("item '" + item.item_id + "': category " + std::to_string(category) +
                        " out of range");
  if (item.model == ModelKind::Gpc) {
    std::vector<double> s;
    gpc_cumulative_logits(theta, item, s);
    return s[category] - log_sum_exp(s);
  }
  double z = kScalingConstant * item.a * (theta - item.b);
  double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
  if (category == 0) {
    // log((1-c)(1-L)) stays finite where the linear-space product underflows.
    return std::log1p(-c) - softplus(z);
  }
  if (c == 0.0) return -softplus(-z);
  return std::log(c + (1.0 - c) * logistic(z));
}

ItemDerivatives item_log_prob_derivatives(double theta, const ItemParameters& item,
                                          int category) {
  check_theta(theta);
  if (category < 0 || category >= item.num_categories)
    throw ContractError("item '" + item.item_id + "': category " + std::to_string(category) +
                        " out of range");
  const double da = kScalingConstant * item.a;
  if (item.model == ModelKind::Gpc) {
    std::vector<double> s;
    gpc_cumulative_logits(theta, item, s);
    double lse = log_sum_exp(s);
    std::vector<double> probs(s.size());
    for (std::size_t l = 0; l < s.size(); ++l) probs[l] = std::exp(s[l] - lse);
    GpcMoments moments = gpc_score_moments(probs);
    ItemDerivatives out;
    out.log_prob = s[category] - lse;
    out.d1 = da * (static_cast<double>(category) - moments.mean);
    out.d2 = -da * da * moments.variance;
    return out;
  }
  const double z = da * (theta - item.b);
  const double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
  const double L = logistic(z);
  const double Lc = logistic(-z);  // 1 - L without cancellation
  ItemDerivatives out;
  if (category == 0) {
    out.log_prob = std::log1p(-c) - softplus(z);
    out.d1 = -da * L;
    out.d2 = -da * da * L * Lc;
    return out;
  }
  if (c == 0.0) {
    out.log_prob = -softplus(-z);
    out.d1 = da * Lc;
    out.d2 = -da * da * L * Lc;
    return out;
  }
  const double p = c + (1.0 - c) * L;
  const double dp = (1.0 - c) * da * L * Lc;
  const double ddp = (1.0 - c) * da * da * L * Lc * (1.0 - 2.0 * L);
  out.log_prob = std::log(p);
  out.d1 = dp / p;
  out.d2 = ddp / p - (dp / p) * (dp / p);
  return out;
}

double item_expected_information(double theta, const ItemParameters& item) {
  check_theta(theta);
  const double da = kScalingConstant * item.a;
  if (item.model == ModelKind::Gpc) {
    GpcMoments moments = gpc_score_moments(prob_gpc(theta, item));
    return da * da * moments.variance;
  }
  const double z = da * (theta - item.b);
  const double L = logistic(z);
  const double Lc = logistic(-z);
  const double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
  if (c == 0.0) return da * da * L * Lc;
  const double p = c + (1.0 - c) * L;
  return (1.0 - c) * da * da * L * L * Lc / p;
}

double item_expected_score(double theta, const ItemParameters& item) {
  if (item.model == ModelKind::Gpc) return gpc_score_moments(prob_gpc(theta, item)).mean;
  return prob_3pl(theta, item);
}

double pattern_log_likelihood(const ResponsePattern& pattern, const ItemSet& items,
                              double theta) {
  check_theta(theta);
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");
  double ll = 0.0;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    int cat = pattern.categories[i];
    if (cat == kMissing) continue;
    ll += log_prob_category(theta, items.item(i), cat);
    ++observed;
  }
  if (observed == 0)
    throw ContractError("pattern '" + pattern.taker_id + "' has no observed responses");
  return ll;
}

ScoreInfo score_and_information(const ResponsePattern& pattern, const ItemSet& items,
                                double theta) {
  check_theta(theta);
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");
  double score = 0.0;
  double info = 0.0;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    int cat = pattern.categories[i];
    if (cat == kMissing) continue;
    ItemDerivatives d = item_log_prob_derivatives(theta, items.item(i), cat);
    score += d.d1;
    info -= d.d2;
    ++observed;
  }
  if (observed == 0)
    throw ContractError("pattern '" + pattern.taker_id + "' has no observed responses");
  return {score, info};
}

double test_information(const ItemSet& items, double theta) {
  if (items.empty()) throw ContractError("test_information requires a non-empty item set");
  double info = 0.0;
  for (const ItemParameters& item : items.items())
    info += item_expected_information(theta, item);
  return info;
}

double test_information_observed(const ResponsePattern& pattern, const ItemSet& items,
                                 double theta) {
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");
  double info = 0.0;
  std::size_t observed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (pattern.categories[i] == kMissing) continue;
    info += item_expected_information(theta, items.item(i));
    ++observed;
  }
  if (observed == 0)
    throw ContractError("pattern '" + pattern.taker_id + "' has no observed responses");
  return info;
}

}  // namespace psychbench
