#pragma once

#include <vector>

#include "core/types.hpp"

namespace psychbench {

// Category probabilities, log-likelihoods and information functions for the
// 3PL, 2PL and GPC response models. All functions are pure and thread-safe.
//
// Dichotomous models use
//   P(correct) = c + (1 - c) / (1 + exp(-1.7 a (theta - b)))
// with c = 0 for 2PL. GPC uses cumulative category logits
//   P(l) = exp(S_l) / sum_g exp(S_g),  S_l = sum_{v<=l} 1.7 a (theta - b + d_v)
// evaluated in log space; the shared v = 0 term cancels in the normalization.

// Probability of a correct response for a ThreePL or TwoPL item.
double prob_3pl(double theta, const ItemParameters& item);

// Probability vector over the m ordered categories of a Gpc item.
std::vector<double> prob_gpc(double theta, const ItemParameters& item);

// Dispatch over model kind: [1-p, p] for dichotomous items, the GPC vector otherwise.
std::vector<double> prob_category(double theta, const ItemParameters& item);

// log P(category | theta, item), computed without underflow for any finite theta.
double log_prob_category(double theta, const ItemParameters& item, int category);

struct ItemDerivatives {
  double log_prob;   // log P(category)
  double d1;         // d/dtheta log P
  double d2;         // d^2/dtheta^2 log P
};

// Analytic first and second theta-derivatives of one response's log-probability.
ItemDerivatives item_log_prob_derivatives(double theta, const ItemParameters& item,
                                          int category);

// Expected Fisher information contributed by one item at theta.
double item_expected_information(double theta, const ItemParameters& item);

// Expected score sum_l l * P(l | theta); strictly increasing in theta for a > 0.
double item_expected_score(double theta, const ItemParameters& item);

// Log-likelihood of a response pattern: sum of observed responses' log-probabilities.
// Missing responses are not administered and contribute nothing.
double pattern_log_likelihood(const ResponsePattern& pattern, const ItemSet& items,
                              double theta);

struct ScoreInfo {
  double score;        // d/dtheta log-likelihood
  double information;  // observed information, -d^2/dtheta^2 log-likelihood
};

// Analytic score and observed information of a pattern's log-likelihood.
ScoreInfo score_and_information(const ResponsePattern& pattern, const ItemSet& items,
                                double theta);

// Expected Fisher information of an item set at theta (sum over items).
double test_information(const ItemSet& items, double theta);

// As above but restricted to the pattern's observed items.
double test_information_observed(const ResponsePattern& pattern, const ItemSet& items,
                                 double theta);

}  // namespace psychbench
