#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/calibration.hpp"
#include "core/estimation.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"

namespace psychbench {

// Synthetic test-taker specification. With a fixed seed the output is
// byte-identical across runs: respondent r draws from SplitMix64 substream
// r + 1 (its theta first when sampled, then one uniform per cell for
// missingness when enabled, then one per administered cell for the category).
struct SimulationSpec {
  std::uint64_t seed = 0;
  std::vector<double> thetas;  // explicit taker abilities, or empty when sampled
  struct NormalThetas {
    double mean = 0.0;
    double sd = 1.0;
    int count = 0;
  };
  std::optional<NormalThetas> normal;  // sampled abilities when set
  double missingness = 0.0;            // per-cell completely-at-random in [0, 1)
  std::string respondent_prefix = "sim";

  void validate() const;
  static SimulationSpec from_json_text(const std::string& text);
};

// Draws one scored category by inverse CDF on a single uniform.
int simulate_response(double theta, const ItemParameters& item, SplitMix64& rng);

// Realized taker abilities for a spec (explicit list or per-taker draws).
std::vector<double> resolve_thetas(const SimulationSpec& spec);

// Rectangular respondents x items draw under the spec.
ResponseMatrix simulate_matrix(const SimulationSpec& spec, const ItemSet& items);

// Simulates one pattern per true theta (substream per taker) and estimates
// each with the given scoring item set.
struct ThetaRecovery {
  double bias = 0.0;
  double rmse = 0.0;
  double ci_coverage = 0.0;  // over non-boundary estimates
  double median_se = 0.0;
  int n = 0;
  int n_boundary = 0;
  std::vector<ProficiencyEstimate> estimates;
};

// Parameter- and proficiency-recovery study against known ground truth:
// simulates a matrix from `true_items`, optionally recalibrates, then
// estimates every respondent's theta and compares with the truth.
struct RecoveryReport {
  // Parameter recovery; NaN when recalibrate was off.
  double bias_a = 0.0, rmse_a = 0.0;
  double bias_b = 0.0, rmse_b = 0.0;
  double bias_c = 0.0, rmse_c = 0.0;
  std::optional<CalibrationResult> calibration;
  ThetaRecovery theta;
};

ThetaRecovery theta_recovery_study(const ItemSet& items, const std::vector<double>& true_thetas,
                                   std::uint64_t seed, double missingness = 0.0);

RecoveryReport recovery_study(const ItemSet& true_items, const SimulationSpec& spec,
                              const CalibrationConfig& config, bool recalibrate);

}  // namespace psychbench
