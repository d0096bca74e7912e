#include "core/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "core/irt.hpp"
#include "core/stats.hpp"

namespace psychbench {

namespace {

std::string padded_index(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return digits;
}

}  // namespace

void SimulationSpec::validate() const {
  if (!(missingness >= 0.0 && missingness < 1.0))
    throw ContractError("missingness must be in [0, 1)");
  if (thetas.empty() == !normal.has_value())
    throw ContractError("exactly one of explicit thetas or a normal spec is required");
  for (double t : thetas)
    if (!std::isfinite(t)) throw ContractError("non-finite theta in simulation spec");
  if (normal) {
    if (normal->count < 1) throw ContractError("normal theta spec requires count >= 1");
    if (!(normal->sd >= 0.0) || !std::isfinite(normal->sd) || !std::isfinite(normal->mean))
      throw ContractError("normal theta spec requires finite mean and sd >= 0");
  }
  if (respondent_prefix.empty())
    throw ContractError("respondent_prefix must be non-empty");
}

SimulationSpec SimulationSpec::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("simulation spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("simulation spec must be a JSON object");
  SimulationSpec spec;
  try {
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.missingness = doc.value("missingness", 0.0);
    spec.respondent_prefix = doc.value("respondent_prefix", std::string("sim"));
    if (!doc.contains("thetas"))
      throw ValidationError("simulation spec missing 'thetas'");
    const auto& thetas = doc.at("thetas");
    if (thetas.contains("values")) {
      spec.thetas = thetas.at("values").get<std::vector<double>>();
    } else if (thetas.contains("normal")) {
      const auto& normal = thetas.at("normal");
      SimulationSpec::NormalThetas n;
      n.mean = normal.value("mean", 0.0);
      n.sd = normal.value("sd", 1.0);
      n.count = normal.at("count").get<int>();
      spec.normal = n;
    } else {
      throw ValidationError("'thetas' must contain 'values' or 'normal'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("simulation spec field error: ") + e.what());
  }
  spec.validate();
  return spec;
}

int simulate_response(double theta, const ItemParameters& item, SplitMix64& rng) {
  std::vector<double> probs = prob_category(theta, item);
  double u = rng.next_double();
  double cum = 0.0;
  for (std::size_t l = 0; l + 1 < probs.size(); ++l) {
    cum += probs[l];
    if (u < cum) return static_cast<int>(l);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::vector<double> resolve_thetas(const SimulationSpec& spec) {
  spec.validate();
  if (!spec.thetas.empty()) return spec.thetas;
  SplitMix64 master(spec.seed);
  std::vector<double> thetas(spec.normal->count);
  for (int r = 0; r < spec.normal->count; ++r) {
    SplitMix64 sub = master.split(static_cast<std::uint64_t>(r));
    thetas[r] = spec.normal->mean + spec.normal->sd * inverse_normal_cdf(sub.next_double_open());
  }
  return thetas;
}

ResponseMatrix simulate_matrix(const SimulationSpec& spec, const ItemSet& items) {
  spec.validate();
  if (items.empty()) throw ContractError("simulate_matrix requires a non-empty item set");
  const std::vector<double> thetas = resolve_thetas(spec);

  ResponseMatrix matrix;
  matrix.items.reserve(items.size());
  for (const ItemParameters& item : items.items())
    matrix.items.push_back({item.item_id, item.model, item.num_categories});
  matrix.respondent_ids.reserve(thetas.size());
  matrix.cells.assign(thetas.size() * items.size(), kMissing);

  SplitMix64 master(spec.seed);
  for (std::size_t r = 0; r < thetas.size(); ++r) {
    matrix.respondent_ids.push_back(spec.respondent_prefix + "-" + padded_index(r));
    SplitMix64 sub = master.split(r);
    if (spec.normal) sub.next_double_open();  // theta draw consumed by resolve_thetas
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (spec.missingness > 0.0 && sub.next_double() < spec.missingness) continue;
      matrix.cell(r, i) = simulate_response(thetas[r], items.item(i), sub);
    }
  }
  return matrix;
}

ThetaRecovery theta_recovery_study(const ItemSet& items, const std::vector<double>& true_thetas,
                                   std::uint64_t seed, double missingness) {
  if (true_thetas.empty()) throw ContractError("recovery study requires at least one taker");
  SimulationSpec spec;
  spec.seed = seed;
  spec.thetas = true_thetas;
  spec.missingness = missingness;
  ResponseMatrix matrix = simulate_matrix(spec, items);

  ThetaRecovery out;
  out.estimates = estimate_matrix(matrix, items);
  CompensatedSum bias_sum, sq_sum;
  std::vector<double> ses;
  int covered = 0;
  int interior = 0;
  for (std::size_t r = 0; r < out.estimates.size(); ++r) {
    const ProficiencyEstimate& est = out.estimates[r];
    if (est.boundary_flag) {
      ++out.n_boundary;
      continue;
    }
    ++interior;
    double err = est.theta_hat - true_thetas[r];
    bias_sum.add(err);
    sq_sum.add(err * err);
    ses.push_back(est.se);
    if (est.ci_low <= true_thetas[r] && true_thetas[r] <= est.ci_high) ++covered;
  }
  out.n = interior;
  if (interior > 0) {
    out.bias = bias_sum.value() / interior;
    out.rmse = std::sqrt(sq_sum.value() / interior);
    out.ci_coverage = static_cast<double>(covered) / interior;
    std::sort(ses.begin(), ses.end());
    out.median_se = quantile_sorted(ses, 0.5);
  }
  return out;
}

RecoveryReport recovery_study(const ItemSet& true_items, const SimulationSpec& spec,
                              const CalibrationConfig& config, bool recalibrate) {
  spec.validate();
  if (true_items.empty()) throw ContractError("recovery study requires a non-empty item set");
  const std::vector<double> thetas = resolve_thetas(spec);
  if (thetas.empty()) throw ContractError("recovery study requires at least one taker");
  ResponseMatrix matrix = simulate_matrix(spec, true_items);

  RecoveryReport report;
  const ItemSet* scoring_items = &true_items;
  if (recalibrate) {
    report.calibration = calibrate_mml_em(matrix, config);
    scoring_items = &report.calibration->items;

    CompensatedSum bias_a, sq_a, bias_b, sq_b, bias_c, sq_c;
    int n_items = 0;
    int n_c = 0;
    for (std::size_t i = 0; i < true_items.size(); ++i) {
      const ItemParameters& truth = true_items.item(i);
      const ItemParameters& fitted = scoring_items->item(i);
      double ea = fitted.a - truth.a;
      double eb = fitted.b - truth.b;
      bias_a.add(ea);
      sq_a.add(ea * ea);
      bias_b.add(eb);
      sq_b.add(eb * eb);
      ++n_items;
      if (truth.model == ModelKind::ThreePL) {
        double ec = fitted.c - truth.c;
        bias_c.add(ec);
        sq_c.add(ec * ec);
        ++n_c;
      }
    }
    report.bias_a = bias_a.value() / n_items;
    report.rmse_a = std::sqrt(sq_a.value() / n_items);
    report.bias_b = bias_b.value() / n_items;
    report.rmse_b = std::sqrt(sq_b.value() / n_items);
    if (n_c > 0) {
      report.bias_c = bias_c.value() / n_c;
      report.rmse_c = std::sqrt(sq_c.value() / n_c);
    } else {
      report.bias_c = std::numeric_limits<double>::quiet_NaN();
      report.rmse_c = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    report.bias_a = report.rmse_a = std::numeric_limits<double>::quiet_NaN();
    report.bias_b = report.rmse_b = std::numeric_limits<double>::quiet_NaN();
    report.bias_c = report.rmse_c = std::numeric_limits<double>::quiet_NaN();
  }

  // Proficiency recovery on the same matrix with the scoring parameters.
  ThetaRecovery theta;
  theta.estimates = estimate_matrix(matrix, *scoring_items);
  CompensatedSum bias_sum, sq_sum;
  std::vector<double> ses;
  int covered = 0;
  int interior = 0;
  for (std::size_t r = 0; r < theta.estimates.size(); ++r) {
    const ProficiencyEstimate& est = theta.estimates[r];
    if (est.boundary_flag) {
      ++theta.n_boundary;
      continue;
    }
    ++interior;
    double err = est.theta_hat - thetas[r];
    bias_sum.add(err);
    sq_sum.add(err * err);
    ses.push_back(est.se);
    if (est.ci_low <= thetas[r] && thetas[r] <= est.ci_high) ++covered;
  }
  theta.n = interior;
  if (interior > 0) {
    theta.bias = bias_sum.value() / interior;
    theta.rmse = std::sqrt(sq_sum.value() / interior);
    theta.ci_coverage = static_cast<double>(covered) / interior;
    std::sort(ses.begin(), ses.end());
    theta.median_se = quantile_sorted(ses, 0.5);
  }
  report.theta = std::move(theta);
  return report;
}

}  // namespace psychbench
