#include "core/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "core/irt.hpp"
#include "core/stats.hpp"

namespace psychbench {

namespace {

constexpr double kCFloor = 1e-4;
constexpr double kCCeil = 0.5;
constexpr double kBBound = 10.0;
constexpr double kDBound = 8.0;
constexpr int kMaxMstepIterations = 25;
constexpr double kMstepTolerance = 1e-7;
constexpr double kNeutralSlope = 0.851;  // 1/1.175 on the 1.7-scaled metric

inline void neumaier_add(double& sum, double& comp, double value) {
  double t = sum + value;
  if (std::abs(sum) >= std::abs(value))
    comp += (sum - t) + value;
  else
    comp += (value - t) + sum;
  sum = t;
}

// Free parameter layout: 2PL [a, b]; 3PL [a, b, c];
// GPC [a, b, d_1..d_{m-2}] with d_{m-1} = -sum of the free thresholds.
int free_param_count(const ItemParameters& item) {
  switch (item.model) {
    case ModelKind::TwoPL: return 2;
    case ModelKind::ThreePL: return 3;
    case ModelKind::Gpc: return 2 + std::max(0, item.num_categories - 2);
  }
  return 0;
}

Eigen::VectorXd pack_params(const ItemParameters& item) {
  Eigen::VectorXd eta(free_param_count(item));
  eta[0] = item.a;
  eta[1] = item.b;
  if (item.model == ModelKind::ThreePL) eta[2] = item.c;
  if (item.model == ModelKind::Gpc)
    for (int j = 0; j + 2 < item.num_categories; ++j) eta[2 + j] = item.d[j];
  return eta;
}

void unpack_params(const Eigen::VectorXd& eta, ItemParameters& item) {
  item.a = eta[0];
  item.b = eta[1];
  if (item.model == ModelKind::ThreePL) item.c = eta[2];
  if (item.model == ModelKind::Gpc) {
    double sum = 0.0;
    for (int j = 0; j + 2 < item.num_categories; ++j) {
      item.d[j] = eta[2 + j];
      sum += item.d[j];
    }
    item.d[item.num_categories - 2] = -sum;
  }
}

void project_params(Eigen::VectorXd& eta, const ItemParameters& item,
                    const CalibrationConfig& config) {
  eta[0] = std::clamp(eta[0], config.a_min, config.a_max);
  eta[1] = std::clamp(eta[1], -kBBound, kBBound);
  if (item.model == ModelKind::ThreePL)
    eta[2] = std::clamp(eta[2], config.c_penalty ? kCFloor : 0.0, kCCeil);
  if (item.model == ModelKind::Gpc)
    for (int j = 2; j < eta.size(); ++j) eta[j] = std::clamp(eta[j], -kDBound, kDBound);
}

double c_penalty_value(const ItemParameters& item, const CalibrationConfig& config) {
  if (!config.c_penalty || item.model != ModelKind::ThreePL) return 0.0;
  // Beta(2,8)-shaped log density, mode at c = 1/8.
  return std::log(item.c) + 7.0 * std::log1p(-item.c);
}

// Expected category counts per (node, item, category) from the E-step.
struct ExpectedCounts {
  int num_nodes = 0;
  int num_items = 0;
  int max_cats = 0;
  std::vector<double> sum;
  std::vector<double> comp;

  void init(int nodes, int items, int cats) {
    num_nodes = nodes;
    num_items = items;
    max_cats = cats;
    sum.assign(static_cast<std::size_t>(nodes) * items * cats, 0.0);
    comp.assign(sum.size(), 0.0);
  }
  std::size_t index(int k, int i, int l) const {
    return (static_cast<std::size_t>(k) * num_items + i) * max_cats + l;
  }
  void add(int k, int i, int l, double value) {
    std::size_t idx = index(k, i, l);
    neumaier_add(sum[idx], comp[idx], value);
  }
  double get(int k, int i, int l) const {
    std::size_t idx = index(k, i, l);
    return sum[idx] + comp[idx];
  }
};

// Expected complete-data log-likelihood for one item given expected counts.
double item_q_value(const ItemParameters& item, const ExpectedCounts& counts,
                    const LatentQuadrature& quad, int item_index,
                    const CalibrationConfig& config) {
  double q = 0.0;
  for (int k = 0; k < static_cast<int>(quad.size()); ++k) {
    for (int l = 0; l < item.num_categories; ++l) {
      double r = counts.get(k, item_index, l);
      if (r == 0.0) continue;
      q += r * log_prob_category(quad.nodes()[k], item, l);
    }
  }
  return q + c_penalty_value(item, config);
}

// Score vector and Fisher-scoring Hessian approximation of the item Q-function.
void item_gradient_fisher(const ItemParameters& item, const ExpectedCounts& counts,
                          const LatentQuadrature& quad, int item_index,
                          const CalibrationConfig& config, Eigen::VectorXd& grad,
                          Eigen::MatrixXd& fisher) {
  const int p = free_param_count(item);
  grad.setZero(p);
  fisher.setZero(p, p);
  const double da = kScalingConstant * item.a;

  if (item.model != ModelKind::Gpc) {
    const double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
    Eigen::VectorXd dp(p);
    for (int k = 0; k < static_cast<int>(quad.size()); ++k) {
      const double theta = quad.nodes()[k];
      const double r1 = counts.get(k, item_index, 1);
      const double r0 = counts.get(k, item_index, 0);
      const double n = r0 + r1;
      if (n == 0.0) continue;
      const double z = da * (theta - item.b);
      const double L = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double Lc = 1.0 - L;
      const double p1 = std::clamp(c + (1.0 - c) * L, 1e-12, 1.0 - 1e-12);
      const double p0 = 1.0 - p1;
      dp[0] = (1.0 - c) * kScalingConstant * (theta - item.b) * L * Lc;
      dp[1] = -(1.0 - c) * da * L * Lc;
      if (p == 3) dp[2] = Lc;
      const double resid = (r1 - n * p1) / (p1 * p0);
      grad += resid * dp;
      fisher += (n / (p1 * p0)) * (dp * dp.transpose());
    }
    if (item.model == ModelKind::ThreePL && config.c_penalty) {
      grad[2] += 1.0 / item.c - 7.0 / (1.0 - item.c);
      fisher(2, 2) += 1.0 / (item.c * item.c) + 7.0 / ((1.0 - item.c) * (1.0 - item.c));
    }
    return;
  }

  const int m = item.num_categories;
  Eigen::MatrixXd ds(m, p);  // dS_l / d eta, row per category
  Eigen::VectorXd s(m), probs(m), ebar(p);
  for (int k = 0; k < static_cast<int>(quad.size()); ++k) {
    const double theta = quad.nodes()[k];
    double n = 0.0;
    for (int l = 0; l < m; ++l) n += counts.get(k, item_index, l);
    if (n == 0.0) continue;

    ds.setZero();
    s[0] = 0.0;
    double acc = 0.0;
    double acc_da = 0.0;
    for (int v = 1; v < m; ++v) {
      const double dv = item.d[v - 1];
      acc += da * (theta - item.b + dv);
      acc_da += kScalingConstant * (theta - item.b + dv);
      s[v] = acc;
      ds(v, 0) = acc_da;
      ds(v, 1) = -static_cast<double>(v) * da;
      for (int j = 0; j + 2 < m; ++j)
        ds(v, 2 + j) = da * ((j + 1 <= v ? 1.0 : 0.0) - (v == m - 1 ? 1.0 : 0.0));
    }
    const double mx = s.maxCoeff();
    double total = 0.0;
    for (int l = 0; l < m; ++l) {
      probs[l] = std::exp(s[l] - mx);
      total += probs[l];
    }
    probs /= total;

    ebar.setZero();
    for (int l = 0; l < m; ++l) ebar += probs[l] * ds.row(l).transpose();
    for (int l = 0; l < m; ++l) {
      const double r = counts.get(k, item_index, l);
      if (r != 0.0) grad += r * (ds.row(l).transpose() - ebar);
    }
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
    for (int l = 0; l < m; ++l) {
      Eigen::VectorXd row = ds.row(l).transpose();
      second += probs[l] * (row * row.transpose());
    }
    fisher += n * (second - ebar * ebar.transpose());
  }
}

// One M-step: Fisher-scoring Newton with backtracking line search. Returns
// the largest absolute parameter change.
double maximize_item(ItemParameters& item, const ExpectedCounts& counts,
                     const LatentQuadrature& quad, int item_index,
                     const CalibrationConfig& config) {
  const int p = free_param_count(item);
  Eigen::VectorXd eta = pack_params(item);
  const Eigen::VectorXd eta_start = eta;
  double q_current = item_q_value(item, counts, quad, item_index, config);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd fisher(p, p);

  for (int iter = 0; iter < kMaxMstepIterations; ++iter) {
    item_gradient_fisher(item, counts, quad, item_index, config, grad, fisher);
    fisher.diagonal().array() += 1e-9 * (1.0 + fisher.diagonal().array().abs());
    Eigen::VectorXd direction = fisher.ldlt().solve(grad);
    if (!direction.allFinite()) break;

    double t = 1.0;
    bool accepted = false;
    ItemParameters trial = item;
    for (int halving = 0; halving < 30; ++halving) {
      Eigen::VectorXd cand = eta + t * direction;
      project_params(cand, item, config);
      unpack_params(cand, trial);
      double q_trial = item_q_value(trial, counts, quad, item_index, config);
      if (q_trial > q_current) {
        eta = cand;
        item = trial;
        q_current = q_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    if ((t * direction).cwiseAbs().maxCoeff() < kMstepTolerance) break;
  }
  return (eta - eta_start).cwiseAbs().maxCoeff();
}

// Cached log P(category | node) tables, laid out node-contiguous per (item, category).
struct LogProbTables {
  int num_nodes = 0;
  int max_cats = 0;
  std::vector<double> values;

  void build(const ItemSet& items, const LatentQuadrature& quad) {
    num_nodes = static_cast<int>(quad.size());
    max_cats = 2;
    for (const auto& item : items.items()) max_cats = std::max(max_cats, item.num_categories);
    values.assign(static_cast<std::size_t>(items.size()) * max_cats * num_nodes, 0.0);
    for (std::size_t i = 0; i < items.size(); ++i)
      for (int l = 0; l < items.item(i).num_categories; ++l)
        for (int k = 0; k < num_nodes; ++k)
          at(i, l)[k] = log_prob_category(quad.nodes()[k], items.item(i), l);
  }
  double* at(std::size_t item, int cat) {
    return values.data() + (item * max_cats + cat) * num_nodes;
  }
  const double* at(std::size_t item, int cat) const {
    return values.data() + (item * max_cats + cat) * num_nodes;
  }
};

struct EStepResult {
  double marginal_log_likelihood = 0.0;
};

EStepResult run_e_step(const ResponseMatrix& matrix, const ItemSet& items,
                       const LatentQuadrature& quad, const LogProbTables& tables,
                       ExpectedCounts* counts) {
  const int num_nodes = static_cast<int>(quad.size());
  std::vector<double> log_weight(num_nodes);
  std::vector<double> posterior(num_nodes);
  double marginal_sum = 0.0;
  double marginal_comp = 0.0;

  for (std::size_t r = 0; r < matrix.num_respondents(); ++r) {
    for (int k = 0; k < num_nodes; ++k) log_weight[k] = quad.log_prior()[k];
    for (std::size_t i = 0; i < items.size(); ++i) {
      int cat = matrix.cell(r, i);
      if (cat == kMissing) continue;
      const double* row = tables.at(i, cat);
      for (int k = 0; k < num_nodes; ++k) log_weight[k] += row[k];
    }
    const double mx = *std::max_element(log_weight.begin(), log_weight.end());
    double total = 0.0;
    for (int k = 0; k < num_nodes; ++k) {
      posterior[k] = std::exp(log_weight[k] - mx);
      total += posterior[k];
    }
    neumaier_add(marginal_sum, marginal_comp, mx + std::log(total));
    if (!counts) continue;
    for (int k = 0; k < num_nodes; ++k) posterior[k] /= total;
    for (std::size_t i = 0; i < items.size(); ++i) {
      int cat = matrix.cell(r, i);
      if (cat == kMissing) continue;
      for (int k = 0; k < num_nodes; ++k)
        counts->add(k, static_cast<int>(i), cat, posterior[k]);
    }
  }
  return {marginal_sum + marginal_comp};
}

// Gradient of one response's log-probability w.r.t. the item's free
// parameters, used by the cross-product information accumulation.
void response_param_gradient(const ItemParameters& item, double theta, int category,
                             Eigen::VectorXd& out) {
  const int p = free_param_count(item);
  out.setZero(p);
  const double da = kScalingConstant * item.a;
  if (item.model != ModelKind::Gpc) {
    const double c = item.model == ModelKind::ThreePL ? item.c : 0.0;
    const double z = da * (theta - item.b);
    const double L = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double Lc = 1.0 - L;
    const double p1 = std::clamp(c + (1.0 - c) * L, 1e-12, 1.0 - 1e-12);
    Eigen::VectorXd dp(p);
    dp[0] = (1.0 - c) * kScalingConstant * (theta - item.b) * L * Lc;
    dp[1] = -(1.0 - c) * da * L * Lc;
    if (p == 3) dp[2] = Lc;
    out = category == 1 ? dp / p1 : -dp / (1.0 - p1);
    return;
  }
  const int m = item.num_categories;
  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(m, p);
  Eigen::VectorXd s(m);
  s[0] = 0.0;
  double acc = 0.0;
  double acc_da = 0.0;
  for (int v = 1; v < m; ++v) {
    acc += da * (theta - item.b + item.d[v - 1]);
    acc_da += kScalingConstant * (theta - item.b + item.d[v - 1]);
    s[v] = acc;
    ds(v, 0) = acc_da;
    ds(v, 1) = -static_cast<double>(v) * da;
    for (int j = 0; j + 2 < m; ++j)
      ds(v, 2 + j) = da * ((j + 1 <= v ? 1.0 : 0.0) - (v == m - 1 ? 1.0 : 0.0));
  }
  const double mx = s.maxCoeff();
  double total = 0.0;
  Eigen::VectorXd probs(m);
  for (int l = 0; l < m; ++l) {
    probs[l] = std::exp(s[l] - mx);
    total += probs[l];
  }
  probs /= total;
  Eigen::VectorXd ebar = Eigen::VectorXd::Zero(p);
  for (int l = 0; l < m; ++l) ebar += probs[l] * ds.row(l).transpose();
  out = ds.row(category).transpose() - ebar;
}

std::vector<ItemStandardErrors> compute_standard_errors(const ResponseMatrix& matrix,
                                                        const ItemSet& items,
                                                        const LatentQuadrature& quad,
                                                        const LogProbTables& tables) {
  const int num_nodes = static_cast<int>(quad.size());
  const std::size_t num_items = items.size();

  // Per-(item, node, category) gradient tables.
  std::vector<std::vector<Eigen::VectorXd>> grad_table(num_items);
  for (std::size_t i = 0; i < num_items; ++i) {
    const ItemParameters& item = items.item(i);
    grad_table[i].resize(static_cast<std::size_t>(item.num_categories) * num_nodes);
    for (int l = 0; l < item.num_categories; ++l)
      for (int k = 0; k < num_nodes; ++k)
        response_param_gradient(item, quad.nodes()[k], l,
                                grad_table[i][static_cast<std::size_t>(l) * num_nodes + k]);
  }

  std::vector<Eigen::MatrixXd> cross(num_items);
  for (std::size_t i = 0; i < num_items; ++i) {
    int p = free_param_count(items.item(i));
    cross[i] = Eigen::MatrixXd::Zero(p, p);
  }

  std::vector<double> log_weight(num_nodes);
  std::vector<double> posterior(num_nodes);
  Eigen::VectorXd g;
  for (std::size_t r = 0; r < matrix.num_respondents(); ++r) {
    for (int k = 0; k < num_nodes; ++k) log_weight[k] = quad.log_prior()[k];
    for (std::size_t i = 0; i < num_items; ++i) {
      int cat = matrix.cell(r, i);
      if (cat == kMissing) continue;
      const double* row = tables.at(i, cat);
      for (int k = 0; k < num_nodes; ++k) log_weight[k] += row[k];
    }
    const double mx = *std::max_element(log_weight.begin(), log_weight.end());
    double total = 0.0;
    for (int k = 0; k < num_nodes; ++k) {
      posterior[k] = std::exp(log_weight[k] - mx);
      total += posterior[k];
    }
    for (int k = 0; k < num_nodes; ++k) posterior[k] /= total;

    for (std::size_t i = 0; i < num_items; ++i) {
      int cat = matrix.cell(r, i);
      if (cat == kMissing) continue;
      g.setZero(free_param_count(items.item(i)));
      const auto& rows = grad_table[i];
      for (int k = 0; k < num_nodes; ++k)
        g += posterior[k] * rows[static_cast<std::size_t>(cat) * num_nodes + k];
      cross[i] += g * g.transpose();
    }
  }

  std::vector<ItemStandardErrors> out(num_items);
  for (std::size_t i = 0; i < num_items; ++i) {
    const ItemParameters& item = items.item(i);
    const int p = free_param_count(item);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cross[i]);
    if (lu.isInvertible()) cov = lu.inverse();
    ItemStandardErrors se;
    auto diag_se = [&](int idx) {
      double v = cov(idx, idx);
      return v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    };
    se.a = diag_se(0);
    se.b = diag_se(1);
    if (item.model == ModelKind::ThreePL) se.c = diag_se(2);
    if (item.model == ModelKind::Gpc) {
      const int m = item.num_categories;
      se.d.assign(m - 1, std::numeric_limits<double>::quiet_NaN());
      for (int j = 0; j + 2 < m; ++j) se.d[j] = diag_se(2 + j);
      // Var of the dependent threshold d_{m-1} = -sum of free thresholds.
      if (m >= 3) {
        double var = 0.0;
        bool ok = true;
        for (int j = 0; j + 2 < m && ok; ++j)
          for (int j2 = 0; j2 + 2 < m && ok; ++j2) {
            double v = cov(2 + j, 2 + j2);
            if (!std::isfinite(v)) ok = false;
            var += v;
          }
        if (ok && var > 0.0) se.d[m - 2] = std::sqrt(var);
      } else {
        se.d[0] = 0.0;  // m == 2: the single threshold is structurally 0
      }
    }
    out[i] = se;
  }
  return out;
}

double total_c_penalty(const ItemSet& items, const CalibrationConfig& config) {
  double total = 0.0;
  for (const auto& item : items.items()) total += c_penalty_value(item, config);
  return total;
}

}  // namespace

std::vector<double> posterior_weights(const ResponsePattern& pattern, const ItemSet& items,
                                      const LatentQuadrature& quad) {
  if (pattern.categories.size() != items.size())
    throw ContractError("pattern '" + pattern.taker_id + "' is not aligned with the item set");
  std::vector<double> log_weight(quad.size());
  for (std::size_t k = 0; k < quad.size(); ++k) {
    double ll = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      int cat = pattern.categories[i];
      if (cat == kMissing) continue;
      ll += log_prob_category(quad.nodes()[k], items.item(i), cat);
    }
    log_weight[k] = quad.log_prior()[k] + ll;
  }
  const double mx = *std::max_element(log_weight.begin(), log_weight.end());
  double total = 0.0;
  std::vector<double> weights(quad.size());
  for (std::size_t k = 0; k < quad.size(); ++k) {
    weights[k] = std::exp(log_weight[k] - mx);
    total += weights[k];
  }
  for (double& w : weights) w /= total;
  return weights;
}

ItemSet starting_values(const ResponseMatrix& matrix) {
  matrix.validate();
  std::vector<ItemParameters> items;
  items.reserve(matrix.num_items());
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    const ItemDescriptor& desc = matrix.items[i];
    ItemParameters item;
    item.item_id = desc.item_id;
    item.model = desc.model;
    item.num_categories = desc.num_categories;
    item.a = kNeutralSlope;

    if (desc.model == ModelKind::Gpc) {
      const int m = desc.num_categories;
      std::vector<double> category_count(m, 0.0);
      double observed = 0.0;
      for (std::size_t r = 0; r < matrix.num_respondents(); ++r) {
        int cat = matrix.cell(r, i);
        if (cat == kMissing) continue;
        category_count[cat] += 1.0;
        observed += 1.0;
      }
      // Threshold locations from cumulative category frequencies.
      std::vector<double> step_b(m - 1);
      double tail = observed;
      double mean_b = 0.0;
      for (int v = 1; v < m; ++v) {
        tail -= category_count[v - 1];
        double q = std::clamp(tail / observed, 0.02, 0.98);
        step_b[v - 1] = -inverse_normal_cdf(q);
        mean_b += step_b[v - 1];
      }
      mean_b /= static_cast<double>(m - 1);
      item.b = mean_b;
      item.d.assign(m - 1, 0.0);
      double sum = 0.0;
      for (int v = 0; v + 1 < m - 1; ++v) {
        item.d[v] = mean_b - step_b[v];
        sum += item.d[v];
      }
      item.d[m - 2] = -sum;
    } else {
      double correct = 0.0;
      double observed = 0.0;
      for (std::size_t r = 0; r < matrix.num_respondents(); ++r) {
        int cat = matrix.cell(r, i);
        if (cat == kMissing) continue;
        correct += cat;
        observed += 1.0;
      }
      double p = std::clamp(correct / observed, 0.02, 0.98);
      item.b = -inverse_normal_cdf(p);
      if (desc.model == ModelKind::ThreePL) item.c = 0.2;
    }
    item.validate();
    items.push_back(std::move(item));
  }
  return ItemSet(std::move(items));
}

CalibrationResult calibrate_mml_em(const ResponseMatrix& matrix,
                                   const CalibrationConfig& config) {
  matrix.validate();
  if (matrix.num_items() < 2)
    throw ContractError("calibration requires at least 2 items");

  const LatentQuadrature quad = LatentQuadrature::normal_grid(config.quadrature);
  ItemSet items = starting_values(matrix);

  CalibrationResult result;
  result.quadrature = config.quadrature;

  LogProbTables tables;
  ExpectedCounts counts;
  int max_cats = 2;
  for (const auto& item : items.items()) max_cats = std::max(max_cats, item.num_categories);

  bool converged = false;
  int cycle = 0;
  while (cycle < config.max_cycles) {
    ++cycle;
    tables.build(items, quad);
    counts.init(static_cast<int>(quad.size()), static_cast<int>(items.size()), max_cats);
    EStepResult e = run_e_step(matrix, items, quad, tables, &counts);
    result.objective_trace.push_back(e.marginal_log_likelihood +
                                     total_c_penalty(items, config));

    double max_change = 0.0;
    std::vector<ItemParameters> updated = items.items();
    for (std::size_t i = 0; i < updated.size(); ++i) {
      double change = maximize_item(updated[i], counts, quad, static_cast<int>(i), config);
      max_change = std::max(max_change, change);
    }
    items = ItemSet(std::move(updated));

    if (max_change < config.param_tolerance) {
      converged = true;
      break;
    }
  }

  // Final pass at the converged parameters: marginal likelihood and SEs.
  tables.build(items, quad);
  EStepResult final_e = run_e_step(matrix, items, quad, tables, nullptr);
  result.log_marginal_likelihood = final_e.marginal_log_likelihood;
  result.standard_errors = compute_standard_errors(matrix, items, quad, tables);

  for (const auto& item : items.items())
    if (item.a >= config.a_max - 1e-9) result.flagged_items.push_back(item.item_id);

  result.items = std::move(items);
  result.n_cycles = cycle;
  result.converged = converged;
  return result;
}

}  // namespace psychbench
