#include "core/quadrature.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace psychbench {

LatentQuadrature LatentQuadrature::normal_grid(const QuadratureSpec& spec) {
  if (spec.num_nodes < 3) throw ContractError("quadrature requires at least 3 nodes");
  if (!(spec.bound > 0.0)) throw ContractError("quadrature bound must be positive");
  LatentQuadrature quad;
  quad.spec_ = spec;
  quad.nodes_.resize(spec.num_nodes);
  quad.prior_.resize(spec.num_nodes);
  quad.log_prior_.resize(spec.num_nodes);
  const double step = 2.0 * spec.bound / (spec.num_nodes - 1);
  double total = 0.0;
  for (int k = 0; k < spec.num_nodes; ++k) {
    quad.nodes_[k] = -spec.bound + k * step;
    quad.prior_[k] = std::exp(-0.5 * quad.nodes_[k] * quad.nodes_[k]);
    total += quad.prior_[k];
  }
  for (int k = 0; k < spec.num_nodes; ++k) {
    quad.prior_[k] /= total;
    quad.log_prior_[k] = std::log(quad.prior_[k]);
  }
  return quad;
}

}  // namespace psychbench
