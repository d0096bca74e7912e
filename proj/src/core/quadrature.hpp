#pragma once

#include <vector>

namespace psychbench {

struct QuadratureSpec {
  int num_nodes = 41;
  double bound = 6.0;
};

// Fixed latent-trait quadrature: equally spaced nodes on [-bound, bound]
// weighted by the standard-normal density, normalized to sum to 1. The
// latent prior is N(0, 1) and is never re-estimated.
class LatentQuadrature {
 public:
  static LatentQuadrature normal_grid(const QuadratureSpec& spec);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<double>& log_prior() const { return log_prior_; }
  std::size_t size() const { return nodes_.size(); }
  const QuadratureSpec& spec() const { return spec_; }

 private:
  QuadratureSpec spec_;
  std::vector<double> nodes_;
  std::vector<double> prior_;
  std::vector<double> log_prior_;
};

}  // namespace psychbench
