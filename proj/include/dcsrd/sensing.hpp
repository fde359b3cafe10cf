#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "dcsrd/common.hpp"
#include "dcsrd/rng.hpp"

// Gaussian measurement operator: Phi with i.i.d. N(0, var_phi) entries and
// y = (1/sqrt(M)) Phi x. The 1/sqrt(M) keeps var_phi independent of the
// system dimensions.
namespace dcsrd::sensing {

struct SensingMatrix {
  Eigen::MatrixXd entries;  // M x N
  int m = 0;
  int n = 0;
  double var_phi = 1.0;
  std::uint64_t seed = 0;
};

// Entries drawn row-major from the seeded stream; deterministic given seed.
inline SensingMatrix gen_sensing_matrix(int m, int n, double var_phi, Rng& rng,
                                        std::uint64_t seed = 0) {
  require(m > 0 && m < n, "gen_sensing_matrix: need 0 < m < n");
  require(var_phi >= 0, "gen_sensing_matrix: var_phi must be >= 0");
  SensingMatrix phi;
  phi.m = m;
  phi.n = n;
  phi.var_phi = var_phi;
  phi.seed = seed;
  phi.entries.resize(m, n);
  const double sd = std::sqrt(var_phi);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) phi.entries(i, j) = rng.gaussian(sd);
  return phi;
}

inline Eigen::VectorXd measure(const SensingMatrix& phi, const Eigen::VectorXd& x) {
  require(x.size() == phi.n, "measure: signal length does not match sensing matrix");
  return (phi.entries * x) / std::sqrt(static_cast<double>(phi.m));
}

}  // namespace dcsrd::sensing
