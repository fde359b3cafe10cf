#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "dcsrd/common.hpp"
#include "dcsrd/model.hpp"
#include "dcsrd/rng.hpp"

// Sparse source generation: single vectors and correlated pairs, with
// orthonormal DCT-II synthesis x = Psi theta.
namespace dcsrd::signal {

namespace detail {

// Orthonormal DCT-II analysis matrix C: row k is the k-th cosine basis
// vector, so synthesis is x = C^T theta. Cached per length.
inline const Eigen::MatrixXd& dct_matrix(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Eigen::MatrixXd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<Eigen::MatrixXd>(n, n);
    Eigen::MatrixXd& c = *slot;
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < n; ++k) {
      const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i) c(k, i) = s * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return *slot;
}

// x = Psi theta for sparse theta given as (support, values): sum of the
// selected basis vectors, O(N |support|).
inline Eigen::VectorXd synthesize_sparse(Basis basis, int n, const std::vector<int>& support,
                                         const Eigen::VectorXd& values) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (basis == Basis::Identity) {
    for (std::size_t j = 0; j < support.size(); ++j) x[support[j]] = values[j];
    return x;
  }
  const Eigen::MatrixXd& c = dct_matrix(n);
  for (std::size_t j = 0; j < support.size(); ++j) x += values[j] * c.row(support[j]).transpose();
  return x;
}

}  // namespace detail

// Orthonormal DCT-II synthesis (theta = e0 maps to the constant 1/sqrt(N)).
inline Eigen::VectorXd dct_synthesize(const Eigen::VectorXd& theta) {
  require(theta.size() >= 1, "dct_synthesize: empty input");
  return detail::dct_matrix(static_cast<int>(theta.size())).transpose() * theta;
}

inline Eigen::VectorXd dct_analyze(const Eigen::VectorXd& x) {
  require(x.size() >= 1, "dct_analyze: empty input");
  return detail::dct_matrix(static_cast<int>(x.size())) * x;
}

inline Eigen::VectorXd synthesize(Basis basis, const Eigen::VectorXd& theta) {
  return basis == Basis::Dct ? dct_synthesize(theta) : theta;
}

inline Eigen::VectorXd analyze(Basis basis, const Eigen::VectorXd& x) {
  return basis == Basis::Dct ? dct_analyze(x) : x;
}

struct SparseVector {
  Eigen::VectorXd coeffs;    // theta, length N
  std::vector<int> support;  // sorted nonzero positions
  Eigen::VectorXd x;         // Psi theta
};

struct CorrelatedPair {
  Eigen::VectorXd theta_c, theta_i1, theta_i2;
  Eigen::VectorXd x1, x2;
  std::vector<int> support_c, support_i1, support_i2;
  int k1 = 0, k2 = 0;  // realized global sparsities
};

// Support drawn uniformly without replacement; nonzeros i.i.d. centered
// Gaussian with variance var_theta.
inline SparseVector gen_sparse(const model::SparseSpec& spec, Rng& rng) {
  spec.validate();
  SparseVector out;
  out.support = rng.sample_indices(spec.n, spec.k);
  out.coeffs = Eigen::VectorXd::Zero(spec.n);
  Eigen::VectorXd vals(spec.k);
  const double sd = std::sqrt(spec.var_theta);
  for (int j = 0; j < spec.k; ++j) {
    vals[j] = rng.gaussian(sd);
    out.coeffs[out.support[j]] = vals[j];
  }
  out.x = detail::synthesize_sparse(spec.basis, spec.n, out.support, vals);
  return out;
}

namespace detail {

inline std::vector<int> nonzero_support(const Eigen::VectorXd& v) {
  std::vector<int> s;
  for (int i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

}  // namespace detail

// Disjoint mode draws the three supports pairwise non-intersecting, so the
// realized sparsity is exactly K_C + K_Ij. Uniform-random mode draws each
// support independently; component coefficients add on shared indices.
inline CorrelatedPair gen_correlated_pair(const model::PairSpec& spec, Rng& rng) {
  spec.validate();
  CorrelatedPair out;
  const int n = spec.n;
  if (spec.overlap_mode == model::OverlapMode::Disjoint) {
    const int total = spec.k_c + spec.k_i1 + spec.k_i2;
    require(total <= n, "gen_correlated_pair: disjoint supports infeasible, k_c + k_i1 + k_i2 > n");
    std::vector<int> all = rng.sample_indices(n, total);
    // sample_indices sorts; re-randomize the split so each sub-support is
    // uniform among the drawn indices
    for (int i = total - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(all[i], all[pick(rng.engine())]);
    }
    out.support_c.assign(all.begin(), all.begin() + spec.k_c);
    out.support_i1.assign(all.begin() + spec.k_c, all.begin() + spec.k_c + spec.k_i1);
    out.support_i2.assign(all.begin() + spec.k_c + spec.k_i1, all.end());
  } else {
    out.support_c = rng.sample_indices(n, spec.k_c);
    out.support_i1 = rng.sample_indices(n, spec.k_i1);
    out.support_i2 = rng.sample_indices(n, spec.k_i2);
  }
  std::sort(out.support_c.begin(), out.support_c.end());
  std::sort(out.support_i1.begin(), out.support_i1.end());
  std::sort(out.support_i2.begin(), out.support_i2.end());

  out.theta_c = Eigen::VectorXd::Zero(n);
  out.theta_i1 = Eigen::VectorXd::Zero(n);
  out.theta_i2 = Eigen::VectorXd::Zero(n);
  for (int i : out.support_c) out.theta_c[i] = rng.gaussian(std::sqrt(spec.var_c));
  for (int i : out.support_i1) out.theta_i1[i] = rng.gaussian(std::sqrt(spec.var_i1));
  for (int i : out.support_i2) out.theta_i2[i] = rng.gaussian(std::sqrt(spec.var_i2));

  const Eigen::VectorXd t1 = out.theta_c + out.theta_i1;
  const Eigen::VectorXd t2 = out.theta_c + out.theta_i2;
  const std::vector<int> s1 = detail::nonzero_support(t1);
  const std::vector<int> s2 = detail::nonzero_support(t2);
  out.k1 = static_cast<int>(s1.size());
  out.k2 = static_cast<int>(s2.size());
  Eigen::VectorXd v1(out.k1), v2(out.k2);
  for (std::size_t j = 0; j < s1.size(); ++j) v1[j] = t1[s1[j]];
  for (std::size_t j = 0; j < s2.size(); ++j) v2[j] = t2[s2[j]];
  out.x1 = detail::synthesize_sparse(spec.basis, n, s1, v1);
  out.x2 = detail::synthesize_sparse(spec.basis, n, s2, v2);
  return out;
}

// Sorted union of the realized global support of source j (1 or 2).
inline std::vector<int> global_support(const CorrelatedPair& pair, int source) {
  require(source == 1 || source == 2, "global_support: source must be 1 or 2");
  const auto& si = source == 1 ? pair.support_i1 : pair.support_i2;
  std::vector<int> s = pair.support_c;
  s.insert(s.end(), si.begin(), si.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace dcsrd::signal
