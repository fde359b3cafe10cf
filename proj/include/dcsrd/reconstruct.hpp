#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dcsrd/common.hpp"
#include "dcsrd/sensing.hpp"
#include "dcsrd/signal.hpp"

// Decoders: oracle least squares on a known support, BPDN via accelerated
// iterative shrinkage with a bisection on the penalty weight, the ideal joint
// reconstruction of a known common component, and the practical Intersect JR.
namespace dcsrd::reconstruct {

struct Reconstruction {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd theta_hat;
  std::vector<int> support_used;
  double residual_norm = 0.0;  // ||(1/sqrt(M)) Phi x_hat - y_q||_2
};

// argmin_z ||a z - v||_2 by column-pivoted QR; rejects rank-deficient systems.
inline Eigen::VectorXd pseudo_inverse_apply(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  require(a.rows() == v.size(), "pseudo_inverse_apply: dimension mismatch");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols())
    throw SolverFailure("pseudo_inverse_apply: numerically rank-deficient system", -1.0);
  return qr.solve(v);
}

namespace detail {

// Columns of (1/sqrt(M)) Phi Psi restricted to the given coefficient indices.
inline Eigen::MatrixXd normalized_columns(const sensing::SensingMatrix& phi, Basis basis,
                                          const std::vector<int>& support) {
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(phi.m));
  Eigen::MatrixXd cols(phi.m, static_cast<Eigen::Index>(support.size()));
  if (basis == Basis::Identity) {
    for (std::size_t j = 0; j < support.size(); ++j)
      cols.col(static_cast<Eigen::Index>(j)) = phi.entries.col(support[j]) * inv_sqrt_m;
    return cols;
  }
  const Eigen::MatrixXd& c = signal::detail::dct_matrix(phi.n);
  for (std::size_t j = 0; j < support.size(); ++j)
    cols.col(static_cast<Eigen::Index>(j)) =
        (phi.entries * c.row(support[j]).transpose()) * inv_sqrt_m;
  return cols;
}

}  // namespace detail

// Least-squares estimate on the given support, zero elsewhere:
// theta_hat = sqrt(M) U_sub^+ y_q, the sqrt(M) compensating the measurement
// normalization (folded into the solved operator here).
inline Reconstruction oracle_reconstruct(const Eigen::VectorXd& y_q,
                                         const sensing::SensingMatrix& phi, Basis basis,
                                         const std::vector<int>& support) {
  require(!support.empty(), "oracle_reconstruct: empty support");
  require(static_cast<int>(support.size()) < phi.m,
          "oracle_reconstruct: support size must be below the measurement count");
  require(y_q.size() == phi.m, "oracle_reconstruct: measurement length mismatch");
  const Eigen::MatrixXd a = detail::normalized_columns(phi, basis, support);
  Reconstruction rec;
  const Eigen::VectorXd coeffs = pseudo_inverse_apply(a, y_q);
  rec.theta_hat = Eigen::VectorXd::Zero(phi.n);
  for (std::size_t j = 0; j < support.size(); ++j) rec.theta_hat[support[j]] = coeffs[j];
  rec.support_used = support;
  rec.x_hat = signal::detail::synthesize_sparse(basis, phi.n, support, coeffs);
  rec.residual_norm = (a * coeffs - y_q).norm();
  return rec;
}

struct BpdnOptions {
  double rel_tol = 1e-8;  // stop when the relative iterate change drops below
  int max_iter = 10000;   // per FISTA run
};

// The solve operator A = (1/sqrt(M)) Phi Psi with its Lipschitz constant,
// built once per sensing matrix and shared across solves.
struct BpdnOperator {
  Eigen::MatrixXd a;
  double lipschitz = 0.0;
  int n = 0;
  Basis basis = Basis::Dct;

  BpdnOperator(const sensing::SensingMatrix& phi, Basis basis_in) : n(phi.n), basis(basis_in) {
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(phi.m));
    if (basis == Basis::Identity) {
      a = phi.entries * inv_sqrt_m;
    } else {
      a = phi.entries * signal::detail::dct_matrix(phi.n).transpose() * inv_sqrt_m;
    }
    // power iteration for ||A||_2^2; fixed start keeps decoding deterministic
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double prev = 0.0;
    for (int it = 0; it < 200; ++it) {
      v = a.transpose() * (a * v);
      const double norm = v.norm();
      if (norm == 0.0) break;
      v /= norm;
      if (it > 2 && std::abs(norm - prev) <= 1e-12 * norm) {
        prev = norm;
        break;
      }
      prev = norm;
    }
    lipschitz = prev * 1.01;
  }
};

namespace detail {

struct FistaResult {
  int iterations = 0;
  bool converged = false;
};

// Accelerated proximal gradient on 0.5||A x - y||^2 + lam ||x||_1.
inline FistaResult fista(const BpdnOperator& op, const Eigen::VectorXd& y, double lam,
                         Eigen::VectorXd& x, double rel_tol, int max_iter) {
  Eigen::VectorXd z = x;
  Eigen::VectorXd xn(op.n), grad(op.n), resid(y.size());
  double tk = 1.0;
  const double step = 1.0 / op.lipschitz;
  const double thresh = lam * step;
  for (int it = 1; it <= max_iter; ++it) {
    resid.noalias() = op.a * z;
    resid -= y;
    grad.noalias() = op.a.transpose() * resid;
    xn = z - step * grad;
    for (int i = 0; i < op.n; ++i) {
      const double v = xn[i];
      xn[i] = v > thresh ? v - thresh : (v < -thresh ? v + thresh : 0.0);
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    z = xn + ((tk - 1.0) / tn) * (xn - x);
    const double dx = (xn - x).norm();
    const double nx = std::max(xn.norm(), 1e-30);
    x = xn;
    tk = tn;
    if (dx / nx < rel_tol) return {it, true};
  }
  return {max_iter, false};
}

inline double residual_norm(const BpdnOperator& op, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& x) {
  return (op.a * x - y).norm();
}

inline Reconstruction finalize_bpdn(const BpdnOperator& op, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& theta) {
  Reconstruction rec;
  rec.theta_hat = theta;
  for (int i = 0; i < op.n; ++i)
    if (theta[i] != 0.0) rec.support_used.push_back(i);
  rec.x_hat = signal::synthesize(op.basis, theta);
  rec.residual_norm = residual_norm(op, y, theta);
  return rec;
}

}  // namespace detail

// Basis pursuit denoising: min ||theta||_1 s.t. ||A theta - y||_2 <= epsilon,
// solved in the penalized form with a bisection on the penalty weight until
// the residual lands just inside the epsilon ball. epsilon = 0 is treated as
// a tiny ball (1e-9 ||y||), the numerical stand-in for the equality form.
inline Reconstruction bpdn_solve(const BpdnOperator& op, const Eigen::VectorXd& y, double epsilon,
                                 const BpdnOptions& options = {}) {
  require(epsilon >= 0, "bpdn_solve: epsilon must be >= 0");
  const double ny = y.norm();
  const double eps = std::max(epsilon, 1e-9 * ny);
  if (ny <= eps) return detail::finalize_bpdn(op, y, Eigen::VectorXd::Zero(op.n));

  const double lam_max = (op.a.transpose() * y).cwiseAbs().maxCoeff();
  const double bracket_tol = std::max(options.rel_tol, 1e-6);
  double lam_lo = 0.0, lam_hi = lam_max, lam = 0.5 * lam_max;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(op.n);
  std::optional<std::pair<Eigen::VectorXd, double>> best;  // (theta, lambda)
  for (int step = 0; step < 30; ++step) {
    // late bracketing steps solve at full precision: near-zero penalties need
    // it for the residual to be meaningful
    detail::fista(op, y, lam, x, step < 25 ? bracket_tol : options.rel_tol, options.max_iter);
    const double r = detail::residual_norm(op, y, x);
    if (r <= eps) {
      best = {x, lam};
      if (r >= 0.97 * eps) break;
      lam_lo = lam;
    } else {
      lam_hi = lam;
    }
    lam = 0.5 * (lam_lo + lam_hi);
    if ((lam_hi - lam_lo) < 1e-3 * std::max(lam_hi, 1e-300)) break;
  }
  if (!best) {
    // even the smallest bracketed penalty left the ball: push lambda to zero,
    // restarting cold if the warm start stalls short of the target
    const double lam_tiny = 1e-12 * lam_max;
    detail::fista(op, y, lam_tiny, x, options.rel_tol, options.max_iter);
    if (detail::residual_norm(op, y, x) > eps) {
      x.setZero();
      detail::fista(op, y, lam_tiny, x, options.rel_tol, options.max_iter);
    }
    const double r = detail::residual_norm(op, y, x);
    if (r > eps)
      throw SolverFailure("bpdn_solve: did not reach the feasible ball after max iterations "
                          "(residual " + std::to_string(r) + ", epsilon " + std::to_string(eps) +
                          ")", r);
    best = {x, lam_tiny};
  }
  // final polish at the selected penalty
  x = best->first;
  auto res = detail::fista(op, y, best->second, x, options.rel_tol, options.max_iter);
  if (!res.converged) {
    const double r = detail::residual_norm(op, y, x);
    // accept only if the bracketing already produced a feasible point
    if (r > eps * (1.0 + 1e-6))
      throw SolverFailure("bpdn_solve: non-convergence after max iterations (residual " +
                          std::to_string(r) + ")", r);
  }
  return detail::finalize_bpdn(op, y, x);
}

inline Reconstruction bpdn_solve(const Eigen::VectorXd& y_q, const sensing::SensingMatrix& phi,
                                 Basis basis, double epsilon, const BpdnOptions& options = {}) {
  const BpdnOperator op(phi, basis);
  return bpdn_solve(op, y_q, epsilon, options);
}

// Ideal joint reconstruction of Appendix-D type: the common component x_c and
// the innovation support are known; subtract the common contribution from
// y_q1 and oracle-reconstruct the innovation. y2 is part of the decoder
// interface but unused: knowing x_c exactly subsumes it.
inline Reconstruction ideal_jr(const Eigen::VectorXd& y_q1,
                               [[maybe_unused]] const Eigen::VectorXd& y2,
                               const sensing::SensingMatrix& phi, Basis basis,
                               const Eigen::VectorXd& x_c, const std::vector<int>& support_i1) {
  require(phi.m > static_cast<int>(support_i1.size()) + 3,
          "ideal_jr: need m > |support_i1| + 3");
  const Eigen::VectorXd y_common = sensing::measure(phi, x_c);
  Reconstruction inner = oracle_reconstruct(y_q1 - y_common, phi, basis, support_i1);
  Reconstruction rec;
  rec.x_hat = x_c + inner.x_hat;
  const Eigen::VectorXd theta_c = signal::analyze(basis, x_c);
  rec.theta_hat = theta_c + inner.theta_hat;
  const double tiny = 1e-12 * std::max(theta_c.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < phi.n; ++i)
    if (std::abs(theta_c[i]) > tiny) rec.support_used.push_back(i);
  rec.support_used.insert(rec.support_used.end(), support_i1.begin(), support_i1.end());
  std::sort(rec.support_used.begin(), rec.support_used.end());
  rec.support_used.erase(std::unique(rec.support_used.begin(), rec.support_used.end()),
                         rec.support_used.end());
  rec.residual_norm = (sensing::measure(phi, rec.x_hat) - y_q1).norm();
  return rec;
}

// Intersect-JR knobs. epsilon1 bounds the quantization noise of y_q1 (the
// caller derives it from the quantizer step); epsilon2 applies to the
// unquantized SI decode and defaults to the equality form.
struct JrPolicy {
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double support_threshold = 1e-2;  // keep |theta_i| > tau * max|theta|
  BpdnOptions options{};
};

inline std::vector<int> threshold_support(const Eigen::VectorXd& theta, double tau) {
  std::vector<int> s;
  const double cut = tau * theta.cwiseAbs().maxCoeff();
  for (int i = 0; i < theta.size(); ++i)
    if (std::abs(theta[i]) > cut) s.push_back(i);
  return s;
}

// Joint reconstruction given an estimated (or known) common support:
// LS-estimate the common coefficients from the SI measurements on that
// support, subtract their contribution from y_q1, BPDN-decode the residual as
// the innovation and add the parts back. Falls back to the plain BPDN-IR
// decode when the support is empty or too large for the LS step.
inline Reconstruction jr_with_common_support(const BpdnOperator& op, const Eigen::VectorXd& y_q1,
                                             const Eigen::VectorXd& y2,
                                             const std::vector<int>& common_support,
                                             const JrPolicy& policy,
                                             const Reconstruction* bpdn_ir_fallback = nullptr) {
  if (common_support.empty() || static_cast<int>(common_support.size()) >= op.a.rows()) {
    if (bpdn_ir_fallback) return *bpdn_ir_fallback;
    return bpdn_solve(op, y_q1, policy.epsilon1, policy.options);
  }
  const auto k = static_cast<Eigen::Index>(common_support.size());
  Eigen::MatrixXd cols(op.a.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) cols.col(j) = op.a.col(common_support[j]);
  const Eigen::VectorXd c_hat = pseudo_inverse_apply(cols, y2);
  const Eigen::VectorXd residual = y_q1 - cols * c_hat;
  Reconstruction inner = bpdn_solve(op, residual, policy.epsilon1, policy.options);
  Reconstruction rec;
  rec.theta_hat = inner.theta_hat;
  for (Eigen::Index j = 0; j < k; ++j) rec.theta_hat[common_support[j]] += c_hat[j];
  rec.x_hat = signal::synthesize(op.basis, rec.theta_hat);
  for (int i = 0; i < op.n; ++i)
    if (rec.theta_hat[i] != 0.0) rec.support_used.push_back(i);
  rec.residual_norm = detail::residual_norm(op, y_q1, rec.theta_hat);
  return rec;
}

// Practical joint decoder: BPDN-decode both sources, threshold to supports,
// intersect to estimate the common support, then decode jointly.
inline Reconstruction intersect_jr(const BpdnOperator& op, const Eigen::VectorXd& y_q1,
                                   const Eigen::VectorXd& y2, const JrPolicy& policy) {
  Reconstruction rec1 = bpdn_solve(op, y_q1, policy.epsilon1, policy.options);
  Reconstruction rec2 = bpdn_solve(op, y2, policy.epsilon2, policy.options);
  const std::vector<int> s1 = threshold_support(rec1.theta_hat, policy.support_threshold);
  const std::vector<int> s2 = threshold_support(rec2.theta_hat, policy.support_threshold);
  std::vector<int> common;
  std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(), std::back_inserter(common));
  return jr_with_common_support(op, y_q1, y2, common, policy, &rec1);
}

inline Reconstruction intersect_jr(const Eigen::VectorXd& y_q1, const Eigen::VectorXd& y2,
                                   const sensing::SensingMatrix& phi, Basis basis,
                                   const JrPolicy& policy) {
  const BpdnOperator op(phi, basis);
  return intersect_jr(op, y_q1, y2, policy);
}

// epsilon for BPDN on measurements quantized with step delta: mean quantization
// noise energy plus three standard deviations under the high-rate uniform model.
inline double quantization_epsilon(int m, double delta) {
  return delta * std::sqrt(m / 12.0 * (1.0 + 3.0 / std::sqrt(static_cast<double>(m))));
}

}  // namespace dcsrd::reconstruct
