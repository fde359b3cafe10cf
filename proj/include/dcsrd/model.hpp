#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "dcsrd/common.hpp"

// Closed-form rate-distortion expressions: measurement statistics, RD
// functions of measurements and reconstruction, rate gains, and the exact
// finite-length oracle distortion. Everything here is a pure function of the
// system parameters.
namespace dcsrd::model {

enum class Flavor { Info, Ec };

inline std::string to_string(Flavor f) { return f == Flavor::Info ? "info" : "ec"; }

inline Flavor flavor_from_string(const std::string& s) {
  if (s == "info") return Flavor::Info;
  if (s == "ec") return Flavor::Ec;
  throw ConfigError("unknown flavor: " + s);
}

// Generative parameters of a single sparse source: x = Psi theta with K
// nonzeros of variance var_theta among N coefficients.
struct SparseSpec {
  int n = 0;
  int k = 0;
  double var_theta = 1.0;
  Basis basis = Basis::Dct;

  void validate() const {
    require(k > 0 && k < n, "SparseSpec: need 0 < k < n");
    require(var_theta > 0 && std::isfinite(var_theta), "SparseSpec: var_theta must be positive and finite");
  }
};

// Correlated pair x_j = Psi(theta_C + theta_Ij): common component shared by
// both sources plus a per-source innovation.
enum class OverlapMode { Disjoint, UniformRandom };

struct PairSpec {
  int n = 0;
  int k_c = 0;
  int k_i1 = 0;
  int k_i2 = 0;
  double var_c = 1.0;
  double var_i1 = 1.0;
  double var_i2 = 1.0;
  OverlapMode overlap_mode = OverlapMode::Disjoint;
  Basis basis = Basis::Dct;

  void validate() const {
    require(n > 0, "PairSpec: n must be positive");
    require(k_c >= 0 && k_i1 >= 0 && k_i2 >= 0, "PairSpec: sparsities must be nonnegative");
    require(k_c + k_i1 > 0 && k_c + k_i2 > 0, "PairSpec: each source needs at least one nonzero");
    require(k_c + std::max(k_i1, k_i2) <= n, "PairSpec: k_c + max(k_i1,k_i2) must not exceed n");
    require(var_c > 0 && var_i1 > 0 && var_i2 > 0, "PairSpec: variances must be positive");
  }
};

// Finite-dimension proxies for the large-system rates: sparsity rate
// gamma = K/N, overmeasuring rate mu = M/K, overlaps omega = K_C/K, K_I/K.
struct SystemRates {
  double gamma = 0.0;
  double mu = 0.0;
  double omega_c = 0.0;
  double omega_i = 0.0;

  void validate() const {
    require(gamma > 0 && gamma < 1, "SystemRates: need 0 < gamma < 1");
    require(mu > 1, "SystemRates: overmeasuring rate must exceed 1");
    const double sum = omega_c + omega_i;
    require(std::max(omega_c, omega_i) <= 1.0 + 1e-12 && sum >= 1.0 - 1e-12 && sum <= 2.0 + 1e-12,
            "SystemRates: overlaps must satisfy max(w_c,w_i) <= 1 <= w_c+w_i <= 2");
  }
};

inline SystemRates system_rates(int k, int n, int m, int k_c, int k_i) {
  require(k > 0 && k < n, "system_rates: need 0 < k < n");
  require(m > 0, "system_rates: m must be positive");
  require(m > k, "system_rates: need m > k so the overmeasuring rate exceeds 1");
  SystemRates r;
  r.gamma = static_cast<double>(k) / n;
  r.mu = static_cast<double>(m) / k;
  r.omega_c = static_cast<double>(k_c) / k;
  r.omega_i = static_cast<double>(k_i) / k;
  r.validate();
  return r;
}

// Per-sample variance of the Gaussian measurement,
// sigma_y^2 = (s2phi/mu) [w_c s2c + w_i s2i]; single source is w_c=1, w_i=0.
inline double measurement_variance(const SystemRates& rates, double var_phi, double var_c,
                                   double var_i) {
  require(var_phi >= 0 && var_c >= 0 && var_i >= 0, "measurement_variance: variances must be >= 0");
  require(rates.mu > 1, "measurement_variance: mu must exceed 1");
  return (var_phi / rates.mu) * (rates.omega_c * var_c + rates.omega_i * var_i);
}

// Inter-measurement correlation
// rho12 = [(1 + (w_i1/w_c1)(s2i1/s2c)) (1 + (w_i2/w_c2)(s2i2/s2c))]^{-1/2}.
// With no common component the formula is singular; rho = 0 by continuity.
inline double correlation_coefficient(const SystemRates& rates1, const SystemRates& rates2,
                                      double var_c, double var_i1, double var_i2) {
  require(var_c >= 0 && var_i1 >= 0 && var_i2 >= 0,
          "correlation_coefficient: variances must be >= 0");
  if (rates1.omega_c == 0.0 || rates2.omega_c == 0.0 || var_c == 0.0) return 0.0;
  const double t1 = 1.0 + (rates1.omega_i / rates1.omega_c) * (var_i1 / var_c);
  const double t2 = 1.0 + (rates2.omega_i / rates2.omega_c) * (var_i2 / var_c);
  return 1.0 / std::sqrt(t1 * t2);
}

// Asymptotic joint statistics of the measurement pair.
struct MeasurementStats {
  double var_y1 = 0.0;
  double var_y2 = 0.0;
  double rho12 = 0.0;

  void validate() const {
    require(var_y1 > 0 && var_y2 > 0, "MeasurementStats: variances must be positive");
    require(rho12 >= 0 && rho12 <= 1, "MeasurementStats: rho12 must lie in [0,1]");
  }
};

inline MeasurementStats measurement_stats(const SystemRates& rates1, const SystemRates& rates2,
                                          double var_phi, double var_c, double var_i1,
                                          double var_i2) {
  MeasurementStats s;
  s.var_y1 = measurement_variance(rates1, var_phi, var_c, var_i1);
  s.var_y2 = measurement_variance(rates2, var_phi, var_c, var_i2);
  s.rho12 = correlation_coefficient(rates1, rates2, var_c, var_i1, var_i2);
  s.validate();
  return s;
}

// Rate saved by conditioning the measurement code on the SI measurements,
// R* = (1/2) log2 1/(1-rho^2). Unbounded (returns +inf) as rho -> 1.
inline double rate_gain_star(double rho12) {
  require(rho12 >= 0 && rho12 <= 1, "rate_gain_star: rho12 must lie in [0,1]");
  if (rho12 == 1.0) return std::numeric_limits<double>::infinity();
  return 0.5 * std::log2(1.0 / (1.0 - rho12 * rho12));
}

// Additional rate saved by joint reconstruction,
// R_JR = (1/2) log2[(1/w_i)(mu - w_i)/(mu - 1)]; +inf as w_i -> 0, 0 at w_i = 1.
inline double rate_gain_jr(const SystemRates& rates) {
  require(rates.mu > 1, "rate_gain_jr: mu must exceed 1");
  require(rates.omega_i >= 0 && rates.omega_i <= 1, "rate_gain_jr: omega_i must lie in [0,1]");
  if (rates.omega_i == 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * std::log2((1.0 / rates.omega_i) * (rates.mu - rates.omega_i) / (rates.mu - 1.0));
}

namespace detail {
inline double q_factor(double rate, Flavor flavor) {
  const double q = std::exp2(-2.0 * rate);
  return flavor == Flavor::Ec ? kPiEOver6 * q : q;
}
}  // namespace detail

// Gaussian RD function D(R) = var 2^{-2R}; the EC flavor carries the pi*e/6
// penalty of the entropy-constrained uniform scalar quantizer.
inline double rd_gaussian(double var, double rate, Flavor flavor) {
  require(rate >= 0, "rd_gaussian: rate must be >= 0");
  require(var >= 0, "rd_gaussian: var must be >= 0");
  return var * detail::q_factor(rate, flavor);
}

// Conditional RD function D_{x|y}(R) = var (1-rho^2) 2^{-2R} = D_x(R + R*).
inline double rd_conditional(double var, double rho, double rate, Flavor flavor) {
  require(rho >= 0 && rho < 1, "rd_conditional: rho must lie in [0,1)");
  return rd_gaussian(var * (1.0 - rho * rho), rate, flavor);
}

// Exact average per-sample distortion of the oracle estimator at finite
// length, sigma_xhat^2 = (K/N) (M/(M-K-1)) (s2e/s2phi). Valid for M > K+3
// (existence of the generalized inverse Wishart mean); holds for any noise
// covariance with this marginal variance.
inline double oracle_distortion_finite(int k, int n, int m, double var_e, double var_phi) {
  require(k > 0 && k < n, "oracle_distortion_finite: need 0 < k < n");
  require(m > k + 3,
          "oracle_distortion_finite: need m > k + 3 (mean of the generalized inverse Wishart "
          "distribution does not exist otherwise)");
  require(var_e >= 0, "oracle_distortion_finite: var_e must be >= 0");
  require(var_phi > 0, "oracle_distortion_finite: var_phi must be positive");
  return (static_cast<double>(k) / n) * (static_cast<double>(m) / (m - k - 1)) * var_e / var_phi;
}

enum class TheoryScenario { Meas, MeasCond, Ir, IrCond, Jr };

inline std::string to_string(TheoryScenario s) {
  switch (s) {
    case TheoryScenario::Meas: return "meas";
    case TheoryScenario::MeasCond: return "meas-cond";
    case TheoryScenario::Ir: return "ir";
    case TheoryScenario::IrCond: return "ir-cond";
    case TheoryScenario::Jr: return "jr";
  }
  return "?";
}

// One sample of a rate-distortion curve.
struct RdPoint {
  double rate = 0.0;
  double distortion = 0.0;
  TheoryScenario scenario = TheoryScenario::Meas;
  Flavor flavor = Flavor::Ec;
};

// Oracle reconstruction RD functions in the large-system regime:
//   ir      : gamma (w_c s2c + w_i s2i)/(mu-1) q(R)
//   ir-cond : same evaluated at R + R*
//   jr      : w_i gamma (w_c s2c + w_i s2i)/(mu - w_i) q(R + R*)
// where q(R) = 2^{-2R}, times pi*e/6 for the EC flavor.
inline double rd_reconstruction_theory(TheoryScenario scenario, const SystemRates& rates,
                                       const MeasurementStats& stats, double var_c, double var_i,
                                       double rate, Flavor flavor) {
  require(rates.mu > 1, "rd_reconstruction_theory: mu must exceed 1");
  const double s = rates.omega_c * var_c + rates.omega_i * var_i;
  switch (scenario) {
    case TheoryScenario::Meas:
      return rd_gaussian(stats.var_y1, rate, flavor);
    case TheoryScenario::MeasCond:
      return rd_conditional(stats.var_y1, stats.rho12, rate, flavor);
    case TheoryScenario::Ir:
      return rates.gamma * s / (rates.mu - 1.0) * detail::q_factor(rate, flavor);
    case TheoryScenario::IrCond:
      return rates.gamma * s / (rates.mu - 1.0) *
             detail::q_factor(rate + rate_gain_star(stats.rho12), flavor);
    case TheoryScenario::Jr: {
      require(rates.omega_i > 0 && rates.omega_i <= 1,
              "rd_reconstruction_theory: jr needs omega_i in (0,1]");
      return rates.omega_i * rates.gamma * s / (rates.mu - rates.omega_i) *
             detail::q_factor(rate + rate_gain_star(stats.rho12), flavor);
    }
  }
  throw std::invalid_argument("rd_reconstruction_theory: unknown scenario");
}

}  // namespace dcsrd::model
