#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "dcsrd/common.hpp"

// Small statistical helpers shared by the experiment engine and the test
// suites: normality checks, correlation, and straight-line fits of RD curves
// in (rate, log2 distortion) coordinates.
namespace dcsrd::stats {

inline double normal_cdf(double x, double sigma) {
  return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0)));
}

// Two-sided Kolmogorov-Smirnov statistic against N(0, sigma^2).
inline double ks_statistic_normal(std::vector<double> samples, double sigma) {
  require(!samples.empty(), "ks_statistic_normal: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i], sigma);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Large-sample two-sided KS critical value, sqrt(-ln(alpha/2)/2)/sqrt(n).
inline double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

inline double excess_kurtosis(const std::vector<double>& samples) {
  require(samples.size() > 3, "excess_kurtosis: too few samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() > 1, "pearson_correlation: bad sample");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  return sab / std::sqrt(saa * sbb);
}

// Least-squares slope of log2(distortion) against rate over points whose rate
// lies in [rate_lo, rate_hi]. Returns false when fewer than two points fit.
inline bool rd_slope_fit(const std::vector<std::pair<double, double>>& rate_distortion,
                         double rate_lo, double rate_hi, double& slope_out) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [r, d] : rate_distortion) {
    if (r < rate_lo || r > rate_hi || d <= 0.0) continue;
    const double l = std::log2(d);
    sx += r;
    sy += l;
    sxx += r * r;
    sxy += r * l;
    ++n;
  }
  if (n < 2) return false;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return false;
  slope_out = (n * sxy - sx * sy) / denom;
  return true;
}

// Horizontal gap between two RD curves at matched distortion via a joint fit
// log2 D = c_i - s R with a shared slope s; gap = (c_a - c_b)/s is positive
// when curve b sits left of curve a. Each curve is filtered to its own rate
// window first.
inline bool rd_gap_fit(const std::vector<std::pair<double, double>>& curve_a, double a_lo,
                       double a_hi, const std::vector<std::pair<double, double>>& curve_b,
                       double b_lo, double b_hi, double& gap_out, double& slope_out) {
  std::vector<std::pair<double, double>> a, b;
  for (const auto& [r, d] : curve_a)
    if (r >= a_lo && r <= a_hi && d > 0.0) a.push_back({r, std::log2(d)});
  for (const auto& [r, d] : curve_b)
    if (r >= b_lo && r <= b_hi && d > 0.0) b.push_back({r, std::log2(d)});
  if (a.size() < 2 || b.size() < 2) return false;
  // normal equations for params (c_a, c_b, s):  l = c - s r
  double na = a.size(), nb = b.size();
  double sra = 0, sla = 0, srb = 0, slb = 0, srr = 0, srl = 0;
  for (const auto& [r, l] : a) {
    sra += r;
    sla += l;
    srr += r * r;
    srl += r * l;
  }
  for (const auto& [r, l] : b) {
    srb += r;
    slb += l;
    srr += r * r;
    srl += r * l;
  }
  // Solve [na 0 -sra; 0 nb -srb; -sra -srb srr] [ca cb s]^T = [sla slb -srl]
  const double b1 = sla, b2 = slb, b3 = -srl;
  const double m11 = na, m12 = 0.0, m13 = -sra;
  const double m22 = nb, m23 = -srb, m33 = srr;
  const double D = m11 * (m22 * m33 - m23 * m23) - m12 * (m12 * m33 - m23 * m13) +
                   m13 * (m12 * m23 - m22 * m13);
  if (D == 0.0) return false;
  const double d1 = b1 * (m22 * m33 - m23 * m23) - m12 * (b2 * m33 - m23 * b3) +
                    m13 * (b2 * m23 - m22 * b3);
  const double d2 = m11 * (b2 * m33 - b3 * m23) - b1 * (m12 * m33 - m23 * m13) +
                    m13 * (m12 * b3 - b2 * m13);
  const double d3 = m11 * (m22 * b3 - m23 * b2) - m12 * (m12 * b3 - b2 * m13) +
                    b1 * (m12 * m23 - m22 * m13);
  const double ca = d1 / D, cb = d2 / D, s = d3 / D;
  if (s <= 0.0) return false;
  gap_out = (ca - cb) / s;
  slope_out = -s;
  return true;
}

// Rate of curve a at the distortion of each in-window point of curve b, by
// piecewise-linear interpolation in (log2 D -> R); returns the mean gap
// R_a(D) - R_b over those points. Curve a must bracket the distortions.
inline bool rd_gap_interpolated(std::vector<std::pair<double, double>> curve_a,
                                const std::vector<std::pair<double, double>>& curve_b, double b_lo,
                                double b_hi, double& gap_out) {
  std::sort(curve_a.begin(), curve_a.end());
  std::vector<double> gaps;
  for (const auto& [rb, db] : curve_b) {
    if (rb < b_lo || rb > b_hi || db <= 0.0) continue;
    const double ld = std::log2(db);
    for (std::size_t i = 0; i + 1 < curve_a.size(); ++i) {
      const double l0 = std::log2(curve_a[i].second), l1 = std::log2(curve_a[i + 1].second);
      if ((ld <= l0 && ld >= l1) || (ld >= l0 && ld <= l1)) {
        const double t = (ld - l0) / (l1 - l0);
        gaps.push_back(curve_a[i].first + t * (curve_a[i + 1].first - curve_a[i].first) - rb);
        break;
      }
    }
  }
  if (gaps.empty()) return false;
  double sum = 0.0;
  for (double g : gaps) sum += g;
  gap_out = sum / static_cast<double>(gaps.size());
  return true;
}

}  // namespace dcsrd::stats
