#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "dcsrd/model.hpp"
#include "dcsrd/sensing.hpp"
#include "dcsrd/signal.hpp"
#include "dcsrd/stats.hpp"

using namespace dcsrd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const model::PairSpec kFig2a{512, 8, 8, 8, 1.0, 0.01, 0.01, model::OverlapMode::Disjoint,
                             Basis::Dct};
}

TEST_CASE("dct_synthesize maps the unit impulse to the constant vector", "[signal]") {
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(64);
  e0[0] = 1.0;
  const Eigen::VectorXd x = signal::dct_synthesize(e0);
  for (int i = 0; i < 64; ++i) CHECK_THAT(x[i], WithinRel(1.0 / 8.0, 1e-12));
}

TEST_CASE("dct synthesis preserves energy and round-trips", "[signal]") {
  Rng rng(42);
  Eigen::VectorXd theta(512);
  for (int i = 0; i < 512; ++i) theta[i] = rng.gaussian(1.0);
  const Eigen::VectorXd x = signal::dct_synthesize(theta);
  CHECK_THAT(x.norm(), WithinRel(theta.norm(), 1e-10));
  const Eigen::VectorXd back = signal::dct_analyze(x);
  CHECK((back - theta).norm() <= 1e-10 * theta.norm());
}

TEST_CASE("gen_sparse draws exactly k nonzeros on the stated support", "[signal]") {
  model::SparseSpec spec{512, 8, 1.0, Basis::Dct};
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto v = signal::gen_sparse(spec, rng);
    REQUIRE(v.support.size() == 8);
    CHECK(std::is_sorted(v.support.begin(), v.support.end()));
    int nonzeros = 0;
    for (int i = 0; i < 512; ++i)
      if (v.coeffs[i] != 0.0) ++nonzeros;
    CHECK(nonzeros == 8);
    for (int s : v.support) CHECK(v.coeffs[s] != 0.0);
    CHECK_THAT(v.x.norm(), WithinRel(v.coeffs.norm(), 1e-10));
  }
}

TEST_CASE("gen_sparse nonzero moments match the generative law", "[signal-mc]") {
  model::SparseSpec spec{512, 8, 0.49, Basis::Identity};
  Rng rng(123);
  const long draws = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (long t = 0; t < draws; ++t) {
    const auto v = signal::gen_sparse(spec, rng);
    for (int s : v.support) {
      sum += v.coeffs[s];
      sumsq += v.coeffs[s] * v.coeffs[s];
    }
  }
  const double n = 8.0 * draws;
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) <= 3.0 * 0.7 / std::sqrt(n));
  CHECK_THAT(var, WithinRel(0.49, 0.02));
}

TEST_CASE("gen_correlated_pair disjoint mode realizes exact sparsities", "[signal]") {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const auto pair = signal::gen_correlated_pair(kFig2a, rng);
    CHECK(pair.k1 == 16);
    CHECK(pair.k2 == 16);
    std::set<int> all(pair.support_c.begin(), pair.support_c.end());
    for (int i : pair.support_i1) CHECK(all.insert(i).second);
    for (int i : pair.support_i2) CHECK(all.insert(i).second);
    // synthesis linearity: x1 - x2 = Psi (theta_i1 - theta_i2)
    const Eigen::VectorXd diff = signal::dct_synthesize(pair.theta_i1 - pair.theta_i2);
    CHECK((pair.x1 - pair.x2 - diff).norm() <= 1e-10 * (diff.norm() + 1.0));
  }
}

TEST_CASE("gen_correlated_pair with vanishing innovations is fully common", "[signal]") {
  model::PairSpec spec = kFig2a;
  spec.var_i1 = spec.var_i2 = 1e-30;
  Rng rng(5);
  const auto pair = signal::gen_correlated_pair(spec, rng);
  CHECK((pair.x1 - pair.x2).norm() <= 1e-12 * pair.x1.norm());
}

TEST_CASE("gen_correlated_pair uniform-random mode stays within Def-4 bounds", "[signal]") {
  model::PairSpec spec{64,  6,   5,   4,
                       1.0, 1.0, 1.0, model::OverlapMode::UniformRandom,
                       Basis::Identity};
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const auto pair = signal::gen_correlated_pair(spec, rng);
    CHECK(pair.k1 >= 6);
    CHECK(pair.k1 <= 11);
    CHECK(pair.k2 >= 6);
    CHECK(pair.k2 <= 10);
    // component coefficients add on shared indices
    for (int i = 0; i < 64; ++i) CHECK(pair.x1[i] == pair.theta_c[i] + pair.theta_i1[i]);
  }
}

TEST_CASE("gen_correlated_pair rejects infeasible disjoint supports", "[signal]") {
  model::PairSpec spec{16, 8, 8, 8, 1.0, 1.0, 1.0, model::OverlapMode::Disjoint, Basis::Identity};
  Rng rng(3);
  CHECK_THROWS(signal::gen_correlated_pair(spec, rng));
}

TEST_CASE("generation is bit-identical for identical spec and seed", "[signal]") {
  Rng a(20240517), b(20240517);
  const auto pa = signal::gen_correlated_pair(kFig2a, a);
  const auto pb = signal::gen_correlated_pair(kFig2a, b);
  CHECK(pa.support_c == pb.support_c);
  CHECK(pa.support_i1 == pb.support_i1);
  CHECK(pa.support_i2 == pb.support_i2);
  CHECK(pa.x1 == pb.x1);
  CHECK(pa.x2 == pb.x2);
}

TEST_CASE("measurement pairs reproduce the closed-form correlation", "[signal-mc]") {
  // empirical Pearson correlation of (y1, y2) vs the Thm-3 rho12 within 2%
  const auto rates = model::system_rates(16, 512, 128, 8, 8);
  const double rho = model::correlation_coefficient(rates, rates, 1.0, 0.01, 0.01);
  std::vector<double> a, b;
  a.reserve(10000L * 128);
  b.reserve(10000L * 128);
  for (long t = 0; t < 10000; ++t) {
    Rng rng(mix_seed(808, static_cast<std::uint64_t>(t)));
    const auto pair = signal::gen_correlated_pair(kFig2a, rng);
    const auto phi = sensing::gen_sensing_matrix(128, 512, 1.0, rng);
    const Eigen::VectorXd y1 = sensing::measure(phi, pair.x1);
    const Eigen::VectorXd y2 = sensing::measure(phi, pair.x2);
    for (int i = 0; i < 128; ++i) {
      a.push_back(y1[i]);
      b.push_back(y2[i]);
    }
  }
  const double r = stats::pearson_correlation(a, b);
  CHECK_THAT(r, WithinRel(rho, 0.02));
}
