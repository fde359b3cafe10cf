#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dcsrd/sensing.hpp"
#include "dcsrd/signal.hpp"
#include "dcsrd/stats.hpp"

using namespace dcsrd;
using Catch::Matchers::WithinRel;

TEST_CASE("gen_sensing_matrix shape, seeding and degenerate variance", "[sensing]") {
  Rng rng(1);
  const auto phi = sensing::gen_sensing_matrix(128, 512, 1.0, rng);
  CHECK(phi.entries.rows() == 128);
  CHECK(phi.entries.cols() == 512);

  Rng z(2);
  const auto zero = sensing::gen_sensing_matrix(16, 32, 0.0, z);
  CHECK(zero.entries.cwiseAbs().maxCoeff() == 0.0);

  Rng a(77), b(77);
  const auto pa = sensing::gen_sensing_matrix(32, 64, 2.0, a);
  const auto pb = sensing::gen_sensing_matrix(32, 64, 2.0, b);
  CHECK(pa.entries == pb.entries);

  CHECK_THROWS(sensing::gen_sensing_matrix(64, 64, 1.0, a));
  CHECK_THROWS(sensing::gen_sensing_matrix(0, 64, 1.0, a));
}

TEST_CASE("entry statistics: mean CLT bound and sample-variance sanity band", "[sensing]") {
  Rng rng(314);
  const auto phi = sensing::gen_sensing_matrix(128, 512, 1.0, rng);
  const double mn = 128.0 * 512.0;
  CHECK(std::abs(phi.entries.mean()) <= 4.0 / std::sqrt(mn));
  const double var = phi.entries.array().square().mean() - phi.entries.mean() * phi.entries.mean();
  CHECK(std::abs(var - 1.0) <= 5.0 * 1.0 / std::sqrt(mn));
}

TEST_CASE("measure: zero input, normalization and linearity", "[sensing]") {
  Rng rng(9);
  const auto phi = sensing::gen_sensing_matrix(64, 256, 1.0, rng);
  CHECK(sensing::measure(phi, Eigen::VectorXd::Zero(256)).norm() == 0.0);

  Eigen::VectorXd x1(256), x2(256);
  for (int i = 0; i < 256; ++i) {
    x1[i] = rng.gaussian(1.0);
    x2[i] = rng.gaussian(1.0);
  }
  const Eigen::VectorXd lhs = sensing::measure(phi, 2.5 * x1 - 0.75 * x2);
  const Eigen::VectorXd rhs = 2.5 * sensing::measure(phi, x1) - 0.75 * sensing::measure(phi, x2);
  CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());

  CHECK_THROWS(sensing::measure(phi, Eigen::VectorXd::Zero(255)));
}

TEST_CASE("measurement variance matches the closed form on the reference set", "[sensing-mc]") {
  // sample variance of y over 10^4 trials vs (s2phi/mu)(w_c s2c + w_i s2i)
  const model::PairSpec spec{512, 8, 8, 8, 1.0, 0.01, 0.01, model::OverlapMode::Disjoint,
                             Basis::Dct};
  double sumsq = 0.0;
  long n = 0;
  for (long t = 0; t < 10000; ++t) {
    Rng rng(mix_seed(606, static_cast<std::uint64_t>(t)));
    const auto pair = signal::gen_correlated_pair(spec, rng);
    const auto phi = sensing::gen_sensing_matrix(128, 512, 1.0, rng);
    const Eigen::VectorXd y = sensing::measure(phi, pair.x1);
    sumsq += y.squaredNorm();
    n += y.size();
  }
  CHECK_THAT(sumsq / n, WithinRel(0.063125, 0.02));
}

TEST_CASE("pooled measurements pass normality checks in a dense regime", "[sensing-mc]") {
  // numerical check of the Gaussian-convergence claim at N=512: a dense,
  // well-mixed configuration (K=128, M=256) pooled over 4000 trials, 64
  // samples per trial
  const model::SparseSpec spec{512, 128, 1.0, Basis::Dct};
  const auto rates = model::system_rates(128, 512, 256, 128, 0);
  const double s2y = model::measurement_variance(rates, 1.0, 1.0, 0.0);
  std::vector<double> pooled;
  pooled.reserve(4000L * 64);
  for (long t = 0; t < 4000; ++t) {
    Rng rng(mix_seed(7070, static_cast<std::uint64_t>(t)));
    const auto v = signal::gen_sparse(spec, rng);
    const auto phi = sensing::gen_sensing_matrix(256, 512, 1.0, rng);
    const Eigen::VectorXd y = sensing::measure(phi, v.x);
    for (int i = 0; i < 64; ++i) pooled.push_back(y[i]);
  }
  const double ks = stats::ks_statistic_normal(pooled, std::sqrt(s2y));
  CHECK(ks < stats::ks_critical(0.01, pooled.size()));
  CHECK(std::abs(stats::excess_kurtosis(pooled)) < 0.1);
}
