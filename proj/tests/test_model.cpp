#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "dcsrd/model.hpp"

using namespace dcsrd;
using namespace dcsrd::model;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("system_rates on the reference parameter sets", "[model]") {
  auto r = system_rates(16, 512, 128, 8, 8);
  CHECK(r.gamma == 0.03125);
  CHECK(r.mu == 8.0);
  CHECK(r.omega_c == 0.5);
  CHECK(r.omega_i == 0.5);

  auto r2 = system_rates(24, 1024, 256, 16, 8);
  CHECK(r2.gamma == 0.0234375);
  CHECK_THAT(r2.mu, WithinRel(256.0 / 24.0, 1e-15));
  CHECK_THAT(r2.omega_c, WithinRel(2.0 / 3.0, 1e-15));
  CHECK_THAT(r2.omega_i, WithinRel(1.0 / 3.0, 1e-15));

  auto r3 = system_rates(1, 2, 2, 1, 0);
  CHECK(r3.gamma == 0.5);
  CHECK(r3.mu == 2.0);
  CHECK(r3.omega_c == 1.0);
  CHECK(r3.omega_i == 0.0);
}

TEST_CASE("system_rates rejects invalid dimensions", "[model]") {
  CHECK_THROWS(system_rates(16, 512, 16, 8, 8));   // m == k
  CHECK_THROWS(system_rates(16, 512, 12, 8, 8));   // m < k
  CHECK_THROWS(system_rates(0, 512, 128, 0, 0));
  CHECK_THROWS(system_rates(512, 512, 600, 256, 256));
  // Def. 5 bound: omega_c + omega_i must reach 1
  CHECK_THROWS(system_rates(16, 512, 128, 8, 0));
}

TEST_CASE("measurement_variance closed form", "[model]") {
  auto r = system_rates(16, 512, 128, 8, 8);
  CHECK_THAT(measurement_variance(r, 1.0, 1.0, 0.01), WithinRel(0.063125, 1e-14));
  auto rs = system_rates(16, 512, 128, 16, 0);  // single source
  CHECK_THAT(measurement_variance(rs, 1.0, 1.0, 0.0), WithinRel(0.125, 1e-14));
  CHECK(measurement_variance(r, 1.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("correlation_coefficient closed form and conventions", "[model]") {
  auto r = system_rates(16, 512, 128, 8, 8);
  CHECK_THAT(correlation_coefficient(r, r, 1.0, 0.01, 0.01),
             WithinRel(0.990099009900990, 1e-12));
  CHECK(correlation_coefficient(r, r, 1.0, 0.0, 0.0) == 1.0);
  auto rb = system_rates(24, 1024, 256, 16, 8);
  CHECK_THAT(correlation_coefficient(rb, rb, 1.0, 1.0, 1.0), WithinRel(2.0 / 3.0, 1e-12));
  // no common component: rho = 0 by continuity (documented convention)
  SystemRates nc{0.03125, 8.0, 0.0, 1.0};
  CHECK(correlation_coefficient(nc, nc, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("rate gains against pinned values", "[model]") {
  CHECK(rate_gain_star(0.0) == 0.0);
  CHECK_THAT(rate_gain_star(0.990099009900990), WithinAbs(2.83, 0.01));
  CHECK_THAT(rate_gain_star(0.990099009900990), WithinRel(2.832685637162, 1e-10));
  CHECK_THAT(rate_gain_star(2.0 / 3.0), WithinRel(0.423998453277, 1e-10));
  CHECK(std::isinf(rate_gain_star(1.0)));
  CHECK_THROWS(rate_gain_star(-0.1));
  CHECK_THROWS(rate_gain_star(1.1));

  auto r = system_rates(16, 512, 128, 8, 8);
  CHECK_THAT(rate_gain_jr(r), WithinAbs(0.55, 0.01));
  CHECK_THAT(rate_gain_jr(r), WithinRel(0.549767836775, 1e-10));
  auto rb = system_rates(24, 1024, 256, 16, 8);
  CHECK_THAT(rate_gain_jr(rb), WithinRel(0.840588907990, 1e-10));
  SystemRates no_common{0.03125, 8.0, 1.0, 1.0};
  CHECK(rate_gain_jr(no_common) == 0.0);
  SystemRates no_innov{0.03125, 8.0, 1.0, 0.0};
  CHECK(std::isinf(rate_gain_jr(no_innov)));
}

TEST_CASE("rd_gaussian info and ec flavors", "[model]") {
  CHECK(rd_gaussian(1.0, 0.0, Flavor::Info) == 1.0);
  CHECK_THAT(rd_gaussian(1.0, 1.0, Flavor::Ec), WithinRel(0.355822259278065, 1e-12));
  for (double rate : {0.0, 0.7, 2.0, 5.5}) {
    const double ratio = rd_gaussian(1.3, rate, Flavor::Ec) / rd_gaussian(1.3, rate, Flavor::Info);
    CHECK_THAT(ratio, WithinRel(1.423289037112261, 1e-13));
    CHECK_THAT(10.0 * std::log10(ratio), WithinAbs(1.53, 0.005));
  }
}

TEST_CASE("rd_conditional values and shift identity", "[model]") {
  CHECK(rd_conditional(2.0, 0.0, 1.5, Flavor::Info) == rd_gaussian(2.0, 1.5, Flavor::Info));
  CHECK_THAT(rd_conditional(0.063125, 0.990099009900990, 3.0, Flavor::Info),
             WithinRel(1.943456064e-05, 1e-8));
  const double rho = 0.990099009900990;
  const double rs = rate_gain_star(rho);
  for (double rate : {0.0, 1.0, 4.0, 6.25}) {
    for (auto fl : {Flavor::Info, Flavor::Ec}) {
      CHECK_THAT(rd_conditional(0.063125, rho, rate, fl),
                 WithinRel(rd_gaussian(0.063125, rate + rs, fl), 1e-12));
    }
  }
}

TEST_CASE("oracle_distortion_finite values and precondition", "[model]") {
  CHECK_THAT(oracle_distortion_finite(16, 512, 128, 1.0, 1.0), WithinRel(4.0 / 111.0, 1e-14));
  CHECK(oracle_distortion_finite(16, 512, 128, 0.0, 1.0) == 0.0);
  CHECK_THAT(oracle_distortion_finite(8, 512, 128, 0.01, 1.0),
             WithinRel(1.680672268908e-04, 1e-10));
  CHECK_THROWS_WITH(oracle_distortion_finite(16, 512, 19, 1.0, 1.0),
                    Catch::Matchers::ContainsSubstring("Wishart"));
  CHECK_NOTHROW(oracle_distortion_finite(16, 512, 20, 1.0, 1.0));
}

TEST_CASE("reconstruction RD theory on the reference set", "[model]") {
  auto r = system_rates(16, 512, 128, 8, 8);
  auto st = measurement_stats(r, r, 1.0, 1.0, 0.01, 0.01);
  CHECK_THAT(st.var_y1, WithinRel(0.063125, 1e-14));
  CHECK_THAT(rd_reconstruction_theory(TheoryScenario::Ir, r, st, 1.0, 0.01, 4.0, Flavor::Ec),
             WithinRel(1.253419649e-05, 1e-8));

  // jr at omega_i = 1 coincides with ir-cond for all rates
  auto r1 = system_rates(16, 512, 128, 0, 16);
  auto st1 = measurement_stats(r1, r1, 1.0, 1.0, 1.0, 1.0);
  for (double rate : {0.25, 2.0, 5.0}) {
    CHECK_THAT(rd_reconstruction_theory(TheoryScenario::Jr, r1, st1, 1.0, 1.0, rate, Flavor::Ec),
               WithinRel(rd_reconstruction_theory(TheoryScenario::IrCond, r1, st1, 1.0, 1.0, rate,
                                                  Flavor::Ec),
                         1e-12));
  }
}

TEST_CASE("rate-shift identities hold to 1e-12 over a parameter grid", "[model]") {
  for (int kc : {4, 8, 16}) {
    for (int ki : {4, 8}) {
      for (double vi : {0.01, 0.5, 1.0}) {
        const int k = kc + ki;
        auto r = system_rates(k, 512, 128, kc, ki);
        auto st = measurement_stats(r, r, 1.0, 1.0, vi, vi);
        const double rs = rate_gain_star(st.rho12);
        const double rj = rate_gain_jr(r);
        for (double rate : {0.0, 1.5, 3.0, 6.0}) {
          for (auto fl : {Flavor::Info, Flavor::Ec}) {
            CHECK_THAT(rd_conditional(st.var_y1, st.rho12, rate, fl),
                       WithinRel(rd_gaussian(st.var_y1, rate + rs, fl), 1e-12));
            CHECK_THAT(
                rd_reconstruction_theory(TheoryScenario::Jr, r, st, 1.0, vi, rate, fl),
                WithinRel(rd_reconstruction_theory(TheoryScenario::Ir, r, st, 1.0, vi,
                                                   rate + rs + rj, fl),
                          1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("RD monotonicity: exactly -2 per bit in log2 distortion", "[model]") {
  auto r = system_rates(16, 512, 128, 8, 8);
  auto st = measurement_stats(r, r, 1.0, 1.0, 0.01, 0.01);
  for (auto sc : {TheoryScenario::Meas, TheoryScenario::MeasCond, TheoryScenario::Ir,
                  TheoryScenario::IrCond, TheoryScenario::Jr}) {
    for (double rate : {0.0, 1.0, 2.5, 4.0}) {
      const double d0 = rd_reconstruction_theory(sc, r, st, 1.0, 0.01, rate, Flavor::Ec);
      const double d1 = rd_reconstruction_theory(sc, r, st, 1.0, 0.01, rate + 1.0, Flavor::Ec);
      CHECK(d1 < d0);
      CHECK_THAT(std::log2(d0) - std::log2(d1), WithinAbs(2.0, 1e-12));
    }
  }
}

TEST_CASE("ordering jr <= ir-cond <= ir with the stated equality cases", "[model]") {
  for (int kc : {0, 8, 12}) {
    const int ki = 16 - kc;
    if (ki == 0) continue;
    auto r = system_rates(16, 512, 128, kc, ki);
    auto st = measurement_stats(r, r, 1.0, 1.0, 0.25, 0.25);
    for (double rate : {1.0, 4.0}) {
      const double ir = rd_reconstruction_theory(TheoryScenario::Ir, r, st, 1.0, 0.25, rate, Flavor::Ec);
      const double irc =
          rd_reconstruction_theory(TheoryScenario::IrCond, r, st, 1.0, 0.25, rate, Flavor::Ec);
      const double jr = rd_reconstruction_theory(TheoryScenario::Jr, r, st, 1.0, 0.25, rate, Flavor::Ec);
      CHECK(jr <= irc * (1 + 1e-12));
      CHECK(irc <= ir * (1 + 1e-12));
      if (kc == 0) {  // omega_i = 1 and rho = 0: both pairs collapse
        CHECK_THAT(jr, WithinRel(irc, 1e-12));
        CHECK_THAT(irc, WithinRel(ir, 1e-12));
      } else {
        CHECK(jr < irc);
        CHECK(irc < ir);
      }
    }
  }
}

TEST_CASE("finite oracle distortion approaches the asymptote within (K+1)/(M-K-1)", "[model]") {
  for (int scale : {1, 2, 4, 8}) {
    const int k = 16 * scale, n = 512 * scale, m = 128 * scale;
    const double fin = oracle_distortion_finite(k, n, m, 0.3, 1.0);
    auto r = system_rates(k, n, m, k, 0);
    // Thm. 2 asymptote with D_y = var_e
    const double asym = r.gamma * r.mu / (r.mu - 1.0) * 0.3;
    CHECK(std::abs(fin / asym - 1.0) <= static_cast<double>(k + 1) / (m - k - 1));
  }
}

TEST_CASE("spec types enforce their invariants", "[model]") {
  SparseSpec bad{512, 0, 1.0, Basis::Dct};
  CHECK_THROWS(bad.validate());
  SparseSpec good{512, 8, 1.0, Basis::Dct};
  CHECK_NOTHROW(good.validate());

  PairSpec p{512, 8, 8, 8, 1.0, 0.01, 0.01, OverlapMode::Disjoint, Basis::Dct};
  CHECK_NOTHROW(p.validate());
  p.var_c = 0.0;
  CHECK_THROWS(p.validate());
  p.var_c = 1.0;
  p.k_c = 510;
  CHECK_THROWS(p.validate());  // k_c + max(k_i) > n

  MeasurementStats ms{0.0, 1.0, 0.5};
  CHECK_THROWS(ms.validate());
}
