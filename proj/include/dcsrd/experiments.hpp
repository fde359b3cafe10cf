#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dcsrd/common.hpp"
#include "dcsrd/model.hpp"
#include "dcsrd/quantizer.hpp"
#include "dcsrd/reconstruct.hpp"
#include "dcsrd/rng.hpp"
#include "dcsrd/sensing.hpp"
#include "dcsrd/signal.hpp"
#include "dcsrd/stats.hpp"

// Seeded Monte-Carlo sweep engine: runs the acquisition -> quantization ->
// entropy-rate accounting -> reconstruction chain over a quantizer-step grid
// and emits empirical RD curves next to their closed-form companions.
namespace dcsrd::experiments {

enum class Scenario {
  Meas,
  MeasCond,
  IrOracle,
  IrCondOracle,
  JrOracle,
  BpdnIr,
  BpdnIdealJr,
  IntersectJr,
};

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> names = {
      {Scenario::Meas, "meas"},
      {Scenario::MeasCond, "meas-cond"},
      {Scenario::IrOracle, "ir-oracle"},
      {Scenario::IrCondOracle, "ir-cond-oracle"},
      {Scenario::JrOracle, "jr-oracle"},
      {Scenario::BpdnIr, "bpdn-ir"},
      {Scenario::BpdnIdealJr, "bpdn-ideal-jr"},
      {Scenario::IntersectJr, "intersect-jr"},
  };
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [sc, name] : scenario_names())
    if (sc == s) return name;
  return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
  for (const auto& [sc, name] : scenario_names())
    if (name == s) return sc;
  throw ConfigError("unknown scenario: " + s);
}

// SI is used at the rate accounting (conditional symbol entropy) for every
// scenario that sees y2 at the decoder side.
inline bool uses_conditional_rate(Scenario s) {
  return s == Scenario::MeasCond || s == Scenario::IrCondOracle || s == Scenario::JrOracle ||
         s == Scenario::BpdnIdealJr || s == Scenario::IntersectJr;
}

inline bool is_reconstruction(Scenario s) {
  return s != Scenario::Meas && s != Scenario::MeasCond;
}

inline bool uses_bpdn(Scenario s) {
  return s == Scenario::BpdnIr || s == Scenario::BpdnIdealJr || s == Scenario::IntersectJr;
}

inline model::TheoryScenario theory_scenario(Scenario s) {
  switch (s) {
    case Scenario::Meas: return model::TheoryScenario::Meas;
    case Scenario::MeasCond: return model::TheoryScenario::MeasCond;
    case Scenario::IrOracle:
    case Scenario::BpdnIr: return model::TheoryScenario::Ir;
    case Scenario::IrCondOracle: return model::TheoryScenario::IrCond;
    case Scenario::JrOracle:
    case Scenario::BpdnIdealJr:
    case Scenario::IntersectJr: return model::TheoryScenario::Jr;
  }
  throw std::invalid_argument("theory_scenario: unknown scenario");
}

struct SweepConfig {
  int schema_version = 1;
  model::PairSpec pair_spec;
  int m = 0;
  double var_phi = 1.0;
  std::vector<double> delta_grid;  // ascending quantizer steps
  long trials = 1;                 // decoder / distortion trials per delta
  std::uint64_t master_seed = 1;
  std::vector<Scenario> scenarios;
  std::string flavor = "ec";  // closed-form companions: info | ec | both

  // rate-accounting knobs
  long entropy_symbols = 1'000'000;  // pooled symbol target per delta
  double side_step_ratio = 4.0;      // side info binned at delta / ratio
  // decoder knobs
  double support_threshold = 1e-2;
  double bpdn_rel_tol = 1e-8;
  int bpdn_max_iter = 10000;

  long entropy_trials() const {
    const long need = (entropy_symbols + m - 1) / m;
    return std::max(trials, need);
  }

  void validate() const {
    require(schema_version == 1, "SweepConfig: unsupported schema_version");
    pair_spec.validate();
    require(m > 0 && m < pair_spec.n, "SweepConfig: need 0 < m < n");
    require(var_phi > 0, "SweepConfig: var_phi must be positive");
    require(!delta_grid.empty(), "SweepConfig: delta_grid must be nonempty");
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
      require(delta_grid[i] > 0, "SweepConfig: delta_grid entries must be positive");
      if (i) require(delta_grid[i] > delta_grid[i - 1], "SweepConfig: delta_grid must be sorted ascending");
    }
    require(trials >= 1, "SweepConfig: trials must be >= 1");
    require(!scenarios.empty(), "SweepConfig: scenarios must be nonempty");
    require(entropy_symbols >= 1, "SweepConfig: entropy_symbols must be >= 1");
    require(side_step_ratio > 0, "SweepConfig: side_step_ratio must be positive");
    require(support_threshold >= 0, "SweepConfig: support_threshold must be >= 0");
    require(bpdn_rel_tol > 0 && bpdn_max_iter > 0, "SweepConfig: bad bpdn options");
    const int k1 = pair_spec.k_c + pair_spec.k_i1;
    for (Scenario s : scenarios) {
      if (s == Scenario::IrOracle || s == Scenario::IrCondOracle)
        require(m > k1 + 3, "SweepConfig: oracle scenarios need m > k1 + 3");
      if (s == Scenario::JrOracle)
        require(m > pair_spec.k_i1 + 3, "SweepConfig: jr-oracle needs m > k_i1 + 3");
    }
  }

  model::SystemRates rates1() const {
    return model::system_rates(pair_spec.k_c + pair_spec.k_i1, pair_spec.n, m, pair_spec.k_c,
                               pair_spec.k_i1);
  }
  model::SystemRates rates2() const {
    return model::system_rates(pair_spec.k_c + pair_spec.k_i2, pair_spec.n, m, pair_spec.k_c,
                               pair_spec.k_i2);
  }
  model::MeasurementStats stats() const {
    return model::measurement_stats(rates1(), rates2(), var_phi, pair_spec.var_c, pair_spec.var_i1,
                                    pair_spec.var_i2);
  }
};

// ---- config JSON ----

inline SweepConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> top_keys = {
      "schema_version", "pair_spec", "m", "var_phi", "delta_grid", "trials", "master_seed",
      "scenarios", "flavor", "entropy_symbols", "side_step_ratio", "support_threshold",
      "bpdn_rel_tol", "bpdn_max_iter"};
  static const std::vector<std::string> pair_keys = {
      "n", "k_c", "k_i1", "k_i2", "var_c", "var_i1", "var_i2", "overlap_mode", "basis"};
  try {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(top_keys.begin(), top_keys.end(), it.key()) == top_keys.end())
        throw ConfigError("unknown config key: " + it.key());
    SweepConfig c;
    c.schema_version = j.at("schema_version").get<int>();
    const auto& p = j.at("pair_spec");
    for (auto it = p.begin(); it != p.end(); ++it)
      if (std::find(pair_keys.begin(), pair_keys.end(), it.key()) == pair_keys.end())
        throw ConfigError("unknown pair_spec key: " + it.key());
    c.pair_spec.n = p.at("n").get<int>();
    c.pair_spec.k_c = p.at("k_c").get<int>();
    c.pair_spec.k_i1 = p.at("k_i1").get<int>();
    c.pair_spec.k_i2 = p.at("k_i2").get<int>();
    c.pair_spec.var_c = p.at("var_c").get<double>();
    c.pair_spec.var_i1 = p.at("var_i1").get<double>();
    c.pair_spec.var_i2 = p.at("var_i2").get<double>();
    const std::string mode = p.value("overlap_mode", "disjoint");
    if (mode == "disjoint") c.pair_spec.overlap_mode = model::OverlapMode::Disjoint;
    else if (mode == "uniform-random") c.pair_spec.overlap_mode = model::OverlapMode::UniformRandom;
    else throw ConfigError("unknown overlap_mode: " + mode);
    c.pair_spec.basis = basis_from_string(p.value("basis", "dct"));
    c.m = j.at("m").get<int>();
    c.var_phi = j.at("var_phi").get<double>();
    c.delta_grid = j.at("delta_grid").get<std::vector<double>>();
    c.trials = j.at("trials").get<long>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from_string(s.get<std::string>()));
    c.flavor = j.value("flavor", "ec");
    if (c.flavor != "info" && c.flavor != "ec" && c.flavor != "both")
      throw ConfigError("flavor must be info, ec or both");
    c.entropy_symbols = j.value("entropy_symbols", c.entropy_symbols);
    c.side_step_ratio = j.value("side_step_ratio", c.side_step_ratio);
    c.support_threshold = j.value("support_threshold", c.support_threshold);
    c.bpdn_rel_tol = j.value("bpdn_rel_tol", c.bpdn_rel_tol);
    c.bpdn_max_iter = j.value("bpdn_max_iter", c.bpdn_max_iter);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

inline SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON error: ") + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const SweepConfig& c) {
  nlohmann::json p{{"n", c.pair_spec.n},       {"k_c", c.pair_spec.k_c},
                   {"k_i1", c.pair_spec.k_i1}, {"k_i2", c.pair_spec.k_i2},
                   {"var_c", c.pair_spec.var_c}, {"var_i1", c.pair_spec.var_i1},
                   {"var_i2", c.pair_spec.var_i2},
                   {"overlap_mode", c.pair_spec.overlap_mode == model::OverlapMode::Disjoint
                                        ? "disjoint"
                                        : "uniform-random"},
                   {"basis", dcsrd::to_string(c.pair_spec.basis)}};
  std::vector<std::string> scen;
  for (auto s : c.scenarios) scen.push_back(to_string(s));
  return nlohmann::json{{"schema_version", c.schema_version},
                        {"pair_spec", p},
                        {"m", c.m},
                        {"var_phi", c.var_phi},
                        {"delta_grid", c.delta_grid},
                        {"trials", c.trials},
                        {"master_seed", c.master_seed},
                        {"scenarios", scen},
                        {"flavor", c.flavor},
                        {"entropy_symbols", c.entropy_symbols},
                        {"side_step_ratio", c.side_step_ratio},
                        {"support_threshold", c.support_threshold},
                        {"bpdn_rel_tol", c.bpdn_rel_tol},
                        {"bpdn_max_iter", c.bpdn_max_iter}};
}

// ---- results ----

struct CurvePoint {
  double rate = 0.0;
  double distortion = 0.0;
  long n_trials = 0;
  double delta = 0.0;
  std::string provenance;  // empirical | closed-form-info | closed-form-ec
};

struct RDCurve {
  Scenario scenario = Scenario::Meas;
  std::string provenance;  // empirical | closed-form
  model::Flavor flavor = model::Flavor::Ec;
  std::vector<CurvePoint> points;  // sorted by rate

  std::vector<std::pair<double, double>> rate_distortion() const {
    std::vector<std::pair<double, double>> rd;
    for (const auto& p : points) rd.push_back({p.rate, p.distortion});
    return rd;
  }
};

struct TrialRecord {
  long trial_index = 0;
  std::uint64_t derived_seed = 0;
  Scenario scenario = Scenario::Meas;
  double delta = 0.0;
  double rate_estimate = 0.0;
  double measurement_mse = 0.0;
  double reconstruction_mse = std::numeric_limits<double>::quiet_NaN();
  bool decoder_failed = false;
};

struct ScenarioResult {
  Scenario scenario = Scenario::Meas;
  std::vector<double> pooled_rate;       // per delta, bits per measurement sample
  std::vector<double> pooled_rate_half;  // same from the first half of the pool
  std::vector<double> mean_measurement_mse;
  std::vector<double> mean_reconstruction_mse;  // NaN for meas scenarios
  std::vector<long> successes;                  // per delta
  long failures = 0;
  long decode_trials = 0;
};

class DecoderFailureRateError : public std::runtime_error {
 public:
  DecoderFailureRateError(const std::string& msg, long failures, long trials)
      : std::runtime_error(msg), failures_(failures), trials_(trials) {}
  long failures() const { return failures_; }
  long trials() const { return trials_; }

 private:
  long failures_, trials_;
};

struct SweepResult {
  SweepConfig config;
  std::vector<RDCurve> curves;  // empirical + closed-form companions
  std::vector<ScenarioResult> scenario_results;
  std::vector<TrialRecord> records;

  const RDCurve* find_curve(Scenario s, const std::string& provenance,
                            model::Flavor flavor = model::Flavor::Ec) const {
    for (const auto& c : curves)
      if (c.scenario == s && c.provenance == provenance && (provenance == "empirical" || c.flavor == flavor))
        return &c;
    return nullptr;
  }
};

namespace detail {

inline int scenario_id(Scenario s) {
  int i = 0;
  for (const auto& [sc, name] : scenario_names()) {
    if (sc == s) return i;
    ++i;
  }
  return -1;
}

struct WorkerPool {
  // per-delta counters, split into first/second half of the entropy pool so
  // the doubling-convergence evidence comes for free
  std::vector<quantizer::SymbolCounter> h1_a, h1_b;
  std::vector<quantizer::JointSymbolCounter> joint_a, joint_b;
};

}  // namespace detail

// Runs `trials` decode trials plus enough extra rate-only trials to pool
// `entropy_symbols` symbols per delta. Per-trial seeds are
// mix(master_seed, trial_index, scenario_id); results are identical for any
// worker count.
inline SweepResult run_sweep(const SweepConfig& config, int workers = 1,
                             bool keep_trial_records = true) {
  config.validate();
  require(workers >= 1, "run_sweep: workers must be >= 1");
  SweepResult result;
  result.config = config;
  const int n_delta = static_cast<int>(config.delta_grid.size());
  const long decode_trials = config.trials;
  const long pool_trials = (config.entropy_symbols + config.m - 1) / config.m;
  const long total_trials = std::max(decode_trials, pool_trials);
  const long half_trials = pool_trials / 2;
  const int m = config.m;
  const Basis basis = config.pair_spec.basis;
  const auto rates = config.rates1();
  const auto mstats = config.stats();

  for (Scenario scenario : config.scenarios) {
    const int sid = detail::scenario_id(scenario);
    const bool conditional = uses_conditional_rate(scenario);
    const bool reconstruct_scenario = is_reconstruction(scenario);
    const bool bpdn_scenario = uses_bpdn(scenario);
    const bool needs_oracle_support =
        scenario == Scenario::IrOracle || scenario == Scenario::IrCondOracle;

    std::vector<std::vector<double>> meas_mse(n_delta, std::vector<double>(decode_trials, 0.0));
    std::vector<std::vector<double>> rec_mse(
        n_delta, std::vector<double>(reconstruct_scenario ? decode_trials : 0, 0.0));
    std::vector<std::vector<double>> trial_rate(n_delta, std::vector<double>(decode_trials, 0.0));
    std::vector<std::vector<unsigned char>> failed(
        n_delta, std::vector<unsigned char>(decode_trials, 0));

    std::vector<detail::WorkerPool> pools(workers);
    for (auto& p : pools) {
      p.h1_a.resize(n_delta);
      p.h1_b.resize(n_delta);
      p.joint_a.resize(n_delta);
      p.joint_b.resize(n_delta);
    }

    std::atomic<long> next{0};
    auto worker_fn = [&](int w) {
      detail::WorkerPool& pool = pools[w];
      reconstruct::BpdnOptions bpdn_options{config.bpdn_rel_tol, config.bpdn_max_iter};
      for (;;) {
        const long t = next.fetch_add(1);
        if (t >= total_trials) break;
        Rng rng(mix_seed(config.master_seed, static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(sid)));
        const auto pair = signal::gen_correlated_pair(config.pair_spec, rng);
        const auto phi = sensing::gen_sensing_matrix(m, config.pair_spec.n, config.var_phi, rng);
        const Eigen::VectorXd y1 = sensing::measure(phi, pair.x1);
        const Eigen::VectorXd y2 = sensing::measure(phi, pair.x2);
        const bool decode = t < decode_trials;

        std::vector<int> support1;
        Eigen::VectorXd x_c;
        std::optional<reconstruct::BpdnOperator> op;
        std::optional<reconstruct::Reconstruction> si_rec;  // intersect-jr SI decode
        if (decode && reconstruct_scenario) {
          if (needs_oracle_support) support1 = signal::global_support(pair, 1);
          if (scenario == Scenario::JrOracle)
            x_c = signal::synthesize(basis, pair.theta_c);
          if (bpdn_scenario) op.emplace(phi, basis);
          if (scenario == Scenario::IntersectJr) {
            try {
              si_rec = reconstruct::bpdn_solve(*op, y2, 0.0, bpdn_options);
            } catch (const SolverFailure&) {
              si_rec.reset();
            }
          }
        }

        for (int d = 0; d < n_delta; ++d) {
          const double delta = config.delta_grid[d];
          const auto s1 = quantizer::quantize(y1, {delta});
          if (t < pool_trials) {
            const bool first_half = t < half_trials;
            if (conditional) {
              auto& jc = first_half ? pool.joint_a[d] : pool.joint_b[d];
              jc.add(s1, y2, delta / config.side_step_ratio);
            } else {
              auto& hc = first_half ? pool.h1_a[d] : pool.h1_b[d];
              hc.add(s1);
            }
          }
          if (!decode) continue;

          const Eigen::VectorXd yq1 = quantizer::dequantize(s1);
          meas_mse[d][t] = (yq1 - y1).squaredNorm() / m;
          trial_rate[d][t] = conditional
                                 ? quantizer::empirical_conditional_entropy(
                                       s1, y2, delta / config.side_step_ratio)
                                 : quantizer::empirical_entropy(s1);
          if (!reconstruct_scenario) continue;

          try {
            reconstruct::Reconstruction rec;
            switch (scenario) {
              case Scenario::IrOracle:
              case Scenario::IrCondOracle:
                rec = reconstruct::oracle_reconstruct(yq1, phi, basis, support1);
                break;
              case Scenario::JrOracle:
                rec = reconstruct::ideal_jr(yq1, y2, phi, basis, x_c, pair.support_i1);
                break;
              case Scenario::BpdnIr:
                rec = reconstruct::bpdn_solve(
                    *op, yq1, reconstruct::quantization_epsilon(m, delta), bpdn_options);
                break;
              case Scenario::BpdnIdealJr: {
                reconstruct::JrPolicy policy{reconstruct::quantization_epsilon(m, delta), 0.0,
                                             config.support_threshold, bpdn_options};
                rec = reconstruct::jr_with_common_support(*op, yq1, y2, pair.support_c, policy);
                break;
              }
              case Scenario::IntersectJr: {
                reconstruct::JrPolicy policy{reconstruct::quantization_epsilon(m, delta), 0.0,
                                             config.support_threshold, bpdn_options};
                if (!si_rec) throw SolverFailure("intersect-jr: SI decode failed", -1.0);
                reconstruct::Reconstruction rec1 =
                    reconstruct::bpdn_solve(*op, yq1, policy.epsilon1, bpdn_options);
                const auto sup1 =
                    reconstruct::threshold_support(rec1.theta_hat, policy.support_threshold);
                const auto sup2 =
                    reconstruct::threshold_support(si_rec->theta_hat, policy.support_threshold);
                std::vector<int> common;
                std::set_intersection(sup1.begin(), sup1.end(), sup2.begin(), sup2.end(),
                                      std::back_inserter(common));
                rec = reconstruct::jr_with_common_support(*op, yq1, y2, common, policy, &rec1);
                break;
              }
              default:
                break;
            }
            rec_mse[d][t] = (rec.x_hat - pair.x1).squaredNorm() / config.pair_spec.n;
          } catch (const SolverFailure&) {
            failed[d][t] = 1;
            rec_mse[d][t] = std::numeric_limits<double>::quiet_NaN();
          }
        }
      }
    };

    if (workers == 1) {
      worker_fn(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn, w);
      for (auto& th : threads) th.join();
    }

    // merge pools (integer counts: order-insensitive), then reduce trials in
    // index order so results do not depend on the worker count
    ScenarioResult sres;
    sres.scenario = scenario;
    sres.decode_trials = decode_trials;
    for (int d = 0; d < n_delta; ++d) {
      quantizer::SymbolCounter h_first, h_full;
      quantizer::JointSymbolCounter j_first, j_full;
      for (auto& p : pools) {
        h_first.merge(p.h1_a[d]);
        j_first.merge(p.joint_a[d]);
      }
      h_full = h_first;
      j_full = j_first;
      for (auto& p : pools) {
        h_full.merge(p.h1_b[d]);
        j_full.merge(p.joint_b[d]);
      }
      if (conditional) {
        sres.pooled_rate.push_back(j_full.conditional_entropy_bits());
        sres.pooled_rate_half.push_back(j_first.conditional_entropy_bits());
      } else {
        sres.pooled_rate.push_back(h_full.entropy_bits());
        sres.pooled_rate_half.push_back(h_first.entropy_bits());
      }
      double msum = 0.0, rsum = 0.0;
      long good = 0;
      for (long t = 0; t < decode_trials; ++t) {
        msum += meas_mse[d][t];
        if (failed[d][t]) continue;
        if (reconstruct_scenario) rsum += rec_mse[d][t];
        ++good;
      }
      sres.mean_measurement_mse.push_back(msum / decode_trials);
      sres.mean_reconstruction_mse.push_back(
          reconstruct_scenario ? rsum / std::max(good, 1L)
                               : std::numeric_limits<double>::quiet_NaN());
      sres.successes.push_back(good);
      sres.failures += decode_trials - good;
    }

    if (keep_trial_records) {
      for (int d = 0; d < n_delta; ++d)
        for (long t = 0; t < decode_trials; ++t)
          result.records.push_back(TrialRecord{
              t, mix_seed(config.master_seed, static_cast<std::uint64_t>(t),
                          static_cast<std::uint64_t>(sid)),
              scenario, config.delta_grid[d], trial_rate[d][t], meas_mse[d][t],
              reconstruct_scenario ? rec_mse[d][t] : std::numeric_limits<double>::quiet_NaN(),
              failed[d][t] != 0});
    }

    // empirical curve (ascending rate = descending delta)
    RDCurve emp;
    emp.scenario = scenario;
    emp.provenance = "empirical";
    for (int d = n_delta - 1; d >= 0; --d) {
      CurvePoint p;
      p.rate = sres.pooled_rate[d];
      p.distortion = reconstruct_scenario ? sres.mean_reconstruction_mse[d]
                                          : sres.mean_measurement_mse[d];
      p.n_trials = sres.successes[d];
      p.delta = config.delta_grid[d];
      p.provenance = "empirical";
      emp.points.push_back(p);
    }
    result.curves.push_back(emp);

    // closed-form companions at the same rates
    std::vector<model::Flavor> flavors;
    if (config.flavor == "info" || config.flavor == "both") flavors.push_back(model::Flavor::Info);
    if (config.flavor == "ec" || config.flavor == "both") flavors.push_back(model::Flavor::Ec);
    for (auto fl : flavors) {
      RDCurve th;
      th.scenario = scenario;
      th.provenance = "closed-form";
      th.flavor = fl;
      for (int d = n_delta - 1; d >= 0; --d) {
        CurvePoint p;
        p.rate = sres.pooled_rate[d];
        p.distortion = model::rd_reconstruction_theory(theory_scenario(scenario), rates, mstats,
                                                       config.pair_spec.var_c,
                                                       config.pair_spec.var_i1, p.rate, fl);
        p.n_trials = 0;
        p.delta = config.delta_grid[d];
        p.provenance = std::string("closed-form-") + model::to_string(fl);
        th.points.push_back(p);
      }
      result.curves.push_back(th);
    }

    result.scenario_results.push_back(sres);
    const double fail_rate =
        static_cast<double>(sres.failures) / static_cast<double>(decode_trials * n_delta);
    if (reconstruct_scenario && fail_rate >= 0.01)
      throw DecoderFailureRateError(
          "decoder failure rate " + std::to_string(fail_rate) + " for scenario " +
              to_string(scenario) + " reached the 1% abort threshold",
          sres.failures, decode_trials * static_cast<long>(n_delta));
  }
  return result;
}

// ---- formula audit ----

struct AuditCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline void audit_push(AuditReport& rep, const std::string& name, double value, double expected,
                       double tol, bool relative) {
  AuditCheck c{name, value, expected, tol, relative, false};
  const double err = std::abs(value - expected);
  c.pass = relative ? err <= tol * std::abs(expected) : err <= tol;
  rep.checks.push_back(c);
}

}  // namespace detail

// One-shot verification of the closed-form identities and the pinned
// constants on the two reference parameter sets.
inline AuditReport run_formula_audit() {
  using namespace model;
  AuditReport rep;
  // set A: N=512, K_C = K_I = 8, var_c = 1, var_i = 1e-2, M = 128
  const auto ra = system_rates(16, 512, 128, 8, 8);
  const auto sa = measurement_stats(ra, ra, 1.0, 1.0, 0.01, 0.01);
  // set B: N=1024, K_C=16, K_I=8, all variances 1, M=256
  const auto rb = system_rates(24, 1024, 256, 16, 8);
  const auto sb = measurement_stats(rb, rb, 1.0, 1.0, 1.0, 1.0);

  detail::audit_push(rep, "r_star_set_a", rate_gain_star(sa.rho12), 2.83, 0.01, false);
  detail::audit_push(rep, "r_jr_set_a", rate_gain_jr(ra), 0.55, 0.01, false);
  detail::audit_push(rep, "rho12_set_a", sa.rho12, 1.0 / 1.01, 1e-12, true);
  detail::audit_push(rep, "var_y1_set_a", sa.var_y1, 0.063125, 1e-12, true);
  detail::audit_push(rep, "r_star_set_b", rate_gain_star(sb.rho12), 0.423998453277, 1e-9, false);
  detail::audit_push(rep, "r_jr_set_b", rate_gain_jr(rb), 0.840588907990, 1e-9, false);
  detail::audit_push(rep, "ec_info_ratio", rd_gaussian(1.0, 2.0, Flavor::Ec) /
                                               rd_gaussian(1.0, 2.0, Flavor::Info),
                     kPiEOver6, 1e-12, true);
  detail::audit_push(rep, "ec_info_gap_db",
                     10.0 * std::log10(kPiEOver6), 1.53, 0.01, false);
  detail::audit_push(rep, "oracle_finite_set_a", oracle_distortion_finite(16, 512, 128, 1.0, 1.0),
                     4.0 / 111.0, 1e-12, true);

  double worst_shift = 0.0, worst_jr = 0.0, worst_reduce = 0.0;
  const std::array<SystemRates, 2> rate_sets{ra, rb};
  const std::array<MeasurementStats, 2> stat_sets{sa, sb};
  const std::array<double, 2> vi_sets{0.01, 1.0};
  for (int set = 0; set < 2; ++set) {
    const auto& r = rate_sets[set];
    const auto& s = stat_sets[set];
    const double rs = rate_gain_star(s.rho12);
    const double rj = rate_gain_jr(r);
    const double vc = 1.0;
    const double vi = vi_sets[set];
    for (double rate : {0.0, 1.0, 3.0, 4.7, 6.0}) {
      for (auto fl : {Flavor::Info, Flavor::Ec}) {
        const double lhs = rd_conditional(s.var_y1, s.rho12, rate, fl);
        const double rhs = rd_gaussian(s.var_y1, rate + rs, fl);
        worst_shift = std::max(worst_shift, std::abs(lhs / rhs - 1.0));
        const double jr = rd_reconstruction_theory(TheoryScenario::Jr, r, s, vc, vi, rate, fl);
        const double ir =
            rd_reconstruction_theory(TheoryScenario::Ir, r, s, vc, vi, rate + rs + rj, fl);
        worst_jr = std::max(worst_jr, std::abs(jr / ir - 1.0));
      }
    }
  }
  const auto r1 = system_rates(16, 512, 128, 0, 16);
  const auto s1 = measurement_stats(r1, r1, 1.0, 1.0, 1.0, 1.0);
  for (double rate : {0.5, 2.0, 5.0}) {
    const double jr = rd_reconstruction_theory(TheoryScenario::Jr, r1, s1, 1.0, 1.0, rate, Flavor::Ec);
    const double irc =
        rd_reconstruction_theory(TheoryScenario::IrCond, r1, s1, 1.0, 1.0, rate, Flavor::Ec);
    worst_reduce = std::max(worst_reduce, std::abs(jr / irc - 1.0));
  }
  detail::audit_push(rep, "shift_identity_meas", worst_shift, 0.0, 1e-12, false);
  detail::audit_push(rep, "shift_identity_jr", worst_jr, 0.0, 1e-12, false);
  detail::audit_push(rep, "jr_reduces_to_ir_cond", worst_reduce, 0.0, 1e-12, false);
  return rep;
}

// ---- output writers ----

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline std::string curve_csv(const SweepResult& result, Scenario scenario) {
  std::ostringstream out;
  out << "rate_bpms,distortion_mse,distortion_db,n_trials,delta,provenance\n";
  for (const auto& curve : result.curves) {
    if (curve.scenario != scenario) continue;
    for (const auto& p : curve.points) {
      const double db = p.distortion > 0 ? 10.0 * std::log10(p.distortion)
                                         : -std::numeric_limits<double>::infinity();
      out << detail::fmt(p.rate) << ',' << detail::fmt(p.distortion) << ',' << detail::fmt(db)
          << ',' << p.n_trials << ',' << detail::fmt(p.delta) << ',' << p.provenance << '\n';
    }
  }
  return out.str();
}

struct GapEstimates {
  bool r_star_present = false;
  double r_star_fit = 0.0;
  bool r_jr_present = false;
  double r_jr_fit = 0.0;
  bool combined_present = false;
  double combined_gain = 0.0;
};

// Horizontal-gap fits over the conditional curve's own rate window.
inline GapEstimates estimate_gaps(const SweepResult& result, double rate_lo = 3.0,
                                  double rate_hi = 6.0) {
  GapEstimates g;
  const auto stats_of = [&](Scenario s) -> const RDCurve* {
    return result.find_curve(s, "empirical");
  };
  const double r_star = model::rate_gain_star(result.config.stats().rho12);
  double slope = 0.0;
  if (const RDCurve* a = stats_of(Scenario::Meas)) {
    if (const RDCurve* b = stats_of(Scenario::MeasCond)) {
      g.r_star_present = stats::rd_gap_fit(a->rate_distortion(), rate_lo + r_star,
                                           rate_hi + r_star, b->rate_distortion(), rate_lo,
                                           rate_hi, g.r_star_fit, slope);
    }
  }
  if (!g.r_star_present) {
    if (const RDCurve* a = stats_of(Scenario::IrOracle)) {
      if (const RDCurve* b = stats_of(Scenario::IrCondOracle)) {
        g.r_star_present = stats::rd_gap_fit(a->rate_distortion(), rate_lo + r_star,
                                             rate_hi + r_star, b->rate_distortion(), rate_lo,
                                             rate_hi, g.r_star_fit, slope);
      }
    }
  }
  if (const RDCurve* a = stats_of(Scenario::IrCondOracle)) {
    if (const RDCurve* b = stats_of(Scenario::JrOracle)) {
      g.r_jr_present = stats::rd_gap_fit(a->rate_distortion(), rate_lo, rate_hi,
                                         b->rate_distortion(), rate_lo, rate_hi, g.r_jr_fit,
                                         slope);
    }
  }
  if (const RDCurve* a = stats_of(Scenario::BpdnIr)) {
    if (const RDCurve* b = stats_of(Scenario::IntersectJr)) {
      g.combined_present = stats::rd_gap_interpolated(a->rate_distortion(), b->rate_distortion(),
                                                      rate_lo, rate_hi, g.combined_gain);
    }
  }
  return g;
}

inline nlohmann::json summary_json(const SweepResult& result) {
  const auto& config = result.config;
  const auto mstats = config.stats();
  const double r_star = model::rate_gain_star(mstats.rho12);
  const double r_jr = model::rate_gain_jr(config.rates1());
  const GapEstimates gaps = estimate_gaps(result);

  nlohmann::json flags;
  nlohmann::json estimates;
  if (gaps.r_star_present) {
    estimates["r_star_gap_fit"] = gaps.r_star_fit;
    flags["r_star_within_0.1"] = std::abs(gaps.r_star_fit - r_star) <= 0.1;
  }
  if (gaps.r_jr_present) {
    estimates["r_jr_gap_fit"] = gaps.r_jr_fit;
    flags["r_jr_within_0.1"] = std::abs(gaps.r_jr_fit - r_jr) <= 0.1;
  }
  if (gaps.combined_present) {
    estimates["combined_gain_fit"] = gaps.combined_gain;
    flags["combined_gain_within_0.3"] = std::abs(gaps.combined_gain - (r_star + r_jr)) <= 0.3;
  }

  nlohmann::json failures;
  double half_delta_max = 0.0;
  for (const auto& s : result.scenario_results) {
    failures[to_string(s.scenario)] = s.failures;
    for (std::size_t d = 0; d < s.pooled_rate.size(); ++d)
      half_delta_max = std::max(half_delta_max, std::abs(s.pooled_rate[d] - s.pooled_rate_half[d]));
  }

  return nlohmann::json{
      {"schema_version", 1},
      {"config", config_to_json(config)},
      {"formula",
       {{"r_star", r_star},
        {"r_jr", r_jr},
        {"rho12", mstats.rho12},
        {"var_y1", mstats.var_y1},
        {"pi_e_over_6", kPiEOver6}}},
      {"estimates", estimates},
      {"flags", flags},
      {"decoder_failures", failures},
      {"entropy_half_pool_max_delta_bits", half_delta_max},
  };
}

inline void write_outputs(const SweepResult& result, const std::string& out_dir,
                          bool write_trial_log = false) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (Scenario s : result.config.scenarios) {
    std::ofstream f(fs::path(out_dir) / (to_string(s) + ".csv"), std::ios::binary);
    f << curve_csv(result, s);
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary.json", std::ios::binary);
    f << summary_json(result).dump(2) << '\n';
  }
  if (write_trial_log) {
    std::ofstream f(fs::path(out_dir) / "trials.csv", std::ios::binary);
    f << "trial_index,derived_seed,scenario,delta,rate_estimate,measurement_mse,"
         "reconstruction_mse,decoder_failed\n";
    for (const auto& r : result.records) {
      f << r.trial_index << ',' << r.derived_seed << ',' << to_string(r.scenario) << ','
        << detail::fmt(r.delta) << ',' << detail::fmt(r.rate_estimate) << ','
        << detail::fmt(r.measurement_mse) << ',' << detail::fmt(r.reconstruction_mse) << ','
        << (r.decoder_failed ? 1 : 0) << '\n';
    }
  }
}

// Closed-form curves only (no simulation): rates mapped from the delta grid
// via the high-rate entropy of the quantized measurement,
// R(delta) = (1/2) log2(2 pi e var_y1) - log2(delta), minus R* on the
// conditional axis, clamped at zero.
inline SweepResult closed_form_curves(const SweepConfig& config) {
  config.validate();
  SweepResult result;
  result.config = config;
  const auto rates = config.rates1();
  const auto mstats = config.stats();
  const double r_star = model::rate_gain_star(mstats.rho12);
  std::vector<model::Flavor> flavors;
  if (config.flavor == "info" || config.flavor == "both") flavors.push_back(model::Flavor::Info);
  if (config.flavor == "ec" || config.flavor == "both") flavors.push_back(model::Flavor::Ec);
  for (Scenario scenario : config.scenarios) {
    for (auto fl : flavors) {
      RDCurve th;
      th.scenario = scenario;
      th.provenance = "closed-form";
      th.flavor = fl;
      for (int d = static_cast<int>(config.delta_grid.size()) - 1; d >= 0; --d) {
        const double delta = config.delta_grid[d];
        double rate = 0.5 * std::log2(2.0 * 3.14159265358979323846 * 2.71828182845904523536 *
                                      mstats.var_y1) -
                      std::log2(delta);
        if (uses_conditional_rate(scenario)) rate -= r_star;
        rate = std::max(rate, 0.0);
        CurvePoint p;
        p.rate = rate;
        p.distortion = model::rd_reconstruction_theory(theory_scenario(scenario), rates, mstats,
                                                       config.pair_spec.var_c,
                                                       config.pair_spec.var_i1, rate, fl);
        p.n_trials = 0;
        p.delta = delta;
        p.provenance = std::string("closed-form-") + model::to_string(fl);
        th.points.push_back(p);
      }
      result.curves.push_back(th);
    }
  }
  return result;
}

}  // namespace dcsrd::experiments
