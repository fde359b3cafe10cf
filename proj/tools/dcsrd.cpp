// dcsrd: rate-distortion laboratory for single-source and distributed
// compressed sensing. Subcommands: sweep (Monte-Carlo RD curves), audit
// (closed-form consistency checks), curves (closed-form curves only).
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "dcsrd/experiments.hpp"

namespace {

int run_audit() {
  const auto report = dcsrd::experiments::run_formula_audit();
  for (const auto& c : report.checks) {
    std::printf("[%s] %-24s value %.12g expected %.12g (tol %s%.3g)\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.expected, c.relative ? "rel " : "", c.tolerance);
  }
  std::printf("%s\n", report.ok() ? "audit: all checks passed" : "audit: FAILURES");
  return report.ok() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compressed-sensing rate-distortion laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  long trials_override = -1;
  long long seed_override = -1;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  bool trial_log = false;

  auto* sweep = app.add_subcommand("sweep", "run seeded Monte-Carlo RD sweeps");
  sweep->add_option("--config", config_path, "JSON sweep configuration")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--trials", trials_override, "override trials from the config");
  sweep->add_option("--seed", seed_override, "override master seed from the config");
  sweep->add_option("--workers", workers, "worker thread count");
  sweep->add_flag("--trial-log", trial_log, "also write per-trial records (trials.csv)");

  auto* audit = app.add_subcommand("audit", "verify closed-form identities and pinned constants");

  std::string curves_config, curves_out = "out";
  auto* curves = app.add_subcommand("curves", "emit closed-form curves only (no simulation)");
  curves->add_option("--config", curves_config, "JSON sweep configuration")->required();
  curves->add_option("--out", curves_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(audit)) return run_audit();

    if (app.got_subcommand(sweep)) {
      auto config = dcsrd::experiments::load_config(config_path);
      if (trials_override > 0) config.trials = trials_override;
      if (seed_override >= 0) config.master_seed = static_cast<std::uint64_t>(seed_override);
      config.validate();
      const auto result = dcsrd::experiments::run_sweep(config, workers, trial_log);
      dcsrd::experiments::write_outputs(result, out_dir, trial_log);
      long failures = 0;
      for (const auto& s : result.scenario_results) failures += s.failures;
      std::printf("sweep: wrote %zu curves to %s (decoder failures: %ld)\n",
                  result.curves.size(), out_dir.c_str(), failures);
      return 0;
    }

    if (app.got_subcommand(curves)) {
      const auto config = dcsrd::experiments::load_config(curves_config);
      const auto result = dcsrd::experiments::closed_form_curves(config);
      namespace fs = std::filesystem;
      fs::create_directories(curves_out);
      for (auto s : config.scenarios) {
        std::ofstream f(fs::path(curves_out) / (dcsrd::experiments::to_string(s) + ".csv"),
                        std::ios::binary);
        f << dcsrd::experiments::curve_csv(result, s);
      }
      std::printf("curves: wrote %zu scenario files to %s\n", config.scenarios.size(),
                  curves_out.c_str());
      return 0;
    }
  } catch (const dcsrd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const dcsrd::experiments::DecoderFailureRateError& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
