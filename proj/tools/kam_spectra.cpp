#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

using namespace kamspec;
using namespace kamspec::app;

namespace {

struct Flags {
  std::string config;
  std::string mode;
  int radius = 0;
  bool trace = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required();
  cmd->add_option("--mode", f.mode, "rigorous or empirical")->check(CLI::IsMember({"rigorous", "empirical"}));
  cmd->add_option("--radius", f.radius, "window radius")->check(CLI::PositiveNumber);
  cmd->add_flag("--trace", f.trace, "per-step ledger on stderr and in ledger_jsonl");
}

ExperimentConfig load(const Flags& f) {
  ExperimentConfig cfg = ExperimentConfig::load(f.config);
  if (!f.mode.empty()) cfg.run.mode = parse_mode(f.mode);
  if (f.radius > 0) cfg.run.radius = f.radius;
  if (f.trace) cfg.outputs.trace = true;
  cfg.validate();
  return cfg;
}

int print(const json& j) {
  std::cout << j.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAM diagonalization of quasi-periodic operators"};
  app.require_subcommand(1);
  Flags f;
  auto* scan = app.add_subcommand("scan", "verify the spectral assumptions on the window");
  auto* constants = app.add_subcommand("constants", "print the iteration constants");
  auto* run = app.add_subcommand("run", "full pipeline with reports");
  auto* sweep_cmd = app.add_subcommand("sweep", "run over an epsilon or omega list");
  auto* oracle = app.add_subcommand("oracle", "dense diagonalization only");
  for (auto* c : {scan, constants, run, sweep_cmd, oracle}) add_flags(c, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    const ExperimentConfig cfg = load(f);
    if (scan->parsed()) return print(scan_report(cfg));
    if (constants->parsed()) return print(constants_report(cfg));
    if (oracle->parsed()) return print(oracle_report(cfg));
    if (sweep_cmd->parsed()) {
      const auto rows = sweep(cfg, thread_cap());
      const std::string csv = sweep_csv(rows);
      if (cfg.outputs.sweep_csv.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(cfg.outputs.sweep_csv);
        if (!out) throw Error(Errc::config, "cannot write '" + cfg.outputs.sweep_csv + "'");
        out << csv;
      }
      return kOk;
    }
    RunOptions ro;
    ro.echo_trace = cfg.outputs.trace;
    const RunOutcome r = run_experiment(cfg, ro);
    if (r.exit_code != kOk) {
      std::cerr << "kam_spectra: " << r.message << '\n';
      return r.exit_code;
    }
    const json& res = r.report["result"];
    std::cout << "converged " << res["converged"] << " in " << res["steps"] << " steps, residual "
              << res["residual"] << ", eps* " << r.report["constants"]["eps_star"] << '\n';
    if (cfg.outputs.report.empty()) print(stable_payload(r.report));
    return kOk;
  } catch (const Error& e) {
    std::cerr << "kam_spectra: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}
