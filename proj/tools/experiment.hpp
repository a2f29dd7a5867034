#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kamspec/kam.hpp"
#include "kamspec/perturbation.hpp"
#include "kamspec/spectrum.hpp"

namespace kamspec::app {

using nlohmann::json;

enum ExitCode { kOk = 0, kConfigError = 2, kRigorViolation = 3, kNumerical = 4 };

struct ModelConfig {
  std::vector<double> omega;
  TransformSpec transform;
  double gamma = 1.0;
  std::optional<double> c;  // empty: certified by scan
  std::optional<int> scan_kmax;
  std::optional<int> scan_jmax;
  double scan_safety = 1.05;
};

struct RunConfig {
  std::optional<double> epsilon;
  std::vector<double> epsilon_list;
  std::vector<std::vector<double>> omega_list;
  int radius = 20;
  std::optional<int> interior_buffer;
  WindowShape shape = WindowShape::box;
  KamMode mode = KamMode::empirical;
  double convergence_tol = 1e-14;
  double absolute_tol = 0.0;
  int max_steps = 30;
  double prune_floor = 1e-16;
  double series_tol = 1e-15;
  int series_max_terms = 200;
  bool oracle = true;
  bool drift = true;
  int diophantine_kmax = 15;
};

struct OutputConfig {
  std::string report;
  std::string eigenvalues_csv;
  std::string vectors_csv;
  std::string ledger_jsonl;
  std::string sweep_csv;
  bool trace = false;
};

struct ExperimentConfig {
  ModelConfig model;
  PerturbationSpec perturbation;
  RunConfig run;
  OutputConfig outputs;

  static ExperimentConfig parse(const json& doc);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

std::string join_index(const MultiIndex& k);
/// Shortest decimal that reads back to the same double.
std::string csv_double(double x);
/// Worker cap from KAM_SPECTRA_THREADS, else the hardware concurrency.
unsigned thread_cap();
int exit_code_for(Errc code);

struct RunOptions {
  bool write_files = true;
  bool oracle = true;
  bool drift = true;
  bool echo_trace = false;  // per-step line on stderr
};

struct RunOutcome {
  int exit_code = kOk;
  std::string message;
  json report;  // includes a "timing" key that is not part of the reproducible payload
};

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Copy of the report without the "timing" key.
json stable_payload(const json& report);

json scan_report(const ExperimentConfig& cfg);
json constants_report(const ExperimentConfig& cfg);
json oracle_report(const ExperimentConfig& cfg);

struct SweepRow {
  std::string param;
  bool converged = false;
  int steps = 0;
  double residual = 0.0;
  double diophantine_margin = 0.0;
  double fitted_rate = 0.0;
  int exit_code = kOk;
  std::string error;
};

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, unsigned threads);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace kamspec::app
