#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "experiment.hpp"

using namespace kamspec;
using namespace kamspec::app;

namespace {

const std::string kBundled = std::string(KAMSPEC_SOURCE_DIR) + "/configs/maryland.json";

json bundled_doc() {
  std::ifstream f(kBundled);
  return json::parse(f);
}

RunOptions quiet() {
  RunOptions o;
  o.write_files = false;
  return o;
}

Errc config_code(const json& doc) {
  try {
    ExperimentConfig::parse(doc);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::size;
}

int count_lines(const std::string& path) {
  std::ifstream f(path);
  int n = 0;
  for (std::string line; std::getline(f, line);) ++n;
  return n;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("bundled config parses") {
    const auto cfg = ExperimentConfig::load(kBundled);
    CHECK(cfg.model.omega.size() == 1);
    CHECK(cfg.model.transform.kind == Transform::tan_pi);
    CHECK_FALSE(cfg.model.c.has_value());
    CHECK(cfg.perturbation.kind == PerturbationKind::laplacian);
    CHECK(cfg.perturbation.alpha == 2.0);
    CHECK(cfg.run.radius == 40);
    CHECK(*cfg.run.interior_buffer == 20);
    CHECK(*cfg.run.epsilon == 1e-3);
  }

  TEST_CASE("config validation") {
    json d = bundled_doc();
    d["model"].erase("omega");
    CHECK(config_code(d) == Errc::config);

    const std::map<std::string, json> bad_run{{"convergence_tol", 0.0}, {"prune_floor", -1.0},
                                              {"series_tol", 0.0},      {"radius", 0},
                                              {"interior_buffer", 50},  {"mode", "fast"},
                                              {"shape", "star"},        {"epsilon", "x"}};
    for (const auto& [key, value] : bad_run) {
      CAPTURE(key);
      json e = bundled_doc();
      e["run"][key] = value;
      CHECK(config_code(e) == Errc::config);
    }
    json t = bundled_doc();
    t["model"]["transform"] = "exp";
    CHECK(config_code(t) == Errc::config);
    json k = bundled_doc();
    k["perturbation"]["kind"] = "random";
    CHECK(config_code(k) == Errc::config);
    json dim = bundled_doc();
    dim["model"]["dimension"] = 2;
    CHECK(config_code(dim) == Errc::config);
    json om = bundled_doc();
    om["run"]["omega_list"] = json::array({json::array({0.5, 0.25})});
    CHECK(config_code(om) == Errc::config);
    json prof = bundled_doc();
    prof["perturbation"] = {{"kind", "profile"}, {"alpha", 1.0}, {"profile", json::array()}};
    CHECK(config_code(prof) == Errc::config);
    CHECK(config_code(json::array()) == Errc::config);
  }

  TEST_CASE("bundled run converges and matches the oracle") {
    const auto r = run_experiment(ExperimentConfig::load(kBundled), quiet());
    REQUIRE(r.exit_code == kOk);
    const json& rep = r.report;
    CHECK(rep["schema"] == "kam-spectra/1");
    CHECK(rep["result"]["converged"].get<bool>());
    CHECK(rep["match"]["performed"].get<bool>());
    CHECK(rep["match"]["max_delta"].get<double>() <= 1e-8);
    CHECK(rep["diophantine"]["violations"] == 0);
    CHECK(rep["localization"]["violations"] == 0);
    CHECK(rep["drift"]["performed"].get<bool>());
    for (const char* key : {"c", "gamma", "d", "alpha", "sigma", "phi_inf", "phi_30", "xi", "A", "V_alpha_norm",
                            "eps_star"}) {
      CHECK(rep["constants"].contains(key));
    }
    const json& k = rep["constants"];
    CHECK(k["eps_star"].get<double>() ==
          doctest::Approx(k["xi"].get<double>() / (4.0 * k["c"].get<double>() * k["V_alpha_norm"].get<double>()))
              .epsilon(1e-14));
    CHECK(rep.contains("timing"));
    CHECK_FALSE(stable_payload(rep).contains("timing"));
  }

  TEST_CASE("reports are reproducible apart from timing") {
    const auto cfg = ExperimentConfig::load(kBundled);
    const auto a = run_experiment(cfg, quiet());
    const auto b = run_experiment(cfg, quiet());
    CHECK(stable_payload(a.report).dump() == stable_payload(b.report).dump());
  }

  TEST_CASE("rigorous mode stops before iterating") {
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.mode = KamMode::rigorous;
    const auto r = run_experiment(cfg, quiet());
    CHECK(r.exit_code == kRigorViolation);
    CHECK_FALSE(r.report.contains("ledger"));
    CHECK_FALSE(r.report.contains("result"));
  }

  TEST_CASE("zero coupling reproduces the unperturbed spectrum") {
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.epsilon = 0.0;
    cfg.run.radius = 10;
    cfg.run.interior_buffer = 3;
    const auto r = run_experiment(cfg, quiet());
    REQUIRE(r.exit_code == kOk);
    CHECK(r.report["result"]["steps"] == 0);
    CHECK(r.report["unitarity"]["max_offdiag_gram"] == 0.0);
    for (const auto& s : r.report["localization"]["sites"]) CHECK(s["margin"].get<double>() == 1.0);
    CHECK(r.report["match"]["max_delta"].get<double>() == 0.0);
  }

  TEST_CASE("a collapsing spectrum exits as a numerical failure") {
    json d = {{"model", {{"omega", {1.0}}, {"transform", "identity"}, {"c", 1.0}}},
              {"perturbation", {{"kind", "explicit"}, {"alpha", 1.0}, {"hermitian", true}, {"entries", json::array()}}},
              {"run", {{"epsilon", 1.0}, {"radius", 4}, {"drift", false}}}};
    for (int n = -4; n <= 4; ++n) {
      d["perturbation"]["entries"].push_back({{"n", {n}}, {"k", {0}}, {"value", -n}});
      d["perturbation"]["entries"].push_back({{"n", {n}}, {"k", {1}}, {"value", 0.5}});
      d["perturbation"]["entries"].push_back({{"n", {n}}, {"k", {-1}}, {"value", 0.5}});
    }
    const auto r = run_experiment(ExperimentConfig::parse(d), quiet());
    CHECK(r.exit_code == kNumerical);
    CHECK(r.report.contains("ledger"));
    CHECK(r.report.contains("error"));
  }

  TEST_CASE("artifacts on disk") {
    const auto dir = std::filesystem::temp_directory_path() / "kam_spectra_test";
    std::filesystem::create_directories(dir);
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.radius = 12;
    cfg.run.interior_buffer = 4;
    cfg.outputs.report = (dir / "report.json").string();
    cfg.outputs.eigenvalues_csv = (dir / "eigenvalues.csv").string();
    cfg.outputs.vectors_csv = (dir / "vectors.csv").string();
    cfg.outputs.ledger_jsonl = (dir / "ledger.jsonl").string();
    cfg.outputs.trace = true;
    const auto r = run_experiment(cfg);
    REQUIRE(r.exit_code == kOk);
    std::ifstream rf(cfg.outputs.report);
    const json disk = json::parse(rf);
    CHECK(stable_payload(disk) == stable_payload(r.report));
    CHECK(count_lines(cfg.outputs.eigenvalues_csv) == 1 + 25);
    CHECK(count_lines(cfg.outputs.ledger_jsonl) == r.report["result"]["steps"].get<int>());
    std::ifstream ef(cfg.outputs.eigenvalues_csv);
    std::string header, first;
    std::getline(ef, header);
    std::getline(ef, first);
    CHECK(header == "n,lambda,lambda_eps,lambda_eps_imag,theta");
    CHECK(first.rfind("-12,", 0) == 0);
    CHECK(count_lines(cfg.outputs.vectors_csv) > 1);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("epsilon sweep") {
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.epsilon_list = {0.0, 1e-4, 1e-3, 1e-2};
    const auto one = sweep(cfg, 1);
    const auto three = sweep(cfg, 3);
    CHECK(sweep_csv(one) == sweep_csv(three));
    REQUIRE(one.size() == 4);
    CHECK(one[0].param == "0");
    CHECK(one[0].residual == 0.0);
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(one[i].converged);
      CHECK(one[i].exit_code == kOk);
      for (std::size_t j = 0; j < i; ++j) {
        if (one[j].steps == one[i].steps) CHECK(one[j].residual <= one[i].residual);
      }
    }
  }

  TEST_CASE("frequency sweep over quadratic irrationals") {
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.omega_list = {{(std::sqrt(5.0) - 1.0) / 2.0},
                          {std::sqrt(2.0) - 1.0},
                          {std::sqrt(3.0) - 1.0},
                          {(std::sqrt(13.0) - 3.0) / 2.0},
                          {std::sqrt(5.0) - 2.0}};
    const auto rows = sweep(cfg, thread_cap());
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
      CAPTURE(r.param);
      CHECK(r.converged);
      CHECK(r.error.empty());
    }
  }

  TEST_CASE("sweep without a list is a config error") {
    const auto cfg = ExperimentConfig::load(kBundled);
    try {
      sweep(cfg, 1);
      FAIL("no error raised");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
    }
  }

  TEST_CASE("csv formatting") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) {
      const std::string s = csv_double(x);
      CHECK(std::stod(s) == x);
    }
    CHECK(csv_double(0.1) == "0.1");
    CHECK(csv_double(1e-4) == "1e-04");
    CHECK(join_index(MultiIndex{1, -2}) == "1;-2");
    const std::string csv = sweep_csv({SweepRow{"a", false, 0, 0.0, 0.0, 0.0, 4, "x, \"y\""}});
    CHECK(csv.find("\"x, \"\"y\"\"\"") != std::string::npos);
  }

  TEST_CASE("thread cap") {
    setenv("KAM_SPECTRA_THREADS", "1", 1);
    CHECK(thread_cap() == 1);
    unsetenv("KAM_SPECTRA_THREADS");
    CHECK(thread_cap() >= 1);
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code_for(Errc::config) == 2);
    CHECK(exit_code_for(Errc::profile) == 2);
    CHECK(exit_code_for(Errc::rigor_violation) == 3);
    CHECK(exit_code_for(Errc::divergence) == 4);
    CHECK(exit_code_for(Errc::near_degeneracy) == 4);
  }

  TEST_CASE("scan and constants reports") {
    auto cfg = ExperimentConfig::load(kBundled);
    cfg.run.radius = 20;
    cfg.run.interior_buffer.reset();
    const json s = scan_report(cfg);
    CHECK(s["certified"]["c"].get<double>() >= 1.0);
    CHECK(s["A4"]["norm"].get<double>() == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    const json c = constants_report(cfg);
    CHECK(c["constants"]["c"].get<double>() == s["certified"]["c"].get<double>());
    CHECK_FALSE(c["epsilon_within_eps_star"].get<bool>());
    cfg.run.radius = 5;
    const json o = oracle_report(cfg);
    CHECK(o["eigenvalues"].size() == 11);
  }
}
