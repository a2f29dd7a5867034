#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "kamspec/constants.hpp"
#include "kamspec/oracle.hpp"

namespace kamspec::app {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::config, what); }

MultiIndex read_index(const json& j) {
  if (j.is_string()) return MultiIndex::parse(j.get<std::string>());
  if (j.is_number_integer()) return MultiIndex{j.get<int>()};
  if (!j.is_array()) config_error("index must be an array of integers or a string");
  std::vector<int> c;
  for (const auto& x : j) c.push_back(x.get<int>());
  return MultiIndex(std::span<const int>(c));
}

Complex read_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  config_error("complex value must be a number or [re, im]");
}

std::vector<double> read_doubles(const json& j, const char* what) {
  if (!j.is_array()) config_error(std::string(what) + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

ProfileExpr read_expr(const json& t) {
  ProfileExpr e;
  e.kind = ProfileExpr::parse_kind(t.value("kind", std::string("polynomial")));
  if (t.contains("coeffs")) e.coeffs = read_doubles(t["coeffs"], "coeffs");
  if (t.contains("denom")) e.denom = read_doubles(t["denom"], "denom");
  e.frequency = t.value("frequency", 1.0);
  e.phase = t.value("phase", 0.0);
  if (t.contains("amplitude")) e.amplitude = read_complex(t["amplitude"]);
  return e;
}

WindowShape read_shape(const std::string& s) {
  if (s == "box") return WindowShape::box;
  if (s == "ball") return WindowShape::ball;
  config_error("unknown window shape '" + s + "'");
}

json assumption_json(const AssumptionReport& r) {
  json w = json::array();
  for (const auto& k : r.worst_witness) w.push_back(join_index(k));
  return {{"id", to_string(r.id)},
          {"worst_constant", r.worst_constant},
          {"witness", w},
          {"declared_c", r.declared_c},
          {"passed", r.passed}};
}

json constants_json(const KamConstants& k) {
  const auto xs = verify_xi_system(k.c, k.gamma, k.d, k.sigma, k.xi);
  return {{"c", k.c},
          {"gamma", k.gamma},
          {"d", k.d},
          {"alpha", k.alpha},
          {"sigma", k.sigma},
          {"phi_inf", k.phi_inf},
          {"phi_30", phi_sequence(30, k.c, k.gamma, k.d, k.sigma)},
          {"xi", k.xi},
          {"A", k.A_const},
          {"V_alpha_norm", k.V_alpha_norm},
          {"eps_star", k.eps_star},
          {"xi_system", {{"first", xs.first}, {"second", xs.second}, {"third", xs.third}, {"s", xs.s}}}};
}

json step_json(const StepRecord& s) {
  return {{"ell", s.ell},
          {"eps_ell", s.eps_ell},
          {"alpha_ell", s.alpha_ell},
          {"sigma_ell", s.sigma_ell},
          {"norm_P", s.norm_P},
          {"norm_P_next", s.norm_P_next},
          {"norm_W_minus_I", s.norm_W_minus_I},
          {"W_bound", s.W_bound},
          {"W_bound_ok", s.W_bound_ok},
          {"norm_Winv_minus_I", s.norm_Winv_minus_I},
          {"homological_residual", s.homological_residual},
          {"residual_scale", s.residual_scale},
          {"correction_t_norm", s.correction_t_norm},
          {"sum_norm_P", s.sum_norm_P},
          {"norm_U_increment", s.norm_U_increment},
          {"norm_Uinv_increment", s.norm_Uinv_increment},
          {"log_bound_B", s.log_bound_B},
          {"log_bound_B_next", s.log_bound_B_next},
          {"log_bound_CD", s.log_bound_CD},
          {"condA", s.condA},
          {"condB", s.condB},
          {"condC", s.condC},
          {"condD", s.condD},
          {"neumann_precondition", s.neumann_precondition},
          {"neumann_terms", s.neumann_terms}};
}

json ledger_json(const std::vector<StepRecord>& ledger) {
  json out = json::array();
  for (const auto& s : ledger) out.push_back(step_json(s));
  return out;
}

json step_times(const std::vector<StepRecord>& ledger) {
  json out = json::array();
  for (const auto& s : ledger) out.push_back(s.wall_time_ms);
  return out;
}

Window make_window(const ExperimentConfig& cfg, int radius) {
  const int d = static_cast<int>(cfg.model.omega.size());
  std::optional<int> interior;
  if (cfg.run.interior_buffer) interior = std::max(0, radius - *cfg.run.interior_buffer);
  return Window(d, radius, cfg.run.shape, interior);
}

struct BuiltModel {
  SpectrumModel model;
  std::optional<CertifiedConstant> cert;
};

BuiltModel make_model(const ExperimentConfig& cfg, const Window& w) {
  SpectrumModel base(cfg.model.omega, cfg.model.transform, cfg.model.c.value_or(1.0), cfg.model.gamma);
  if (cfg.model.c) return {base, std::nullopt};
  auto cert = certify_constant(base, w, cfg.model.scan_kmax, cfg.model.scan_jmax, cfg.model.scan_safety);
  return {base.with_constants(cert.c, cfg.model.gamma), std::move(cert)};
}

json scan_json(const CertifiedConstant& cert) {
  return {{"c", cert.c}, {"A1", assumption_json(cert.a1)}, {"A2", assumption_json(cert.a2)},
          {"A3", assumption_json(cert.a3)}};
}

json model_json(const ExperimentConfig& cfg) {
  json m = {{"omega", cfg.model.omega},
            {"transform", to_string(cfg.model.transform.kind)},
            {"beta", cfg.model.transform.beta},
            {"gamma", cfg.model.gamma}};
  m["c"] = cfg.model.c ? json(*cfg.model.c) : json("scan");
  return m;
}

json run_json(const RunConfig& r) {
  json j = {{"radius", r.radius},
            {"shape", r.shape == WindowShape::box ? "box" : "ball"},
            {"mode", to_string(r.mode)},
            {"convergence_tol", r.convergence_tol},
            {"absolute_tol", r.absolute_tol},
            {"max_steps", r.max_steps},
            {"prune_floor", r.prune_floor},
            {"series_tol", r.series_tol},
            {"series_max_terms", r.series_max_terms},
            {"oracle", r.oracle},
            {"drift", r.drift},
            {"diophantine_kmax", r.diophantine_kmax}};
  if (r.epsilon) j["epsilon"] = *r.epsilon;
  if (r.interior_buffer) j["interior_buffer"] = *r.interior_buffer;
  return j;
}

KamOptions kam_options(const RunConfig& r) {
  KamOptions o;
  o.mode = r.mode;
  o.convergence_tol = r.convergence_tol;
  o.absolute_tol = r.absolute_tol;
  o.max_steps = r.max_steps;
  o.prune_floor = r.prune_floor;
  o.series_tol = r.series_tol;
  o.series_max_terms = r.series_max_terms;
  return o;
}

Eigen::MatrixXcd hamiltonian(const LatticePtr& lat, const BandOperator& v, double eps) {
  Eigen::MatrixXcd h = to_dense(v) * eps;
  for (std::size_t p = 0; p < lat->size(); ++p) h(Eigen::Index(p), Eigen::Index(p)) += lat->eigenvalue(p);
  return h;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::config, "cannot write '" + path + "'");
  f << text;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

constexpr std::size_t kOracleMaxSide = 3000;
constexpr std::size_t kDriftMaxSize = 5000;

}  // namespace

std::string join_index(const MultiIndex& k) {
  std::string s;
  for (int i = 0; i < k.dim(); ++i) {
    if (i) s += ';';
    s += std::to_string(k[i]);
  }
  return s;
}

std::string csv_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

unsigned thread_cap() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KAM_SPECTRA_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::profile:
    case Errc::invalid_window:
    case Errc::invalid_offset:
      return kConfigError;
    case Errc::rigor_violation:
      return kRigorViolation;
    default:
      return kNumerical;
  }
}

ExperimentConfig ExperimentConfig::parse(const json& doc) {
  ExperimentConfig cfg;
  try {
    if (!doc.is_object()) config_error("config must be a JSON object");
    if (!doc.contains("model")) config_error("missing 'model' block");
    const json& m = doc["model"];
    if (!m.contains("omega")) config_error("model.omega is required");
    cfg.model.omega = m["omega"].is_number() ? std::vector<double>{m["omega"].get<double>()}
                                             : read_doubles(m["omega"], "model.omega");
    if (m.contains("dimension") && m["dimension"].get<std::size_t>() != cfg.model.omega.size()) {
      config_error("model.dimension does not match the length of omega");
    }
    cfg.model.transform.kind = parse_transform(m.value("transform", std::string("identity")));
    cfg.model.transform.beta = m.value("beta", 0.0);
    cfg.model.gamma = m.value("gamma", 1.0);
    if (m.contains("c")) {
      if (m["c"].is_string()) {
        if (m["c"].get<std::string>() != "scan") config_error("model.c must be a number or \"scan\"");
      } else {
        cfg.model.c = m["c"].get<double>();
      }
    }
    if (m.contains("scan_kmax")) cfg.model.scan_kmax = m["scan_kmax"].get<int>();
    if (m.contains("scan_jmax")) cfg.model.scan_jmax = m["scan_jmax"].get<int>();
    cfg.model.scan_safety = m.value("scan_safety", 1.05);

    const json p = doc.value("perturbation", json::object());
    const std::string kind = p.value("kind", std::string("laplacian"));
    auto& spec = cfg.perturbation;
    spec.alpha = p.value("alpha", 1.0);
    spec.hermitian = p.value("hermitian", true);
    if (kind == "laplacian") {
      spec.kind = PerturbationKind::laplacian;
    } else if (kind == "profile") {
      spec.kind = PerturbationKind::profile;
      for (const auto& t : p.value("profile", json::array())) {
        if (!t.contains("k")) config_error("profile term needs an offset 'k'");
        spec.profile.push_back({read_index(t["k"]), read_expr(t).compile()});
      }
      if (spec.profile.empty()) config_error("profile perturbation without terms");
    } else if (kind == "explicit") {
      spec.kind = PerturbationKind::explicit_entries;
      for (const auto& e : p.value("entries", json::array())) {
        spec.entries.push_back({read_index(e.at("n")), read_index(e.at("k")), read_complex(e.at("value"))});
      }
    } else {
      config_error("unknown perturbation kind '" + kind + "'");
    }

    const json r = doc.value("run", json::object());
    if (r.contains("epsilon")) cfg.run.epsilon = r["epsilon"].get<double>();
    if (r.contains("epsilon_list")) cfg.run.epsilon_list = read_doubles(r["epsilon_list"], "run.epsilon_list");
    if (r.contains("omega_list")) {
      for (const auto& om : r["omega_list"]) {
        cfg.run.omega_list.push_back(om.is_number() ? std::vector<double>{om.get<double>()}
                                                    : read_doubles(om, "run.omega_list entry"));
      }
    }
    cfg.run.radius = r.value("radius", 20);
    if (r.contains("interior_buffer")) cfg.run.interior_buffer = r["interior_buffer"].get<int>();
    cfg.run.shape = read_shape(r.value("shape", std::string("box")));
    cfg.run.mode = parse_mode(r.value("mode", std::string("empirical")));
    cfg.run.convergence_tol = r.value("convergence_tol", 1e-14);
    cfg.run.absolute_tol = r.value("absolute_tol", 0.0);
    cfg.run.max_steps = r.value("max_steps", 30);
    cfg.run.prune_floor = r.value("prune_floor", 1e-16);
    cfg.run.series_tol = r.value("series_tol", 1e-15);
    cfg.run.series_max_terms = r.value("series_max_terms", 200);
    cfg.run.oracle = r.value("oracle", true);
    cfg.run.drift = r.value("drift", true);
    cfg.run.diophantine_kmax = r.value("diophantine_kmax", 15);

    const json o = doc.value("outputs", json::object());
    cfg.outputs.report = o.value("report", std::string());
    cfg.outputs.eigenvalues_csv = o.value("eigenvalues_csv", std::string());
    cfg.outputs.vectors_csv = o.value("vectors_csv", std::string());
    cfg.outputs.ledger_jsonl = o.value("ledger_jsonl", std::string());
    cfg.outputs.sweep_csv = o.value("sweep_csv", std::string());
    cfg.outputs.trace = o.value("trace", false);
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    config_error(e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) config_error("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(f, nullptr, true, true);
  } catch (const json::exception& e) {
    config_error(path + ": " + e.what());
  }
  return parse(doc);
}

void ExperimentConfig::validate() const {
  const std::size_t d = model.omega.size();
  if (d == 0) config_error("model.omega is empty");
  if (!(model.gamma >= 0.0)) config_error("model.gamma must be nonnegative");
  if (model.c && !(*model.c > 0.0)) config_error("model.c must be positive");
  if (!(model.scan_safety >= 1.0)) config_error("model.scan_safety must be at least 1");
  if (!(perturbation.alpha > 0.0)) config_error("perturbation.alpha must be positive");
  if (run.radius < 1) config_error("run.radius must be at least 1");
  if (run.interior_buffer && (*run.interior_buffer < 0 || *run.interior_buffer > run.radius)) {
    config_error("run.interior_buffer must lie in [0, radius]");
  }
  if (!(run.convergence_tol > 0.0)) config_error("run.convergence_tol must be positive");
  if (!(run.absolute_tol >= 0.0)) config_error("run.absolute_tol must be nonnegative");
  if (!(run.prune_floor > 0.0)) config_error("run.prune_floor must be positive");
  if (!(run.series_tol > 0.0)) config_error("run.series_tol must be positive");
  if (run.max_steps < 0 || run.series_max_terms < 1) config_error("run step limits must be positive");
  if (run.diophantine_kmax < 0) config_error("run.diophantine_kmax must be nonnegative");
  if (run.epsilon && !std::isfinite(*run.epsilon)) config_error("run.epsilon must be finite");
  for (double e : run.epsilon_list) {
    if (!std::isfinite(e)) config_error("run.epsilon_list entries must be finite");
  }
  for (const auto& om : run.omega_list) {
    if (om.size() != d) config_error("run.omega_list entry has the wrong dimension");
  }
  for (const auto& t : perturbation.profile) {
    if (static_cast<std::size_t>(t.k.dim()) != d) config_error("profile offset has the wrong dimension");
  }
  for (const auto& e : perturbation.entries) {
    if (static_cast<std::size_t>(e.n.dim()) != d || static_cast<std::size_t>(e.k.dim()) != d) {
      config_error("explicit entry has the wrong dimension");
    }
  }
}

json stable_payload(const json& report) {
  json out = report;
  out.erase("timing");
  return out;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto t_total = Clock::now();
  RunOutcome out;
  json& rep = out.report;
  json timing = json::object();
  rep["schema"] = "kam-spectra/1";
  rep["model"] = model_json(cfg);
  rep["run"] = run_json(cfg.run);
  const bool hermitian = cfg.perturbation.hermitian;
  const bool files = opts.write_files;

  const auto finish = [&](int code, const std::string& msg) {
    out.exit_code = code;
    out.message = msg;
    rep["status"] = code == kOk ? "ok" : msg;
    rep["exit_code"] = code;
    timing["total_ms"] = ms_since(t_total);
    rep["timing"] = timing;
    if (files && !cfg.outputs.report.empty()) {
      try {
        write_text(cfg.outputs.report, rep.dump(2) + "\n");
      } catch (const Error& e) {
        if (out.exit_code == kOk) {
          out.exit_code = kConfigError;
          out.message = e.what();
        }
      }
    }
    return out;
  };

  try {
    if (!cfg.run.epsilon) config_error("run.epsilon is required");
    const double eps = *cfg.run.epsilon;
    const Window window = make_window(cfg, cfg.run.radius);
    rep["window"] = {{"dim", window.dim()},
                     {"radius", window.radius()},
                     {"interior_radius", window.interior_radius()},
                     {"size", window.size()}};

    auto t0 = Clock::now();
    const BuiltModel built = make_model(cfg, window);
    if (built.cert) rep["scan"] = scan_json(*built.cert);
    timing["scan_ms"] = ms_since(t0);

    const SpectrumModel& model = built.model;
    const auto lat = SpectralLattice::create(model, window);
    const BandOperator V = build_perturbation(cfg.perturbation, lat);
    const double alpha = cfg.perturbation.alpha;
    const A4Report a4 = verify_assumption_A4(V, alpha);
    rep["A4"] = {{"norm", a4.norm}, {"alpha", a4.alpha}, {"kmax", a4.kmax}};
    if (hermitian) {
      const auto hc = hermitian_check(V);
      rep["hermitian_check"] = {{"hermitian", hc.hermitian}, {"worst_violation", hc.worst_violation}};
    }
    const KamSetup setup = KamSetup::make(model.c(), model.gamma(), window.dim(), alpha, a4.norm);
    rep["constants"] = constants_json(setup.constants);

    KamOptions kopts = kam_options(cfg.run);
    std::ofstream trace_file;
    if (files && cfg.outputs.trace && !cfg.outputs.ledger_jsonl.empty()) {
      trace_file.open(cfg.outputs.ledger_jsonl);
      if (!trace_file) config_error("cannot write '" + cfg.outputs.ledger_jsonl + "'");
    }
    if (trace_file.is_open() || opts.echo_trace) {
      kopts.trace = [&](const StepRecord& s) {
        if (trace_file.is_open()) {
          json line = step_json(s);
          line["wall_time_ms"] = s.wall_time_ms;
          trace_file << line.dump() << '\n';
          trace_file.flush();
        }
        if (opts.echo_trace) {
          std::cerr << "step " << s.ell << "  ||P|| " << s.norm_P << " -> " << s.norm_P_next << "  ||W-I|| "
                    << s.norm_W_minus_I << "  A" << s.condA << " B" << s.condB << " C" << s.condC << " D" << s.condD
                    << "  " << s.wall_time_ms << " ms\n";
        }
      };
    }

    t0 = Clock::now();
    std::optional<KamResult> result;
    try {
      result.emplace(run_kam(lat, V, eps, setup, kopts));
    } catch (const KamError& e) {
      rep["ledger"] = ledger_json(e.ledger());
      timing["step_ms"] = step_times(e.ledger());
      rep["error"] = e.what();
      return finish(exit_code_for(e.code()), e.what());
    }
    timing["kam_ms"] = ms_since(t0);
    timing["step_ms"] = step_times(result->ledger);
    rep["ledger"] = ledger_json(result->ledger);
    rep["result"] = {{"converged", result->converged},
                     {"steps", result->steps},
                     {"residual", result->residual},
                     {"mode", to_string(result->mode)},
                     {"eps", result->eps}};
    if (!result->converged) {
      rep["error"] = "no convergence within max_steps";
      return finish(kNumerical, "divergence: no convergence within " + std::to_string(cfg.run.max_steps) + " steps");
    }

    const Eigenvectors ev = unitarize(*result, alpha, hermitian);
    rep["unitarity"] = {{"orthonormalized", ev.orthonormalized}, {"max_offdiag_gram", ev.max_offdiag_gram}};

    const auto dio = diophantine_report(result->lambda_eps, model.c(), model.gamma(), cfg.run.diophantine_kmax);
    json rows = json::array();
    for (const auto& r : dio.rows) {
      rows.push_back({{"k", join_index(r.k)}, {"worst", r.worst}, {"bound", r.bound}, {"passed", r.passed}});
    }
    rep["diophantine"] = {{"kmax", cfg.run.diophantine_kmax},
                          {"violations", dio.violations},
                          {"worst_margin", dio.worst_margin},
                          {"rows", rows}};

    const double sigma = sigma_of(alpha);
    const auto loc = localization_report(*result, ev, alpha, sigma);
    json sites = json::array();
    for (std::size_t i = 0; i < loc.sites.size(); ++i) {
      sites.push_back({{"n", join_index(loc.sites[i])},
                       {"C", loc.C[i]},
                       {"margin", loc.margin[i]},
                       {"fitted_rate", loc.fitted_rate[i]}});
    }
    rep["localization"] = {{"rate", alpha - sigma},
                           {"violations", loc.violations},
                           {"worst_margin", loc.worst_margin},
                           {"min_fitted_rate", loc.min_fitted_rate},
                           {"sites", sites}};

    // oracle cross-check on the interior
    std::vector<std::optional<double>> theta(window.size());
    json match = {{"performed", false}};
    t0 = Clock::now();
    if (opts.oracle && cfg.run.oracle) {
      if (!hermitian) {
        match["reason"] = "non-hermitian perturbation";
      } else if (window.size() > kOracleMaxSide) {
        match["reason"] = "window too large for the dense oracle";
      } else {
        const Eigen::MatrixXcd H = hamiltonian(lat, V, eps);
        if (H.imag().cwiseAbs().maxCoeff() > 0.0) {
          match["reason"] = "complex hermitian matrices are not handled by the dense oracle";
        } else {
          try {
            const auto orc = dense_symmetric_eig(H.real());
            std::vector<double> lam(window.size());
            for (std::size_t p = 0; p < lam.size(); ++p) lam[p] = result->lambda_eps[p].real();
            const auto m = match_spectra(lam, ev.vectors, orc, window.interior_positions());
            for (const auto& s : m.sites) theta[s.pos] = s.theta;
            match = {{"performed", true},
                     {"sites", m.sites.size()},
                     {"sweeps", orc.sweeps},
                     {"max_delta", m.max_delta},
                     {"max_overlap_deficit", m.max_overlap_deficit}};
          } catch (const Error& e) {
            match["reason"] = e.what();
          }
        }
      }
    }
    timing["oracle_ms"] = ms_since(t0);
    rep["match"] = match;

    // interior eigenvalues at R against 2R
    json drift = {{"performed", false}};
    t0 = Clock::now();
    if (opts.drift && cfg.run.drift) {
      const Window big = make_window(cfg, 2 * cfg.run.radius);
      if (big.size() > kDriftMaxSize) {
        drift["reason"] = "doubled window too large";
      } else {
        try {
          const auto lat2 = SpectralLattice::create(model, big);
          const BandOperator V2 = build_perturbation(cfg.perturbation, lat2);
          KamOptions o2 = kam_options(cfg.run);
          o2.mode = KamMode::empirical;
          const KamResult r2 = run_kam(lat2, V2, eps, setup, o2);
          double worst = 0.0;
          for (std::size_t p : window.interior_positions()) {
            const auto q = big.position(window.point(p));
            worst = std::max(worst, std::abs(result->lambda_eps[p] - r2.lambda_eps[static_cast<std::size_t>(q)]));
          }
          drift = {{"performed", true}, {"radius", big.radius()}, {"converged", r2.converged}, {"max_drift", worst}};
        } catch (const Error& e) {
          drift["reason"] = e.what();
        }
      }
    }
    timing["drift_ms"] = ms_since(t0);
    rep["drift"] = drift;

    if (files && !cfg.outputs.eigenvalues_csv.empty()) {
      std::string csv = "n,lambda,lambda_eps,lambda_eps_imag,theta\n";
      for (std::size_t p = 0; p < window.size(); ++p) {
        csv += join_index(window.point(p)) + ',' + csv_double(lat->eigenvalue(p)) + ',' +
               csv_double(result->lambda_eps[p].real()) + ',' + csv_double(result->lambda_eps[p].imag()) + ',' +
               (theta[p] ? csv_double(*theta[p]) : std::string()) + '\n';
      }
      write_text(cfg.outputs.eigenvalues_csv, csv);
    }
    if (files && !cfg.outputs.vectors_csv.empty()) {
      std::string csv = "n,j,re,im\n";
      for (std::size_t p : window.interior_positions()) {
        for (std::size_t j = 0; j < window.size(); ++j) {
          const Complex u = ev.vectors(Eigen::Index(j), Eigen::Index(p));
          if (u == Complex(0.0, 0.0)) continue;
          csv += join_index(window.point(p)) + ',' + join_index(window.point(j)) + ',' + csv_double(u.real()) + ',' +
                 csv_double(u.imag()) + '\n';
        }
      }
      write_text(cfg.outputs.vectors_csv, csv);
    }
    return finish(kOk, "ok");
  } catch (const Error& e) {
    rep["error"] = e.what();
    return finish(exit_code_for(e.code()), e.what());
  }
}

json scan_report(const ExperimentConfig& cfg) {
  const Window window = make_window(cfg, cfg.run.radius);
  SpectrumModel base(cfg.model.omega, cfg.model.transform, cfg.model.c.value_or(1.0), cfg.model.gamma);
  const auto cert = certify_constant(base, window, cfg.model.scan_kmax, cfg.model.scan_jmax, cfg.model.scan_safety);
  json rep = {{"schema", "kam-spectra/1"}, {"model", model_json(cfg)}, {"certified", scan_json(cert)}};
  rep["declared_c"] = cfg.model.c ? json(*cfg.model.c) : json(nullptr);
  const SpectrumModel model = cfg.model.c ? base : base.with_constants(cert.c, cfg.model.gamma);

  const auto dio = diophantine_scan(model.omega(), window, model.gamma(), model.periodic());
  rep["diophantine_scan"] = {{"C_est", dio.C_est}, {"witness", join_index(dio.witness)}};
  try {
    const auto h = check_h_conditions(model);
    json hj = {{"a", h.a},
               {"b", h.b},
               {"hprime_max_unit", h.hprime_max_unit},
               {"c_formula", h.c_formula},
               {"periodic_case", h.periodic_case}};
    hj["delta1"] = h.delta1 ? json(*h.delta1) : json(nullptr);
    rep["h_conditions"] = hj;
  } catch (const Error& e) {
    rep["h_conditions"] = {{"error", e.what()}};
  }
  const auto lat = SpectralLattice::create(model, window);
  const auto V = build_perturbation(cfg.perturbation, lat);
  const auto a4 = verify_assumption_A4(V, cfg.perturbation.alpha);
  json per = json::array();
  for (const auto& [k, v] : a4.per_offset) per.push_back({{"k", join_index(k)}, {"value", v}});
  rep["A4"] = {{"norm", a4.norm}, {"alpha", a4.alpha}, {"kmax", a4.kmax}, {"per_offset", per}};
  return rep;
}

json constants_report(const ExperimentConfig& cfg) {
  const Window window = make_window(cfg, cfg.run.radius);
  const BuiltModel built = make_model(cfg, window);
  const auto lat = SpectralLattice::create(built.model, window);
  const auto V = build_perturbation(cfg.perturbation, lat);
  const double alpha = cfg.perturbation.alpha;
  const KamConstants k =
      KamConstants::compute(built.model.c(), built.model.gamma(), window.dim(), alpha, alpha_norm(V, alpha));
  json rep = {{"schema", "kam-spectra/1"}, {"model", model_json(cfg)}, {"constants", constants_json(k)}};
  if (cfg.run.epsilon) rep["epsilon_within_eps_star"] = std::abs(*cfg.run.epsilon) <= k.eps_star;
  return rep;
}

json oracle_report(const ExperimentConfig& cfg) {
  if (!cfg.run.epsilon) config_error("run.epsilon is required");
  if (!cfg.perturbation.hermitian) config_error("the dense oracle needs a hermitian perturbation");
  const Window window = make_window(cfg, cfg.run.radius);
  const BuiltModel built = make_model(cfg, window);
  const auto lat = SpectralLattice::create(built.model, window);
  const auto V = build_perturbation(cfg.perturbation, lat);
  const Eigen::MatrixXcd H = hamiltonian(lat, V, *cfg.run.epsilon);
  if (H.imag().cwiseAbs().maxCoeff() > 0.0) config_error("the dense oracle handles real symmetric matrices only");
  const auto orc = dense_symmetric_eig(H.real());
  std::vector<double> values(orc.values.data(), orc.values.data() + orc.values.size());
  return {{"schema", "kam-spectra/1"}, {"model", model_json(cfg)}, {"sweeps", orc.sweeps}, {"eigenvalues", values}};
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, unsigned threads) {
  const bool by_eps = !cfg.run.epsilon_list.empty();
  const bool by_omega = !cfg.run.omega_list.empty();
  if (by_eps == by_omega) config_error("sweep needs exactly one nonempty list: run.epsilon_list or run.omega_list");
  const std::size_t n = by_eps ? cfg.run.epsilon_list.size() : cfg.run.omega_list.size();

  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      ExperimentConfig c = cfg;
      SweepRow& row = rows[i];
      if (by_eps) {
        c.run.epsilon = cfg.run.epsilon_list[i];
        row.param = csv_double(cfg.run.epsilon_list[i]);
      } else {
        c.model.omega = cfg.run.omega_list[i];
        if (!c.run.epsilon) c.run.epsilon = 0.0;
        for (std::size_t a = 0; a < c.model.omega.size(); ++a) {
          row.param += (a ? ";" : "") + csv_double(c.model.omega[a]);
        }
      }
      c.outputs = {};
      RunOptions ro;
      ro.write_files = false;
      ro.oracle = false;
      ro.drift = false;
      try {
        const RunOutcome r = run_experiment(c, ro);
        row.exit_code = r.exit_code;
        if (r.exit_code != kOk) row.error = r.message;
        const json& rep = r.report;
        if (rep.contains("result")) {
          row.converged = rep["result"]["converged"].get<bool>();
          row.steps = rep["result"]["steps"].get<int>();
          row.residual = rep["result"]["residual"].get<double>();
        }
        if (rep.contains("diophantine")) row.diophantine_margin = rep["diophantine"]["worst_margin"].get<double>();
        if (rep.contains("localization")) {
          const json& f = rep["localization"]["min_fitted_rate"];
          row.fitted_rate = f.is_null() ? std::numeric_limits<double>::infinity() : f.get<double>();
        }
      } catch (const std::exception& e) {
        row.exit_code = kNumerical;
        row.error = e.what();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream s;
  s << "param,converged,steps,residual,diophantine_worst_margin,fitted_rate,exit_code,error\n";
  for (const auto& r : rows) {
    s << csv_field(r.param) << ',' << (r.converged ? "true" : "false") << ',' << r.steps << ','
      << csv_double(r.residual) << ',' << csv_double(r.diophantine_margin) << ',' << csv_double(r.fitted_rate) << ','
      << r.exit_code << ',' << csv_field(r.error) << '\n';
  }
  return s.str();
}

}  // namespace kamspec::app
