#include "kamspec/kam.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace kamspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSlack = std::log1p(1e-12);

bool below_log_bound(double value, double log_bound) {
  return value == 0.0 || std::log(value) <= log_bound + kLogSlack;
}

TSequence diagonal_sequence(const BandOperator& a) {
  const MultiIndex zero = MultiIndex::zero(a.lattice()->dim());
  if (const TSequence* s = a.find(zero)) return *s;
  return TSequence::constant(a.lattice(), 0.0);
}

TSequence unperturbed(const LatticePtr& lattice) {
  return TSequence::from_function(lattice, [&](const MultiIndex& n) {
    return Complex(lattice->eigenvalue(static_cast<std::size_t>(lattice->window().position(n))), 0.0);
  });
}

}  // namespace

std::string to_string(KamMode m) { return m == KamMode::rigorous ? "rigorous" : "empirical"; }

KamMode parse_mode(const std::string& name) {
  if (name == "rigorous") return KamMode::rigorous;
  if (name == "empirical") return KamMode::empirical;
  throw Error(Errc::config, "unknown mode '" + name + "'");
}

KamSetup KamSetup::make(double c, double gamma, int d, double alpha, double V_alpha_norm) {
  KamSetup s;
  s.c = c;
  s.gamma = gamma;
  s.alpha = alpha;
  s.constants = KamConstants::compute(c, gamma, d, alpha, V_alpha_norm);
  return s;
}

KamState KamState::initial(const LatticePtr& lattice, const BandOperator& v, double eps) {
  return KamState{0,
                  eps,
                  unperturbed(lattice),
                  v.scaled(eps),
                  BandOperator::identity(lattice),
                  BandOperator::identity(lattice),
                  0.0,
                  {}};
}

HomologicalSolution solve_homological(const TSequence& T_diag, const BandOperator& P, std::optional<double> rigor_c) {
  const LatticePtr& lat = T_diag.lattice();
  const Window& w = lat->window();
  const TSequence T_next = T_diag + diagonal_sequence(P);
  const TSequence correction = T_next - unperturbed(lat);
  const double corr = t_norm(correction);
  if (rigor_c && corr > (1.0 + 1e-12) / (4.0 * *rigor_c)) {
    throw Error(Errc::rigor_violation, "cumulative diagonal correction " + std::to_string(corr) +
                                           " exceeds 1/(4c)");
  }

  HomologicalSolution sol{BandOperator::identity(lat), T_next, 0.0, 0.0, corr};
  for (const auto& [k, pk] : P.diagonals()) {
    if (k.is_zero()) continue;
    const TSequence inv = reciprocal_difference(lat, k, &correction);
    const TSequence wk = pointwise_product(pk, inv);
    sol.W.set_diagonal(k, wk);
    // Entry of [T^(l+1), W] + P - [P] at (m, m+k): -(T_{m+k} - T_m) W_k[m] + P_k[m]
    for (std::size_t p : pk.domain()) {
      const auto q = static_cast<std::size_t>(w.neighbor(p, k));
      const Complex gap = T_next[q] - T_next[p];
      sol.residual = std::max(sol.residual, std::abs(pk[p] - gap * wk[p]));
      sol.residual_scale = std::max(sol.residual_scale, std::abs(pk[p]));
    }
  }
  sol.W.set_alpha_hint(P.alpha_hint());
  return sol;
}

KamState kam_step(KamState state, const KamSetup& setup, const KamOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const LatticePtr& lat = state.T_diag.lattice();
  const int d = lat->dim();
  const bool rigorous = opts.mode == KamMode::rigorous;
  const KamConstants& K = setup.constants;
  const int ell = state.ell;

  StepRecord rec;
  rec.ell = ell;
  rec.eps_ell = ell == 0 ? state.eps : std::pow(std::abs(state.eps), std::ldexp(1.0, ell));
  const Schedule sch = schedule(setup.alpha, ell);
  const Schedule next = schedule(setup.alpha, ell + 1);
  rec.alpha_ell = sch.alpha_ell;
  rec.sigma_ell = sch.sigma_ell;
  const double a_mid = sch.alpha_ell - sch.sigma_ell;

  rec.norm_P = alpha_norm(state.P, sch.alpha_ell);
  rec.sum_norm_P = state.sum_norm_P + rec.norm_P;
  rec.condA = rec.sum_norm_P <= (1.0 + 1e-12) / (4.0 * setup.c);
  const double log_s = std::log(K.xi / (4.0 * setup.c));
  const double log_phi = log_phi_sequence(ell, setup.c, setup.gamma, d, K.sigma);
  rec.log_bound_B = std::ldexp(log_s + log_phi, ell);
  rec.condB = below_log_bound(rec.norm_P, rec.log_bound_B);

  HomologicalSolution sol = solve_homological(state.T_diag, state.P, rigorous ? std::optional<double>(setup.c)
                                                                               : std::nullopt);
  rec.homological_residual = sol.residual;
  rec.residual_scale = sol.residual_scale;
  rec.correction_t_norm = sol.correction_t_norm;

  const BandOperator I = BandOperator::identity(lat);
  const BandOperator W_minus_I = off_diagonal_part(sol.W);
  rec.norm_W_minus_I = alpha_norm(W_minus_I, a_mid);
  rec.W_bound = 12.0 * setup.c * setup.c * sup_poly_exp(setup.gamma, sch.sigma_ell) * rec.norm_P;
  rec.W_bound_ok = rec.norm_W_minus_I <= rec.W_bound * (1.0 + 1e-12);

  NeumannOptions nopts;
  nopts.series_tol = opts.series_tol;
  nopts.max_terms = opts.series_max_terms;
  nopts.enforce_precondition = false;
  nopts.prune_floor = opts.prune_floor;
  NeumannResult inv = neumann_series(sol.W, a_mid, sch.sigma_ell, nopts);
  rec.neumann_precondition = inv.precondition_met;
  rec.neumann_terms = inv.terms;
  if (rigorous && !inv.precondition_met) {
    throw Error(Errc::divergence, "||W - I|| violates the Neumann precondition at step " + std::to_string(ell));
  }
  const BandOperator Winv_minus_I = inv.inverse - I;
  rec.norm_Winv_minus_I = alpha_norm(Winv_minus_I, next.alpha_ell);

  const ComposeOptions copts{opts.prune_floor};
  const BandOperator P_off = off_diagonal_part(state.P);
  BandOperator P_next = compose(inv.inverse, compose(P_off, W_minus_I, a_mid, sch.sigma_ell, copts), a_mid,
                                sch.sigma_ell, copts);
  const BandOperator U_inc = compose(state.U, W_minus_I, a_mid, sch.sigma_ell, copts);
  const BandOperator Uinv_inc = compose(Winv_minus_I, state.U_inv, a_mid, sch.sigma_ell, copts);

  rec.norm_U_increment = alpha_norm(U_inc, next.alpha_ell + next.sigma_ell);
  rec.norm_Uinv_increment = alpha_norm(Uinv_inc, next.alpha_ell);
  rec.log_bound_CD = std::ldexp(log_s + std::log(K.phi_inf), ell);
  rec.condC = below_log_bound(rec.norm_U_increment, rec.log_bound_CD);
  rec.condD = below_log_bound(rec.norm_Uinv_increment, rec.log_bound_CD);

  rec.norm_P_next = alpha_norm(P_next, next.alpha_ell);
  rec.log_bound_B_next =
      std::ldexp(log_s + log_phi_sequence(ell + 1, setup.c, setup.gamma, d, K.sigma), ell + 1);
  rec.condB = rec.condB && below_log_bound(rec.norm_P_next, rec.log_bound_B_next);

  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (rigorous && !(rec.condA && rec.condB && rec.condC && rec.condD && rec.W_bound_ok)) {
    throw Error(Errc::rigor_violation, "step " + std::to_string(ell) + " breaks condition" +
                                           (rec.condA ? "" : " A") + (rec.condB ? "" : " B") +
                                           (rec.condC ? "" : " C") + (rec.condD ? "" : " D") +
                                           (rec.W_bound_ok ? "" : " W"));
  }

  P_next.set_alpha_hint(next.alpha_ell);
  KamState out{ell + 1,
               state.eps,
               sol.T_next,
               std::move(P_next),
               state.U + U_inc,
               state.U_inv + Uinv_inc,
               rec.sum_norm_P,
               std::move(state.ledger)};
  out.ledger.push_back(rec);
  if (opts.trace) opts.trace(rec);
  return out;
}

KamResult run_kam(const LatticePtr& lattice, const BandOperator& v, double eps, const KamSetup& setup,
                  const KamOptions& opts) {
  if (opts.mode == KamMode::rigorous && std::abs(eps) > setup.constants.eps_star * (1.0 + 1e-12)) {
    throw Error(Errc::rigor_violation, "|eps| = " + std::to_string(std::abs(eps)) + " exceeds eps* = " +
                                           std::to_string(setup.constants.eps_star));
  }
  KamState state = KamState::initial(lattice, v, eps);
  const double initial = alpha_norm(state.P, setup.alpha);
  const double tol = std::max(opts.convergence_tol * initial, opts.absolute_tol);

  bool converged = false;
  double residual = initial;
  for (;;) {
    residual = alpha_norm(state.P, schedule(setup.alpha, state.ell).alpha_ell);
    if (residual == 0.0 || residual < tol) {
      converged = true;
      break;
    }
    if (state.ell >= opts.max_steps) break;
    try {
      state = kam_step(std::move(state), setup, opts);
    } catch (const Error& e) {
      throw KamError(e, state.ledger);
    }
  }

  TSequence lambda = state.T_diag + diagonal_sequence(state.P);
  return KamResult{std::move(lambda), std::move(state.U), std::move(state.U_inv), converged, state.ell,
                   residual,          opts.mode,          eps,                    std::move(state.ledger)};
}

Eigenvectors unitarize(const KamResult& result, double alpha, bool hermitian) {
  const LatticePtr& lat = result.U.lattice();
  const Eigen::MatrixXcd U = to_dense(result.U);
  const double normU = alpha_norm(result.U, alpha - sigma_of(alpha));
  Eigenvectors ev;
  ev.vectors = U;
  ev.C.resize(static_cast<std::size_t>(U.cols()));
  for (Eigen::Index p = 0; p < U.cols(); ++p) {
    const double nrm = U.col(p).norm();
    if (nrm < lat->denom_floor()) {
      throw Error(Errc::degenerate_column,
                  "column " + lat->window().point(static_cast<std::size_t>(p)).to_string() + " has vanishing norm");
    }
    ev.vectors.col(p) /= nrm;
    ev.C[static_cast<std::size_t>(p)] = normU / nrm;
  }
  if (!hermitian) return ev;

  ev.orthonormalized = true;
  const auto interior = lat->window().interior_positions();
  for (std::size_t a = 0; a < interior.size(); ++a) {
    for (std::size_t b = a + 1; b < interior.size(); ++b) {
      const Complex g = ev.vectors.col(static_cast<Eigen::Index>(interior[a]))
                            .dot(ev.vectors.col(static_cast<Eigen::Index>(interior[b])));
      ev.max_offdiag_gram = std::max(ev.max_offdiag_gram, std::abs(g));
    }
  }
  return ev;
}

DiophantineReport diophantine_report(const TSequence& lambda_eps, double c, double gamma, int kmax) {
  const Window& w = lambda_eps.window();
  DiophantineReport rep;
  if (kmax <= 0) return rep;
  const Window offsets(w.dim(), kmax, WindowShape::ball);
  const auto interior = w.interior_positions();
  for (const auto& k : offsets.points()) {
    if (k.is_zero()) continue;
    DiophantineReport::Row row{k, 0.0, 12.0 * c * c * std::pow(static_cast<double>(l1_norm(k)), 2.0 * gamma), true};
    bool any = false;
    for (std::size_t p : interior) {
      const auto q = w.neighbor(p, k);
      if (q < 0) continue;
      any = true;
      const double gap = std::abs(lambda_eps[static_cast<std::size_t>(q)] - lambda_eps[p]);
      row.worst = std::max(row.worst, gap > 0.0 ? 1.0 / gap : kInf);
    }
    if (!any) continue;
    row.passed = row.worst <= row.bound;
    if (!row.passed) ++rep.violations;
    rep.worst_margin = std::max(rep.worst_margin, row.worst / row.bound);
    rep.rows.push_back(row);
  }
  return rep;
}

LocalizationReport localization_report(const KamResult& result, const Eigenvectors& ev, double alpha, double sigma) {
  const Window& w = result.U.window();
  const double rate = alpha - sigma;
  LocalizationReport rep;
  rep.min_fitted_rate = kInf;
  for (std::size_t p : w.interior_positions()) {
    const MultiIndex& n = w.point(p);
    const double Cn = ev.C[p];
    double margin = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double v = std::abs(ev.vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)));
      const double dist = l1_norm(w.point(j) - n);
      margin = std::max(margin, v * std::exp(rate * dist) / Cn);
      if (v > 0.0) {
        const double y = std::log(v);
        sx += dist;
        sy += y;
        sxx += dist * dist;
        sxy += dist * y;
        ++count;
      }
    }
    double fitted = kInf;
    const double var = count * sxx - sx * sx;
    if (count >= 2 && var > 0.0) fitted = -(count * sxy - sx * sy) / var;
    rep.sites.push_back(n);
    rep.C.push_back(Cn);
    rep.margin.push_back(margin);
    rep.fitted_rate.push_back(fitted);
    if (margin > 1.0 + 1e-12) ++rep.violations;
    rep.worst_margin = std::max(rep.worst_margin, margin);
    rep.min_fitted_rate = std::min(rep.min_fitted_rate, fitted);
  }
  return rep;
}

}  // namespace kamspec
