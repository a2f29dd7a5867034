#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kamspec/band.hpp"
#include "kamspec/constants.hpp"
#include "kamspec/error.hpp"

namespace kamspec {

enum class KamMode { rigorous, empirical };

std::string to_string(KamMode m);
KamMode parse_mode(const std::string& name);

/// One line of the per-step ledger. P denotes the current perturbation eps_l V^(l).
struct StepRecord {
  int ell = 0;
  double eps_ell = 0.0;  // eps^{2^l}; may underflow to 0 long before P does
  double alpha_ell = 0.0;
  double sigma_ell = 0.0;
  double norm_P = 0.0;             // ||P_l||_{alpha_l}
  double norm_P_next = 0.0;        // ||P_{l+1}||_{alpha_{l+1}}
  double norm_W_minus_I = 0.0;     // ||W - I||_{alpha_l - sigma_l}
  double W_bound = 0.0;            // 12 c^2 (2 gamma / (e sigma_l))^{2 gamma} ||P_l||_{alpha_l}
  double norm_Winv_minus_I = 0.0;  // ||W^{-1} - I||_{alpha_l - 2 sigma_l}
  double homological_residual = 0.0;
  double residual_scale = 0.0;
  double correction_t_norm = 0.0;  // ||lambda^(l+1) - lambda||_T
  double sum_norm_P = 0.0;         // sum_{j <= l} ||P_j||_{alpha_j}
  double norm_U_increment = 0.0;     // ||U^(l+1) - U^(l)||_{alpha_{l+1} + sigma_{l+1}}
  double norm_Uinv_increment = 0.0;  // ||U^(l+1)^{-1} - U^(l)^{-1}||_{alpha_{l+1}}
  double log_bound_B = 0.0;        // log (xi phi_l / (4c))^{2^l}
  double log_bound_B_next = 0.0;
  double log_bound_CD = 0.0;       // log (xi phi_inf / (4c))^{2^l}
  bool condA = true, condB = true, condC = true, condD = true;
  bool W_bound_ok = true;
  bool neumann_precondition = true;
  int neumann_terms = 0;
  double wall_time_ms = 0.0;
};

/// Error raised inside the iteration, with the ledger up to the failing step.
class KamError : public Error {
 public:
  KamError(const Error& e, std::vector<StepRecord> ledger) : Error(e), ledger_(std::move(ledger)) {}
  const std::vector<StepRecord>& ledger() const noexcept { return ledger_; }

 private:
  std::vector<StepRecord> ledger_;
};

struct KamOptions {
  KamMode mode = KamMode::empirical;
  double convergence_tol = 1e-14;  // relative to ||eps V||_alpha
  double absolute_tol = 0.0;
  int max_steps = 30;
  double prune_floor = 1e-16;
  double series_tol = 1e-15;
  int series_max_terms = 200;
  std::function<void(const StepRecord&)> trace;
};

/// Constants the iteration is measured against.
struct KamSetup {
  double c = 1.0;
  double gamma = 1.0;
  double alpha = 1.0;
  KamConstants constants;

  static KamSetup make(double c, double gamma, int d, double alpha, double V_alpha_norm);
};

struct KamState {
  int ell = 0;
  double eps = 0.0;
  TSequence T_diag;  // lambda^(l)
  BandOperator P;    // eps_l V^(l)
  BandOperator U;
  BandOperator U_inv;
  double sum_norm_P = 0.0;
  std::vector<StepRecord> ledger;

  static KamState initial(const LatticePtr& lattice, const BandOperator& v, double eps);
};

struct HomologicalSolution {
  BandOperator W;
  TSequence T_next;  // lambda^(l+1) = lambda^(l) + [P]
  double residual = 0.0;
  double residual_scale = 0.0;
  double correction_t_norm = 0.0;
};

/// W_{m,m+k} = P_{m,m+k} / (lambda^(l+1)_{m+k} - lambda^(l+1)_m), W_{mm} = 1.
/// With c given, a cumulative correction above 1/(4c) is a rigor violation.
HomologicalSolution solve_homological(const TSequence& T_diag, const BandOperator& P,
                                      std::optional<double> rigor_c = std::nullopt);

KamState kam_step(KamState state, const KamSetup& setup, const KamOptions& opts);

struct KamResult {
  TSequence lambda_eps;
  BandOperator U;
  BandOperator U_inv;
  bool converged = false;
  int steps = 0;
  double residual = 0.0;
  KamMode mode = KamMode::empirical;
  double eps = 0.0;
  std::vector<StepRecord> ledger;
};

KamResult run_kam(const LatticePtr& lattice, const BandOperator& v, double eps, const KamSetup& setup,
                  const KamOptions& opts = {});

struct Eigenvectors {
  Eigen::MatrixXcd vectors;  // column p is u_n for n = point(p)
  std::vector<double> C;     // ||U||_{alpha - sigma} / ||U e_n||
  bool orthonormalized = false;
  double max_offdiag_gram = 0.0;  // interior columns
};

/// Normalized columns of U; for hermitian runs also measures the interior Gram matrix.
Eigenvectors unitarize(const KamResult& result, double alpha, bool hermitian);

struct DiophantineReport {
  struct Row {
    MultiIndex k;
    double worst = 0.0;  // max over interior n of 1/|lambda_{n+k} - lambda_n|
    double bound = 0.0;  // 12 c^2 |k|^{2 gamma}
    bool passed = true;
  };
  std::vector<Row> rows;
  int violations = 0;
  double worst_margin = 0.0;  // max worst / bound
};

DiophantineReport diophantine_report(const TSequence& lambda_eps, double c, double gamma, int kmax);

struct LocalizationReport {
  std::vector<MultiIndex> sites;
  std::vector<double> C;
  std::vector<double> margin;       // max_j |u_n(j)| e^{rate |j-n|} / C_n
  std::vector<double> fitted_rate;  // least-squares decay of log |u_n(j)| in |j - n|
  int violations = 0;
  double worst_margin = 0.0;
  double min_fitted_rate = 0.0;
};

LocalizationReport localization_report(const KamResult& result, const Eigenvectors& ev, double alpha,
                                       double sigma);

}  // namespace kamspec
