#pragma once

namespace kamspec {

/// sigma = min(1, alpha / 2)
double sigma_of(double alpha);

struct Schedule {
  double alpha_ell = 0.0;
  double sigma_ell = 0.0;
};

/// sigma_l = sigma / 2^{l+2}, alpha_l = alpha - 2 sum_{nu < l} sigma_nu.
Schedule schedule(double alpha, int ell);

/// Phi(x) = 12 c^2 (2 gamma / e)^{2 gamma} x^{-4d - 2 gamma}
double big_phi(double x, double c, double gamma, int d);
double log_big_phi(double x, double c, double gamma, int d);

/// phi_l = prod_{nu < l} Phi(sigma_nu)^{1 / 2^{nu+1}}, in log space.
double log_phi_sequence(int ell, double c, double gamma, int d, double sigma);
double phi_sequence(int ell, double c, double gamma, int d, double sigma);

/// phi_inf = 12 c^2 (2 gamma / e)^{2 gamma} (4 / sigma)^{4d + 2 gamma}
double log_phi_infinity(double c, double gamma, int d, double sigma);
double phi_infinity(double c, double gamma, int d, double sigma);

double xi_value(double c, double gamma, int d, double sigma);
/// sigma-free prefactor of eps*: eps* = A sigma^{4d + 2 gamma} / ||V||_alpha
double A_value(double c, double gamma, int d);
/// xi / (4 c ||V||_alpha)
double eps_star(double xi, double c, double V_alpha_norm);

/// ((1 + e^{-delta}) / (1 - e^{-delta}))^d
double q_factor(double delta, int d);
/// (2 gamma / (e delta))^{2 gamma}, an upper bound for sup_r r^{2 gamma} e^{-delta r}
double sup_poly_exp(double gamma, double delta);

struct XiSystemCheck {
  double s = 0.0;       // xi phi_inf / (4c)
  bool first = false;   // s < 1
  bool second = false;  // sum condition against 1/(4c)
  bool third = false;   // Neumann contraction condition
  double second_lhs = 0.0, second_rhs = 0.0;
  double third_lhs = 0.0;
  bool all() const { return first && second && third; }
};

XiSystemCheck verify_xi_system(double c, double gamma, int d, double sigma, double xi);

struct KamConstants {
  double c = 1.0;
  double gamma = 1.0;
  int d = 1;
  double alpha = 1.0;
  double sigma = 0.5;
  double phi_inf = 0.0;
  double xi = 0.0;
  double A_const = 0.0;
  double V_alpha_norm = 0.0;
  double eps_star = 0.0;

  static KamConstants compute(double c, double gamma, int d, double alpha, double V_alpha_norm);
};

}  // namespace kamspec
