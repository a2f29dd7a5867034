#include "kamspec/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kamspec/error.hpp"

namespace kamspec {

namespace {

void check_params(double c, double gamma, int d) {
  if (!(c >= 1.0)) throw Error(Errc::domain, "c must be >= 1");
  if (!(gamma > 0.0)) throw Error(Errc::domain, "gamma must be > 0");
  if (d < 1) throw Error(Errc::domain, "dimension must be >= 1");
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw Error(Errc::domain, "sigma must lie in (0, 1]");
}

// log of 12 c^2 (2 gamma / e)^{2 gamma}
double log_prefactor(double c, double gamma) {
  return std::log(12.0) + 2.0 * std::log(c) + 2.0 * gamma * (std::log(2.0 * gamma) - 1.0);
}

double exp_checked(double log_value, const char* what) {
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    throw Error(Errc::overflow, std::string(what) + " exceeds double range");
  }
  return std::exp(log_value);
}

// min{ K / (1 + K), 1 - 3^d / 2^{6d-1} } with K = 2^{4(2d+gamma)} 3c (2 gamma / e)^{2 gamma}
double xi_min_factor(double c, double gamma, int d) {
  const double logK = 4.0 * (2.0 * d + gamma) * std::log(2.0) + std::log(3.0 * c) +
                      2.0 * gamma * (std::log(2.0 * gamma) - 1.0);
  const double first = 1.0 / (1.0 + std::exp(-logK));
  const double second = 1.0 - std::pow(3.0, d) / std::pow(2.0, 6.0 * d - 1.0);
  return std::min(first, second);
}

}  // namespace

double sigma_of(double alpha) {
  if (!(alpha > 0.0)) throw Error(Errc::domain, "alpha must be > 0");
  return std::min(1.0, alpha / 2.0);
}

Schedule schedule(double alpha, int ell) {
  if (ell < 0) throw Error(Errc::domain, "step index must be >= 0");
  const double sigma = sigma_of(alpha);
  // 2 sum_{nu < l} sigma / 2^{nu+2} = sigma (1 - 2^{-l})
  return {alpha - sigma * (1.0 - std::ldexp(1.0, -ell)), std::ldexp(sigma, -(ell + 2))};
}

double log_big_phi(double x, double c, double gamma, int d) {
  if (!(x > 0.0)) throw Error(Errc::domain, "Phi needs x > 0");
  check_params(c, gamma, d);
  return log_prefactor(c, gamma) - (4.0 * d + 2.0 * gamma) * std::log(x);
}

double big_phi(double x, double c, double gamma, int d) {
  return exp_checked(log_big_phi(x, c, gamma, d), "Phi");
}

double log_phi_sequence(int ell, double c, double gamma, int d, double sigma) {
  if (ell < 0) throw Error(Errc::domain, "step index must be >= 0");
  check_sigma(sigma);
  double s = 0.0;
  for (int nu = 0; nu < ell; ++nu) {
    s += std::ldexp(log_big_phi(std::ldexp(sigma, -(nu + 2)), c, gamma, d), -(nu + 1));
  }
  return s;
}

double phi_sequence(int ell, double c, double gamma, int d, double sigma) {
  return exp_checked(log_phi_sequence(ell, c, gamma, d, sigma), "phi_l");
}

double log_phi_infinity(double c, double gamma, int d, double sigma) {
  check_params(c, gamma, d);
  check_sigma(sigma);
  return log_prefactor(c, gamma) + (4.0 * d + 2.0 * gamma) * std::log(4.0 / sigma);
}

double phi_infinity(double c, double gamma, int d, double sigma) {
  return exp_checked(log_phi_infinity(c, gamma, d, sigma), "phi_inf");
}

double xi_value(double c, double gamma, int d, double sigma) {
  check_params(c, gamma, d);
  check_sigma(sigma);
  const double p = 4.0 * d + 2.0 * gamma;
  const double log_xi = p * std::log(sigma) - std::log(3.0 * c) - 2.0 * gamma * (std::log(2.0 * gamma) - 1.0) -
                        p * std::log(4.0);
  return std::exp(log_xi) * xi_min_factor(c, gamma, d);
}

double A_value(double c, double gamma, int d) {
  check_params(c, gamma, d);
  const double p = 4.0 * d + 2.0 * gamma;
  return std::exp(-log_prefactor(c, gamma) - p * std::log(4.0)) * xi_min_factor(c, gamma, d);
}

double eps_star(double xi, double c, double V_alpha_norm) {
  if (!(V_alpha_norm > 0.0)) throw Error(Errc::domain, "||V||_alpha must be > 0");
  return xi / (4.0 * c * V_alpha_norm);
}

double q_factor(double delta, int d) {
  if (!(delta > 0.0)) throw Error(Errc::domain, "q needs delta > 0");
  const double e = std::exp(-delta);
  return std::pow((1.0 + e) / (1.0 - e), d);
}

double sup_poly_exp(double gamma, double delta) {
  if (!(delta > 0.0)) throw Error(Errc::domain, "sup bound needs delta > 0");
  return std::pow(2.0 * gamma / (std::numbers::e * delta), 2.0 * gamma);
}

XiSystemCheck verify_xi_system(double c, double gamma, int d, double sigma, double xi) {
  XiSystemCheck out;
  const double log_phi = log_phi_infinity(c, gamma, d, sigma);
  out.s = xi / (4.0 * c) * std::exp(log_phi);
  out.first = out.s < 1.0;
  const double p = 4.0 * d + 2.0 * gamma;
  const double coeff = std::exp(-(2.0 * p * std::log(2.0) + log_prefactor(c, gamma)));
  out.second_lhs = coeff * out.s / (1.0 - out.s);
  out.second_rhs = 1.0 / (4.0 * c);
  out.third_lhs = std::pow(3.0, d) / (std::pow(2.0, 6.0 * d - 1.0) * (1.0 - out.s));
  // second and third in their s-form
  const double K = 1.0 / (4.0 * c * coeff);
  out.second = out.first && out.s <= K / (1.0 + K) * (1.0 + 1e-12);
  out.third = out.first && out.s <= (1.0 - std::pow(3.0, d) / std::pow(2.0, 6.0 * d - 1.0)) * (1.0 + 1e-12);
  return out;
}

KamConstants KamConstants::compute(double c, double gamma, int d, double alpha, double V_alpha_norm) {
  KamConstants k;
  k.c = c;
  k.gamma = gamma;
  k.d = d;
  k.alpha = alpha;
  k.sigma = sigma_of(alpha);
  k.phi_inf = phi_infinity(c, gamma, d, k.sigma);
  k.xi = xi_value(c, gamma, d, k.sigma);
  k.A_const = A_value(c, gamma, d);
  k.V_alpha_norm = V_alpha_norm;
  k.eps_star = V_alpha_norm > 0.0 ? kamspec::eps_star(k.xi, c, V_alpha_norm) : std::numeric_limits<double>::infinity();
  return k;
}

}  // namespace kamspec
