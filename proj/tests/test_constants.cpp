#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kamspec/constants.hpp"
#include "kamspec/error.hpp"
#include "support.hpp"

using namespace kamspec;
using std::numbers::e;

namespace {

// Plain-arithmetic evaluations of the closed forms, for moderate parameters.
double plain_K0(double gamma) { return std::pow(2.0 * gamma / e, 2.0 * gamma); }

double plain_phi_inf(double c, double gamma, int d, double sigma) {
  return 12.0 * c * c * plain_K0(gamma) * std::pow(4.0 / sigma, 4.0 * d + 2.0 * gamma);
}

double plain_min(double c, double gamma, int d) {
  const double K = std::pow(2.0, 4.0 * (2.0 * d + gamma)) * 3.0 * c * plain_K0(gamma);
  return std::min(K / (1.0 + K), 1.0 - std::pow(3.0, d) / std::pow(2.0, 6.0 * d - 1.0));
}

double plain_xi(double c, double gamma, int d, double sigma) {
  const double p = 4.0 * d + 2.0 * gamma;
  return std::pow(sigma, p) / (3.0 * c * plain_K0(gamma) * std::pow(4.0, p)) * plain_min(c, gamma, d);
}

double plain_A(double c, double gamma, int d) {
  const double p = 4.0 * d + 2.0 * gamma;
  return plain_min(c, gamma, d) / (12.0 * c * c * plain_K0(gamma) * std::pow(4.0, p));
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  FAIL("no error raised");
  return Errc::config;
}

}  // namespace

TEST_SUITE("constants") {

TEST_CASE("step schedule") {
  const auto s0 = schedule(2.0, 0);
  CHECK(s0.alpha_ell == 2.0);
  CHECK(s0.sigma_ell == 0.25);
  CHECK(schedule(2.0, 2).alpha_ell == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(schedule(2.0, 60).alpha_ell == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(schedule(1.0, 0).sigma_ell == 0.125);
  double prev = 1e300;
  for (int l = 0; l < 40; ++l) {
    const auto s = schedule(1.3, l);
    CHECK(s.alpha_ell < prev);
    CHECK(s.alpha_ell > 1.3 - sigma_of(1.3));
    // alpha_{l+1} = alpha_l - 2 sigma_l
    CHECK(schedule(1.3, l + 1).alpha_ell == doctest::Approx(s.alpha_ell - 2.0 * s.sigma_ell).epsilon(1e-14));
    prev = s.alpha_ell;
  }
  CHECK(sigma_of(0.5) == 0.25);
  CHECK(sigma_of(5.0) == 1.0);
  CHECK(code_of([] { (void)schedule(1.0, -1); }) == Errc::domain);
}

TEST_CASE("Phi closed form") {
  CHECK(big_phi(1.0, 1.0, 1.0, 1) == doctest::Approx(12.0 * std::pow(2.0 / e, 2.0)).epsilon(1e-14));
  CHECK(big_phi(1.0, 1.0, 1.0, 1) == doctest::Approx(6.49609359535741).epsilon(1e-12));
  testing::Gen g(41);
  for (int t = 0; t < 50; ++t) {
    const double x = g.uniform(0.01, 2.0);
    const double c = g.uniform(1.0, 5.0);
    const double gamma = g.uniform(0.1, 3.0);
    const int d = g.integer(1, 3);
    CHECK(big_phi(x / 2.0, c, gamma, d) / big_phi(x, c, gamma, d) ==
          doctest::Approx(std::pow(2.0, 4.0 * d + 2.0 * gamma)).epsilon(1e-12));
    CHECK(big_phi(x, c, gamma, d) > big_phi(1.01 * x, c, gamma, d));
  }
  double prev = 0.0;
  for (int nu = 0; nu < 20; ++nu) {
    const double v = big_phi(schedule(2.0, nu).sigma_ell, 1.0, 1.0, 1);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(code_of([] { (void)big_phi(0.0, 1.0, 1.0, 1); }) == Errc::domain);
}

TEST_CASE("phi sequence and the closed form") {
  CHECK(phi_sequence(0, 1.0, 1.0, 1, 1.0) == 1.0);
  const double closed = 12.0 * (4.0 / (e * e)) * std::pow(4.0, 6.0);
  CHECK(phi_infinity(1.0, 1.0, 1, 1.0) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(closed == doctest::Approx(26607.99936658).epsilon(1e-10));

  // brute-force partial product
  double prod = 1.0;
  for (int nu = 0; nu < 30; ++nu) {
    const double sig = 1.0 / std::pow(2.0, nu + 2);
    prod *= std::pow(12.0 * std::pow(2.0 / e, 2.0) * std::pow(sig, -6.0), 1.0 / std::pow(2.0, nu + 1));
  }
  CHECK(phi_sequence(30, 1.0, 1.0, 1, 1.0) == doctest::Approx(prod).epsilon(1e-12));

  double prev = 0.0;
  for (int l = 0; l <= 60; ++l) {
    const double p = phi_sequence(l, 2.0, 0.7, 2, 0.6);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(phi_sequence(60, 2.0, 0.7, 2, 0.6) == doctest::Approx(phi_sequence(59, 2.0, 0.7, 2, 0.6)).epsilon(1e-14));
}

TEST_CASE("partial products settle at 2^(4d + 2 gamma) times the closed form") {
  testing::Gen g(46);
  for (int t = 0; t < 20; ++t) {
    const double c = g.uniform(1.0, 10.0);
    const double gamma = g.uniform(0.05, 3.0);
    const int d = g.integer(1, 3);
    const double sigma = g.uniform(0.01, 1.0);
    const double gap = log_phi_sequence(80, c, gamma, d, sigma) - log_phi_infinity(c, gamma, d, sigma);
    CHECK(gap == doctest::Approx((4.0 * d + 2.0 * gamma) * std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("Phi(sigma_l) phi_l^(2^l) stays below the product limit") {
  testing::Gen g(42);
  for (int t = 0; t < 20; ++t) {
    const double c = g.uniform(1.0, 10.0);
    const double gamma = g.uniform(0.05, 3.0);
    const int d = g.integer(1, 3);
    const double sigma = g.uniform(0.01, 1.0);
    const double limit = log_phi_sequence(80, c, gamma, d, sigma);
    for (int l = 0; l <= 20; ++l) {
      const double lhs = log_big_phi(sigma / std::pow(2.0, l + 2), c, gamma, d) +
                         std::ldexp(log_phi_sequence(l, c, gamma, d, sigma), l);
      const double rhs = std::ldexp(limit, l);
      CHECK(lhs <= rhs + 1e-10 * std::abs(rhs));
    }
    // against the closed form only the first step holds, with equality
    CHECK(log_big_phi(sigma / 4.0, c, gamma, d) ==
          doctest::Approx(log_phi_infinity(c, gamma, d, sigma)).epsilon(1e-13));
  }
}

TEST_CASE("xi solves the three-inequality system") {
  testing::Gen g(43);
  for (int t = 0; t < 100; ++t) {
    const double c = g.uniform(1.0, 10.0);
    const double gamma = g.uniform(1e-3, 3.0);
    const int d = g.integer(1, 3);
    const double sigma = g.uniform(1e-3, 1.0);
    const double xi = xi_value(c, gamma, d, sigma);
    CHECK(xi < 1.0);
    CHECK(xi > 0.0);
    if (std::isfinite(plain_phi_inf(c, gamma, d, sigma)) && plain_xi(c, gamma, d, sigma) > 1e-290) {
      CHECK(xi == doctest::Approx(plain_xi(c, gamma, d, sigma)).epsilon(1e-11));
    }
    const auto chk = verify_xi_system(c, gamma, d, sigma, xi);
    CHECK(chk.first);
    CHECK(chk.second);
    CHECK(chk.third);
    CHECK(chk.all());

    // independent evaluation; s = xi phi_inf / (4c) is sigma-free
    const double s = plain_min(c, gamma, d);
    CHECK(chk.s == doctest::Approx(s).epsilon(1e-10));
    const double p = 4.0 * d + 2.0 * gamma;
    const double second = s / (1.0 - s) / (std::pow(2.0, 2.0 * p) * 12.0 * c * c * plain_K0(gamma));
    CHECK(second <= (1.0 / (4.0 * c)) * (1.0 + 1e-12));
    CHECK(std::pow(3.0, d) / (std::pow(2.0, 6.0 * d - 1.0) * (1.0 - s)) <= 1.0 + 1e-12);
  }
  // a larger xi breaks the system
  const double xi = xi_value(1.0, 1.0, 1, 1.0);
  CHECK_FALSE(verify_xi_system(1.0, 1.0, 1, 1.0, 1.01 * xi).all());
}

TEST_CASE("eps* from both closed forms") {
  testing::Gen g(44);
  for (int t = 0; t < 100; ++t) {
    const double c = g.uniform(1.0, 10.0);
    const double gamma = g.uniform(0.05, 3.0);
    const int d = g.integer(1, 3);
    const double alpha = g.uniform(0.05, 5.0);
    const double vn = g.uniform(0.1, 100.0);
    const auto k = KamConstants::compute(c, gamma, d, alpha, vn);
    const double other = k.A_const * std::pow(std::min(1.0, alpha / 2.0), 4.0 * d + 2.0 * gamma) / vn;
    CHECK(k.eps_star == doctest::Approx(other).epsilon(1e-12));
    CHECK(k.eps_star == doctest::Approx(k.xi / (4.0 * c * vn)).epsilon(1e-15));
    CHECK(k.A_const == doctest::Approx(plain_A(c, gamma, d)).epsilon(1e-11));
    CHECK(k.sigma == std::min(1.0, alpha / 2.0));
    CHECK(k.phi_inf == doctest::Approx(plain_phi_inf(c, gamma, d, k.sigma)).epsilon(1e-11));
  }
  CHECK(code_of([] { (void)eps_star(0.1, 1.0, 0.0); }) == Errc::domain);
}

TEST_CASE("laplacian threshold peaks at alpha = 2") {
  for (int d : {1, 2}) {
    const double A = A_value(1.0, 1.0, d);
    const auto f = [&](double alpha) { return A * std::exp(-alpha) * std::pow(std::min(1.0, alpha / 2.0), 4.0 * d + 2.0); };
    double best = 0.0;
    double arg = 0.0;
    for (int i = 1; i <= 10000; ++i) {
      const double alpha = i * 1e-3;
      if (f(alpha) > best) {
        best = f(alpha);
        arg = alpha;
      }
    }
    CHECK(arg == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(best == doctest::Approx(A * std::exp(-2.0)).epsilon(1e-14));
    const auto k = KamConstants::compute(1.0, 1.0, d, 2.0, std::exp(2.0));
    CHECK(k.eps_star == doctest::Approx(A * std::exp(-2.0)).epsilon(1e-12));
  }
}

TEST_CASE("q factor") {
  CHECK(q_factor(0.5, 1) == doctest::Approx((1.0 + std::exp(-0.5)) / (1.0 - std::exp(-0.5))).epsilon(1e-15));
  CHECK(q_factor(0.5, 1) == doctest::Approx(4.0830).epsilon(1e-4));
  CHECK(q_factor(0.5, 1) < 6.0);
  double prev = 1e300;
  for (int i = 1; i <= 400; ++i) {
    const double delta = 0.05 * i;
    const double q = q_factor(delta, 2);
    CHECK(q < prev);
    CHECK(q > 1.0);
    if (delta < 1.0) CHECK(q < std::pow(3.0 / delta, 2));
    prev = q;
  }
  CHECK(q_factor(60.0, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(code_of([] { (void)q_factor(0.0, 1); }) == Errc::domain);
}

TEST_CASE("polynomial-exponential sup bound") {
  CHECK(sup_poly_exp(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(sup_poly_exp(1.0, 2.0) == doctest::Approx(0.135335).epsilon(1e-5));
  testing::Gen g(45);
  for (int t = 0; t < 50; ++t) {
    const double gamma = g.uniform(0.05, 3.0);
    const double delta = g.uniform(0.05, 3.0);
    double mx = 0.0;
    for (int r = 0; r <= 200; ++r) mx = std::max(mx, std::pow(r, 2.0 * gamma) * std::exp(-delta * r));
    CHECK(mx <= sup_poly_exp(gamma, delta) * (1.0 + 1e-14));
  }
}

TEST_CASE("overflow and parameter errors") {
  CHECK(code_of([] { (void)phi_infinity(1.0, 200.0, 4, 1e-3); }) == Errc::overflow);
  CHECK(std::isfinite(log_phi_infinity(1.0, 200.0, 4, 1e-3)));
  CHECK(code_of([] { (void)xi_value(0.5, 1.0, 1, 1.0); }) == Errc::domain);
  CHECK(code_of([] { (void)xi_value(1.0, 1.0, 1, 1.5); }) == Errc::domain);
  CHECK(code_of([] { (void)sigma_of(0.0); }) == Errc::domain);
}

}
