#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kamspec/lattice.hpp"

namespace kamspec {

enum class Transform { identity, cubic, tan_pi, sawtooth };

std::string to_string(Transform t);
Transform parse_transform(const std::string& name);

struct TransformSpec {
  Transform kind = Transform::identity;
  double beta = 0.0;  // cubic coefficient, h(x) = x + beta x^3
};

/// w(x) = x + j_x, the unique integer shift of x into (-1/2, 1/2].
double wrap_unit(double x) noexcept;

/// Unperturbed eigenvalues lambda_n = h(omega . n) with the Diophantine metadata
/// (c, gamma) used by every downstream bound.
class SpectrumModel {
 public:
  SpectrumModel(std::vector<double> omega, TransformSpec transform, double c = 1.0, double gamma = 1.0,
                std::optional<MultiIndex> base_point = std::nullopt);

  int dim() const noexcept { return static_cast<int>(omega_.size()); }
  std::span<const double> omega() const noexcept { return omega_; }
  const TransformSpec& transform() const noexcept { return transform_; }
  double c() const noexcept { return c_; }
  double gamma() const noexcept { return gamma_; }
  const MultiIndex& base_point() const noexcept { return base_point_; }

  /// 1-periodic transforms (tan_pi, sawtooth) need (omega, 1) Diophantine.
  bool periodic() const noexcept;

  SpectrumModel with_constants(double c, double gamma) const;
  SpectrumModel with_omega(std::vector<double> omega) const;

  double mu(const MultiIndex& n) const noexcept;
  double h(double x) const noexcept;
  double h_prime(double x) const noexcept;

  /// h(mu_n); throws Errc::pole for tan_pi when w(mu_n) is within 1e-8 of 1/2.
  double eigenvalue(const MultiIndex& n) const;

 private:
  std::vector<double> omega_;
  TransformSpec transform_;
  double c_;
  double gamma_;
  MultiIndex base_point_;
};

inline double eigenvalue(const SpectrumModel& model, const MultiIndex& n) { return model.eigenvalue(n); }

enum class AssumptionId { A1, A2, A3, A4 };
std::string to_string(AssumptionId id);

struct AssumptionReport {
  AssumptionId id = AssumptionId::A1;
  double worst_constant = 0.0;
  std::vector<MultiIndex> worst_witness;  // (n, k) or (n, j, k)
  double declared_c = 1.0;
  bool passed = true;
  /// Worst ratio per offset k, in lexicographic order of k.
  std::vector<std::pair<MultiIndex, double>> per_offset;
};

/// Absolute floor below which two eigenvalues are treated as equal: rel * max |lambda| on the window.
double degeneracy_floor(const SpectrumModel& model, const Window& window, double rel = 1e-12);

AssumptionReport verify_assumption_A1(const SpectrumModel& model, const Window& window, int kmax);
AssumptionReport verify_assumption_A2(const SpectrumModel& model, const Window& window, int kmax);
AssumptionReport verify_assumption_A3(const SpectrumModel& model, const Window& window, int kmax, int jmax);

struct CertifiedConstant {
  double c = 1.0;
  AssumptionReport a1, a2, a3;
};

/// Scans A1-A3 on the window; c = max(1, safety * worst). kmax/jmax default to the window diameter.
CertifiedConstant certify_constant(const SpectrumModel& model, const Window& window,
                                   std::optional<int> kmax = std::nullopt,
                                   std::optional<int> jmax = std::nullopt, double safety = 1.05);

struct DiophantineScan {
  double C_est = 0.0;
  MultiIndex witness;
};

/// max over 0 < k in window of 1 / (|omega.k| |k|^gamma), or with |omega.k| replaced by
/// min_j |omega.k + j| when periodic.
DiophantineScan diophantine_scan(std::span<const double> omega, const Window& window, double gamma,
                                 bool periodic);

struct HConditionOptions {
  double grid_step = 0.01;
  double x_range = 10.0;      // half-width of the x grid for non-periodic h
  double diophantine_C = 1.0; // constant of the frequency condition on omega
  double b_safety = 1.05;
};

struct HConditionReport {
  double a = 0.0;                   // inf |h'|
  double b = 0.0;                   // derivative-of-reciprocal bound, inflated by b_safety
  double hprime_max_unit = 0.0;     // max_{|x|<=1} |h'|, +inf across a pole
  std::optional<double> delta1;     // periodic case only
  double A_delta1 = 0.0;
  double diophantine_C = 1.0;
  double c_formula = 0.0;             // +inf when the formula does not apply
  bool periodic_case = false;
};

HConditionReport check_h_conditions(const SpectrumModel& model, const HConditionOptions& opts = {});

}  // namespace kamspec
