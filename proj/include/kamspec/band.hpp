#pragma once

#include <map>
#include <optional>

#include <Eigen/Dense>

#include "kamspec/t_algebra.hpp"

namespace kamspec {

inline constexpr std::size_t kMaxDenseSide = 20000;

/// Operator on the window stored by diagonals: A_k = (A_{n, n+k})_n.
class BandOperator {
 public:
  explicit BandOperator(LatticePtr lattice, double alpha_hint = 0.0);

  static BandOperator identity(LatticePtr lattice);
  static BandOperator zero(LatticePtr lattice);
  static BandOperator diagonal(const TSequence& values);
  /// Entries with modulus <= drop_tol are not stored.
  static BandOperator from_dense(LatticePtr lattice, const Eigen::MatrixXcd& m, double drop_tol = 0.0);

  const LatticePtr& lattice() const noexcept { return lattice_; }
  const Window& window() const noexcept { return lattice_->window(); }
  double alpha_hint() const noexcept { return alpha_hint_; }
  void set_alpha_hint(double a) noexcept { alpha_hint_ = a; }

  /// Stores A_k; the values are extended by zero to the full shifted domain of k.
  void set_diagonal(const MultiIndex& k, const TSequence& values);
  const TSequence* find(const MultiIndex& k) const;
  const std::map<MultiIndex, TSequence>& diagonals() const noexcept { return diagonals_; }

  Complex entry(std::size_t row, std::size_t col) const;
  bool is_diagonal() const noexcept;
  bool empty() const noexcept { return diagonals_.empty(); }
  /// Largest |k| among stored diagonals.
  int bandwidth() const noexcept;

  BandOperator scaled(Complex s) const;
  BandOperator adjoint() const;
  friend BandOperator operator+(const BandOperator& a, const BandOperator& b);
  friend BandOperator operator-(const BandOperator& a, const BandOperator& b);

 private:
  LatticePtr lattice_;
  std::map<MultiIndex, TSequence> diagonals_;
  double alpha_hint_;
};

/// sup_k e^{alpha |k|} ||A_k||_T; alpha = +inf is accepted for diagonal operators.
double alpha_norm(const BandOperator& a, double alpha);
/// (k, e^{alpha |k|} ||A_k||_T) per stored diagonal
std::vector<std::pair<MultiIndex, double>> alpha_norm_breakdown(const BandOperator& a, double alpha);

BandOperator diagonal_part(const BandOperator& a);
BandOperator off_diagonal_part(const BandOperator& a);

struct ComposeOptions {
  double prune_floor = 1e-16;  // relative to the largest weighted diagonal norm
};

/// (XY)_k = sum_l X_l Theta_l Y_{k-l}, truncated to the window; 0 < delta < alpha.
BandOperator compose(const BandOperator& x, const BandOperator& y, double alpha, double delta,
                     const ComposeOptions& opts = {});

struct NeumannOptions {
  double series_tol = 1e-15;  // relative to the first term's norm
  int max_terms = 200;
  bool enforce_precondition = true;
  double prune_floor = 1e-16;
};

struct NeumannResult {
  BandOperator inverse;
  int terms = 0;
  bool precondition_met = true;
};

/// X^{-1} = sum_l (I - X)^l; requires ||X - I||_alpha < (delta/3)^d when enforced.
NeumannResult neumann_series(const BandOperator& x, double alpha, double delta, const NeumannOptions& opts = {});
BandOperator neumann_inverse(const BandOperator& x, double alpha, double delta, const NeumannOptions& opts = {});

/// ((1 + e^{-alpha}) / (1 - e^{-alpha}))^d ||A||_alpha
double operator_norm_bound(const BandOperator& a, double alpha);

Eigen::MatrixXcd to_dense(const BandOperator& a);
Eigen::VectorXcd apply(const BandOperator& a, const Eigen::VectorXcd& v);

}  // namespace kamspec
