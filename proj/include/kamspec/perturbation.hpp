#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kamspec/band.hpp"

namespace kamspec {

/// f_k as a function of the unperturbed eigenvalue: V_{m, m+k} = f_k(lambda_m).
using ProfileFn = std::function<Complex(double)>;

/// Declarative profile functions for configs.
struct ProfileExpr {
  enum class Kind { polynomial, sin, cos, rational, tanh };
  Kind kind = Kind::polynomial;
  std::vector<double> coeffs{1.0};  // polynomial, or rational numerator; lowest degree first
  std::vector<double> denom{1.0};   // rational denominator
  double frequency = 1.0;           // sin/cos/tanh: amplitude * fn(frequency x + phase)
  double phase = 0.0;
  Complex amplitude{1.0, 0.0};

  ProfileFn compile() const;
  static Kind parse_kind(const std::string& name);
};

struct ProfileTerm {
  MultiIndex k;
  ProfileFn f;
};

struct ExplicitEntry {
  MultiIndex n;  // row
  MultiIndex k;  // offset, the column is n + k
  Complex value;
};

enum class PerturbationKind { profile, laplacian, explicit_entries };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::laplacian;
  double alpha = 1.0;
  bool hermitian = true;
  /// With hermitian set, only k = 0 and offsets whose first nonzero coordinate is positive may be
  /// given; the remaining diagonals follow from f_{-k}(lambda_m) = conj(f_k(lambda_{m-k})).
  std::vector<ProfileTerm> profile;
  std::vector<ExplicitEntry> entries;
};

/// k = 0 or first nonzero coordinate positive.
bool in_upper_half(const MultiIndex& k) noexcept;

BandOperator build_perturbation(const PerturbationSpec& spec, const LatticePtr& lattice);
BandOperator laplacian(const LatticePtr& lattice);

struct A4Report {
  double norm = 0.0;
  double alpha = 0.0;
  int kmax = 0;
  std::vector<std::pair<MultiIndex, double>> per_offset;  // e^{alpha |k|} ||V_k||_T
};

/// ||V||_alpha restricted to |k| <= kmax. Without kmax, the largest offset whose weighted norm
/// exceeds prune_floor times the largest one is used.
A4Report verify_assumption_A4(const BandOperator& v, double alpha, std::optional<int> kmax = std::nullopt,
                              double prune_floor = 1e-16);

struct HermitianCheck {
  bool hermitian = true;
  double worst_violation = 0.0;
  MultiIndex witness_n;
  MultiIndex witness_k;
};

HermitianCheck hermitian_check(const BandOperator& v);

/// sup |g| + sup |g'| over a uniform grid of [lo, hi]; g' by centered differences.
double c1_grid_norm(const std::function<Complex(double)>& g, double lo, double hi, int points_per_unit = 10000);

/// (1 + 1/a) sup_k e^{alpha |k|} ||f_k o h||_{C^1}, the a-priori bound for shaped perturbations.
/// The completed negative offsets of a hermitian spec share the C^1 norm of their partner.
double shaped_norm_bound(const PerturbationSpec& spec, const SpectrumModel& model, const Window& window,
                         double alpha, double a, int points_per_unit = 10000);

}  // namespace kamspec
