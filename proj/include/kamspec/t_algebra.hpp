#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kamspec/lattice.hpp"
#include "kamspec/spectrum.hpp"

namespace kamspec {

using Complex = std::complex<double>;

struct LatticeOptions {
  double denom_floor_rel = 1e-12;  // relative to max |lambda_n| on the window
  bool require_simple = true;      // reject windows with coinciding eigenvalues
};

/// A window together with the unperturbed eigenvalues on it and a table of the base
/// gaps 1/|lambda_{b+j} - lambda_b| for every difference j of two window points.
class SpectralLattice {
 public:
  static std::shared_ptr<const SpectralLattice> create(const SpectrumModel& model, const Window& window,
                                                       const LatticeOptions& opts = {});

  const SpectrumModel& model() const noexcept { return model_; }
  const Window& window() const noexcept { return window_; }
  int dim() const noexcept { return window_.dim(); }
  std::size_t size() const noexcept { return window_.size(); }

  std::span<const double> eigenvalues() const noexcept { return lambda_; }
  double eigenvalue(std::size_t pos) const { return lambda_[pos]; }

  double spectral_scale() const noexcept { return scale_; }
  double denom_floor() const noexcept { return floor_; }

  /// 1/|lambda_{b+j} - lambda_b| with j = point(to) - point(from); +inf when the gap is below the floor.
  double inv_base_gap(std::size_t from, std::size_t to) const noexcept {
    return inv_gap_[static_cast<std::size_t>(center_ + code_[to] - code_[from])];
  }
  double inv_base_gap(const MultiIndex& j) const;
  /// max over nonzero differences j of inv_base_gap(j)
  double max_inv_base_gap() const noexcept { return max_inv_gap_; }

 private:
  SpectralLattice(const SpectrumModel& model, const Window& window);

  SpectrumModel model_;
  Window window_;
  std::vector<double> lambda_;
  double scale_ = 1.0;
  double floor_ = 0.0;
  std::vector<std::int64_t> code_;  // linear code of each point in the difference box
  std::int64_t center_ = 0;
  std::int64_t side_ = 1;
  std::vector<double> inv_gap_;
  double max_inv_gap_ = 0.0;
};

using LatticePtr = std::shared_ptr<const SpectralLattice>;

/// Complex sequence on a subset of the window, measured in the norm
/// ||a||_T = sup |a_n| + sup_{n, j != 0} |a_{n+j} - a_n| / |lambda_j - lambda_0|.
class TSequence {
 public:
  /// values[i] belongs to position domain[i]; domain must be increasing and nonempty.
  TSequence(LatticePtr lattice, std::vector<std::size_t> domain, std::span<const Complex> values);

  static TSequence constant(LatticePtr lattice, Complex value);
  static TSequence constant(LatticePtr lattice, Complex value, std::vector<std::size_t> domain);
  static TSequence from_function(LatticePtr lattice, const std::function<Complex(const MultiIndex&)>& f);
  static TSequence from_function(LatticePtr lattice, const std::function<Complex(const MultiIndex&)>& f,
                                 std::vector<std::size_t> domain);
  /// Takes a full-window value array; entries outside the domain are ignored.
  static TSequence from_dense(LatticePtr lattice, std::vector<std::size_t> domain, std::vector<Complex> dense);

  const LatticePtr& lattice() const noexcept { return lattice_; }
  const Window& window() const noexcept { return lattice_->window(); }
  std::span<const std::size_t> domain() const noexcept { return domain_; }
  bool contains(std::size_t pos) const noexcept { return mask_[pos] != 0; }

  /// Value at a window position, zero outside the domain.
  Complex operator[](std::size_t pos) const noexcept { return values_[pos]; }
  /// Value at n; throws Errc::domain outside the domain.
  Complex at(const MultiIndex& n) const;
  /// Full-window array, zero outside the domain.
  std::span<const Complex> dense_values() const noexcept { return values_; }

  double sup_abs() const noexcept;
  bool is_zero() const noexcept;

  TSequence restricted(std::span<const std::size_t> domain) const;
  TSequence scaled(Complex s) const;
  TSequence conj() const;

  /// Sum and difference on the union of domains (missing entries count as zero).
  friend TSequence operator+(const TSequence& a, const TSequence& b);
  friend TSequence operator-(const TSequence& a, const TSequence& b);

 private:
  TSequence(LatticePtr lattice, std::vector<std::size_t> domain, std::vector<Complex> dense, bool);

  LatticePtr lattice_;
  std::vector<std::size_t> domain_;
  std::vector<std::uint8_t> mask_;
  std::vector<Complex> values_;
};

double t_norm(const TSequence& a);
double sup_norm(const TSequence& a);

/// (Theta_k a)_n = a_{n+k} on {n : n + k in domain(a)}.
TSequence shift(const TSequence& a, const MultiIndex& k);

/// a_n b_n on the intersection of the domains.
TSequence pointwise_product(const TSequence& a, const TSequence& b);

/// 1 / (s_{n+k} - s_n) with s = lambda + v, on {n : n, n + k in window and in domain(v)}.
TSequence reciprocal_difference(const LatticePtr& lattice, const MultiIndex& k,
                                const TSequence* correction = nullptr);

}  // namespace kamspec
