#include "kamspec/t_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kamspec/error.hpp"

namespace kamspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> full_domain(std::size_t n) {
  std::vector<std::size_t> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = i;
  return d;
}

}  // namespace

SpectralLattice::SpectralLattice(const SpectrumModel& model, const Window& window)
    : model_(model), window_(window) {}

std::shared_ptr<const SpectralLattice> SpectralLattice::create(const SpectrumModel& model, const Window& window,
                                                               const LatticeOptions& opts) {
  if (model.dim() != window.dim()) throw Error(Errc::invalid_window, "model and window dimension differ");
  std::shared_ptr<SpectralLattice> lat(new SpectralLattice(model, window));

  const std::size_t W = window.size();
  lat->lambda_.resize(W);
  double scale = 0.0;
  for (std::size_t p = 0; p < W; ++p) {
    lat->lambda_[p] = model.eigenvalue(window.point(p));
    scale = std::max(scale, std::abs(lat->lambda_[p]));
  }
  lat->scale_ = scale > 0.0 ? scale : 1.0;
  lat->floor_ = opts.denom_floor_rel * lat->scale_;

  if (opts.require_simple) {
    std::vector<std::size_t> order = full_domain(W);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lat->lambda_[a] < lat->lambda_[b]; });
    for (std::size_t i = 1; i < W; ++i) {
      if (lat->lambda_[order[i]] - lat->lambda_[order[i - 1]] < lat->floor_) {
        throw Error(Errc::degenerate_spectrum, "eigenvalues at " + window.point(order[i - 1]).to_string() +
                                                   " and " + window.point(order[i]).to_string() + " coincide");
      }
    }
  }

  // Differences of window points live in the box of radius 2R.
  const int R = window.radius();
  const int d = window.dim();
  lat->side_ = 4 * R + 1;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= lat->side_;
  lat->center_ = (total - 1) / 2;
  lat->code_.resize(W);
  for (std::size_t p = 0; p < W; ++p) {
    std::int64_t c = 0;
    for (int i = 0; i < d; ++i) c = c * lat->side_ + window.point(p)[i];
    lat->code_[p] = c;
  }

  const MultiIndex& b = model.base_point();
  const double lam_b = model.h(model.mu(b));
  lat->inv_gap_.assign(static_cast<std::size_t>(total), 0.0);
  MultiIndex j(d);
  for (int i = 0; i < d; ++i) j[i] = -2 * R;
  for (std::int64_t flat = 0; flat < total; ++flat) {
    if (!j.is_zero()) {
      // Points outside the window may sit next to a pole of tan; the gap is then huge and 1/gap ~ 0.
      const double gap = std::abs(model.h(model.mu(b + j)) - lam_b);
      const double inv = gap < lat->floor_ ? kInf : 1.0 / gap;
      lat->inv_gap_[static_cast<std::size_t>(flat)] = inv;
      lat->max_inv_gap_ = std::max(lat->max_inv_gap_, inv);
    }
    for (int i = d - 1; i >= 0; --i) {
      if (++j[i] <= 2 * R) break;
      j[i] = -2 * R;
    }
  }
  return lat;
}

double SpectralLattice::inv_base_gap(const MultiIndex& j) const {
  const int R = window_.radius();
  std::int64_t c = 0;
  for (int i = 0; i < dim(); ++i) {
    if (j[i] < -2 * R || j[i] > 2 * R) throw Error(Errc::invalid_offset, "offset outside difference box");
    c = c * side_ + j[i];
  }
  return inv_gap_[static_cast<std::size_t>(center_ + c)];
}

TSequence::TSequence(LatticePtr lattice, std::vector<std::size_t> domain, std::vector<Complex> dense, bool)
    : lattice_(std::move(lattice)), domain_(std::move(domain)) {
  const std::size_t W = lattice_->size();
  if (domain_.empty()) throw Error(Errc::domain, "sequence domain is empty");
  mask_.assign(W, 0);
  values_.assign(W, Complex(0.0, 0.0));
  std::size_t prev = 0;
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    const std::size_t p = domain_[i];
    if (p >= W || (i > 0 && p <= prev)) throw Error(Errc::domain, "domain must be increasing window positions");
    prev = p;
    mask_[p] = 1;
    const Complex v = dense[p];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(Errc::domain, "non-finite value at " + lattice_->window().point(p).to_string());
    }
    values_[p] = v;
  }
}

TSequence::TSequence(LatticePtr lattice, std::vector<std::size_t> domain, std::span<const Complex> values)
    : TSequence(lattice, domain, [&] {
        if (values.size() != domain.size()) throw Error(Errc::domain, "domain and value counts differ");
        std::vector<Complex> dense(lattice->size());
        for (std::size_t i = 0; i < domain.size(); ++i) {
          if (domain[i] < dense.size()) dense[domain[i]] = values[i];
        }
        return dense;
      }(), true) {}

TSequence TSequence::from_dense(LatticePtr lattice, std::vector<std::size_t> domain, std::vector<Complex> dense) {
  if (dense.size() != lattice->size()) throw Error(Errc::domain, "dense array size differs from window");
  return TSequence(std::move(lattice), std::move(domain), std::move(dense), true);
}

TSequence TSequence::constant(LatticePtr lattice, Complex value) {
  auto dom = full_domain(lattice->size());
  return constant(std::move(lattice), value, std::move(dom));
}

TSequence TSequence::constant(LatticePtr lattice, Complex value, std::vector<std::size_t> domain) {
  std::vector<Complex> dense(lattice->size(), value);
  return TSequence(std::move(lattice), std::move(domain), std::move(dense), true);
}

TSequence TSequence::from_function(LatticePtr lattice, const std::function<Complex(const MultiIndex&)>& f) {
  auto dom = full_domain(lattice->size());
  return from_function(std::move(lattice), f, std::move(dom));
}

TSequence TSequence::from_function(LatticePtr lattice, const std::function<Complex(const MultiIndex&)>& f,
                                   std::vector<std::size_t> domain) {
  std::vector<Complex> dense(lattice->size());
  for (std::size_t p : domain) {
    if (p < dense.size()) dense[p] = f(lattice->window().point(p));
  }
  return TSequence(std::move(lattice), std::move(domain), std::move(dense), true);
}

Complex TSequence::at(const MultiIndex& n) const {
  const auto p = window().position(n);
  if (p < 0 || !contains(static_cast<std::size_t>(p))) {
    throw Error(Errc::domain, "index " + n.to_string() + " outside sequence domain");
  }
  return values_[static_cast<std::size_t>(p)];
}

double TSequence::sup_abs() const noexcept {
  double s = 0.0;
  for (std::size_t p : domain_) s = std::max(s, std::abs(values_[p]));
  return s;
}

bool TSequence::is_zero() const noexcept {
  for (std::size_t p : domain_) {
    if (values_[p] != Complex(0.0, 0.0)) return false;
  }
  return true;
}

TSequence TSequence::restricted(std::span<const std::size_t> domain) const {
  std::vector<std::size_t> dom;
  for (std::size_t p : domain) {
    if (p < mask_.size() && mask_[p]) dom.push_back(p);
  }
  if (dom.empty()) throw Error(Errc::empty_product, "restriction to a disjoint domain");
  return TSequence(lattice_, std::move(dom), values_, true);
}

TSequence TSequence::scaled(Complex s) const {
  std::vector<Complex> dense = values_;
  for (auto& v : dense) v *= s;
  return TSequence(lattice_, domain_, std::move(dense), true);
}

TSequence TSequence::conj() const {
  std::vector<Complex> dense = values_;
  for (auto& v : dense) v = std::conj(v);
  return TSequence(lattice_, domain_, std::move(dense), true);
}

namespace {

TSequence combine(const TSequence& a, const TSequence& b, double sign) {
  const std::size_t W = a.lattice()->size();
  std::vector<std::size_t> dom;
  std::vector<Complex> dense(W);
  for (std::size_t p = 0; p < W; ++p) {
    if (a.contains(p) || b.contains(p)) {
      dom.push_back(p);
      dense[p] = a[p] + sign * b[p];
    }
  }
  return TSequence::from_dense(a.lattice(), std::move(dom), std::move(dense));
}

}  // namespace

TSequence operator+(const TSequence& a, const TSequence& b) { return combine(a, b, 1.0); }
TSequence operator-(const TSequence& a, const TSequence& b) { return combine(a, b, -1.0); }

double sup_norm(const TSequence& a) { return a.sup_abs(); }

double t_norm(const TSequence& a) {
  const SpectralLattice& lat = *a.lattice();
  const auto dom = a.domain();
  const auto vals = a.dense_values();
  double diff = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const std::size_t p = dom[i];
    const Complex ap = vals[p];
    for (std::size_t j = i + 1; j < dom.size(); ++j) {
      const std::size_t q = dom[j];
      const double delta = std::abs(vals[q] - ap);
      if (delta == 0.0) continue;
      const double g = std::max(lat.inv_base_gap(p, q), lat.inv_base_gap(q, p));
      if (std::isinf(g)) {
        throw Error(Errc::degenerate_spectrum, "base gap below floor for offset " +
                                                   (lat.window().point(q) - lat.window().point(p)).to_string());
      }
      diff = std::max(diff, delta * g);
    }
  }
  return a.sup_abs() + diff;
}

TSequence shift(const TSequence& a, const MultiIndex& k) {
  const Window& w = a.window();
  std::vector<std::size_t> dom;
  std::vector<Complex> dense(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    const auto q = w.neighbor(p, k);
    if (q >= 0 && a.contains(static_cast<std::size_t>(q))) {
      dom.push_back(p);
      dense[p] = a[static_cast<std::size_t>(q)];
    }
  }
  if (dom.empty()) throw Error(Errc::empty_shift, "shift by " + k.to_string() + " leaves no domain");
  return TSequence::from_dense(a.lattice(), std::move(dom), std::move(dense));
}

TSequence pointwise_product(const TSequence& a, const TSequence& b) {
  const std::size_t W = a.lattice()->size();
  std::vector<std::size_t> dom;
  std::vector<Complex> dense(W);
  for (std::size_t p = 0; p < W; ++p) {
    if (a.contains(p) && b.contains(p)) {
      dom.push_back(p);
      dense[p] = a[p] * b[p];
    }
  }
  if (dom.empty()) throw Error(Errc::empty_product, "sequences have disjoint domains");
  return TSequence::from_dense(a.lattice(), std::move(dom), std::move(dense));
}

TSequence reciprocal_difference(const LatticePtr& lattice, const MultiIndex& k, const TSequence* correction) {
  if (k.is_zero()) throw Error(Errc::invalid_offset, "reciprocal difference needs k != 0");
  const Window& w = lattice->window();
  const auto lam = lattice->eigenvalues();
  std::vector<std::size_t> dom;
  std::vector<Complex> dense(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    const auto qs = w.neighbor(p, k);
    if (qs < 0) continue;
    const auto q = static_cast<std::size_t>(qs);
    Complex denom = lam[q] - lam[p];
    if (correction) {
      if (!correction->contains(p) || !correction->contains(q)) continue;
      denom += (*correction)[q] - (*correction)[p];
    }
    if (std::abs(denom) < lattice->denom_floor()) {
      throw Error(Errc::near_degeneracy, "denominator below floor at n=" + w.point(p).to_string() +
                                             " k=" + k.to_string());
    }
    dom.push_back(p);
    dense[p] = 1.0 / denom;
  }
  if (dom.empty()) throw Error(Errc::empty_shift, "offset " + k.to_string() + " leaves no domain");
  return TSequence::from_dense(lattice, std::move(dom), std::move(dense));
}

}  // namespace kamspec
