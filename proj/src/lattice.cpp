#include "kamspec/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "kamspec/error.hpp"

namespace kamspec {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_window: return "invalid-window";
    case Errc::degenerate_spectrum: return "degenerate-spectrum";
    case Errc::empty_shift: return "empty-shift";
    case Errc::empty_product: return "empty-product";
    case Errc::near_degeneracy: return "near-degeneracy";
    case Errc::invalid_offset: return "invalid-offset";
    case Errc::invalid_loss: return "invalid-loss";
    case Errc::not_invertible: return "not-invertible-by-neumann";
    case Errc::divergence: return "divergence";
    case Errc::pole: return "pole";
    case Errc::flat_h: return "flat-h";
    case Errc::resonance: return "resonance";
    case Errc::domain: return "domain";
    case Errc::overflow: return "overflow";
    case Errc::profile: return "profile";
    case Errc::rigor_violation: return "rigor-violation";
    case Errc::degenerate_column: return "degenerate-column";
    case Errc::symmetry: return "symmetry";
    case Errc::oracle_failure: return "oracle-failure";
    case Errc::pairing: return "pairing";
    case Errc::size: return "size";
    case Errc::config: return "config";
  }
  return "unknown";
}

MultiIndex::MultiIndex(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(Errc::invalid_window, "dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
}

MultiIndex::MultiIndex(std::initializer_list<int> coords)
    : MultiIndex(std::span<const int>(coords.begin(), coords.size())) {}

MultiIndex::MultiIndex(std::span<const int> coords) : MultiIndex(static_cast<int>(coords.size())) {
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

MultiIndex MultiIndex::unit(int dim, int axis, int sign) {
  MultiIndex k(dim);
  k[axis] = sign;
  return k;
}

bool MultiIndex::is_zero() const noexcept {
  for (int i = 0; i < dim_; ++i) {
    if (coords_[static_cast<std::size_t>(i)] != 0) return false;
  }
  return true;
}

MultiIndex MultiIndex::operator-() const {
  MultiIndex out = *this;
  for (int i = 0; i < dim_; ++i) out[i] = -out[i];
  return out;
}

MultiIndex& MultiIndex::operator+=(const MultiIndex& rhs) {
  for (int i = 0; i < dim_; ++i) (*this)[i] += rhs[i];
  return *this;
}

MultiIndex& MultiIndex::operator-=(const MultiIndex& rhs) {
  for (int i = 0; i < dim_; ++i) (*this)[i] -= rhs[i];
  return *this;
}

bool operator==(const MultiIndex& a, const MultiIndex& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (int i = 0; i < a.dim_; ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) noexcept {
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  for (int i = 0; i < a.dim_; ++i) {
    if (auto c = a[i] <=> b[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::string MultiIndex::to_string() const {
  std::string out;
  for (int i = 0; i < dim_; ++i) {
    if (i > 0) out += ';';
    out += std::to_string((*this)[i]);
  }
  return out;
}

MultiIndex MultiIndex::parse(const std::string& text) {
  std::vector<int> coords;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw Error(Errc::config, "malformed multi-index '" + text + "'");
    }
    coords.push_back(value);
  }
  if (coords.empty()) throw Error(Errc::config, "empty multi-index");
  return MultiIndex(std::span<const int>(coords));
}

int l1_norm(const MultiIndex& k) noexcept {
  int s = 0;
  for (int i = 0; i < k.dim(); ++i) s += std::abs(k[i]);
  return s;
}

int linf_norm(const MultiIndex& k) noexcept {
  int s = 0;
  for (int i = 0; i < k.dim(); ++i) s = std::max(s, std::abs(k[i]));
  return s;
}

Window::Window(int dim, int radius, WindowShape shape, std::optional<int> interior_radius)
    : dim_(dim), radius_(radius), shape_(shape), interior_radius_(interior_radius.value_or(radius)) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(Errc::invalid_window, "dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (radius < 0) throw Error(Errc::invalid_window, "negative radius");
  if (interior_radius_ < 0 || interior_radius_ > radius_) {
    throw Error(Errc::invalid_window, "interior radius must lie in [0, radius]");
  }

  const int side = 2 * radius + 1;
  std::size_t box = 1;
  for (int i = 0; i < dim; ++i) box *= static_cast<std::size_t>(side);
  lookup_.assign(box, -1);

  // Odometer over the box, first coordinate slowest: lexicographic order.
  MultiIndex n(dim);
  for (int i = 0; i < dim; ++i) n[i] = -radius;
  for (std::size_t flat = 0; flat < box; ++flat) {
    if (within(n, radius)) {
      lookup_[flat] = static_cast<std::int32_t>(points_.size());
      points_.push_back(n);
    }
    for (int i = dim - 1; i >= 0; --i) {
      if (++n[i] <= radius) break;
      n[i] = -radius;
    }
  }
}

bool Window::within(const MultiIndex& n, int r) const noexcept {
  return shape_ == WindowShape::box ? linf_norm(n) <= r : l1_norm(n) <= r;
}

bool Window::contains(const MultiIndex& n) const noexcept {
  return n.dim() == dim_ && within(n, radius_);
}

bool Window::is_interior(const MultiIndex& n) const noexcept {
  return n.dim() == dim_ && within(n, interior_radius_);
}

std::ptrdiff_t Window::position(const MultiIndex& n) const noexcept {
  if (n.dim() != dim_) return -1;
  const int side = 2 * radius_ + 1;
  std::size_t flat = 0;
  for (int i = 0; i < dim_; ++i) {
    const int c = n[i];
    if (c < -radius_ || c > radius_) return -1;
    flat = flat * static_cast<std::size_t>(side) + static_cast<std::size_t>(c + radius_);
  }
  return lookup_[flat];
}

std::ptrdiff_t Window::neighbor(std::size_t pos, const MultiIndex& k) const noexcept {
  return position(points_[pos] + k);
}

std::vector<std::size_t> Window::interior_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < points_.size(); ++p) {
    if (within(points_[p], interior_radius_)) out.push_back(p);
  }
  return out;
}

Window Window::with_interior(int interior_radius) const {
  return Window(dim_, radius_, shape_, interior_radius);
}

std::vector<MultiIndex> enumerate_window(const Window& window) { return window.points(); }

std::vector<std::size_t> shifted_domain(const Window& window, const MultiIndex& k) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < window.size(); ++p) {
    if (window.neighbor(p, k) >= 0) out.push_back(p);
  }
  return out;
}

int default_interior_radius(int radius, double decay) {
  if (!(decay > 0.0)) return 0;
  const int buffer = static_cast<int>(std::ceil(4.0 / decay));
  return std::max(0, radius - buffer);
}

}  // namespace kamspec
