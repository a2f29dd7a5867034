#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kamspec {

inline constexpr int kMaxDim = 4;

/// A point of Z^d, d <= kMaxDim. Ordering is lexicographic.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim);
  MultiIndex(std::initializer_list<int> coords);
  explicit MultiIndex(std::span<const int> coords);

  static MultiIndex zero(int dim) { return MultiIndex(dim); }
  /// Unit vector e_axis.
  static MultiIndex unit(int dim, int axis, int sign = 1);

  int dim() const noexcept { return dim_; }
  int operator[](int i) const noexcept { return coords_[static_cast<std::size_t>(i)]; }
  int& operator[](int i) noexcept { return coords_[static_cast<std::size_t>(i)]; }

  bool is_zero() const noexcept;

  MultiIndex operator-() const;
  MultiIndex& operator+=(const MultiIndex& rhs);
  MultiIndex& operator-=(const MultiIndex& rhs);
  friend MultiIndex operator+(MultiIndex lhs, const MultiIndex& rhs) { return lhs += rhs; }
  friend MultiIndex operator-(MultiIndex lhs, const MultiIndex& rhs) { return lhs -= rhs; }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) noexcept;
  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) noexcept;

  /// Semicolon-joined coordinates, e.g. "1;-2".
  std::string to_string() const;
  static MultiIndex parse(const std::string& text);

 private:
  std::array<int, kMaxDim> coords_{};
  int dim_ = 0;
};

/// |k| = |k_1| + ... + |k_d|
int l1_norm(const MultiIndex& k) noexcept;
int linf_norm(const MultiIndex& k) noexcept;

enum class WindowShape { box, ball };

/// Finite, negation-symmetric truncation of Z^d: the l-infinity box or l1 ball of
/// radius R. Points are enumerated lexicographically and addressed by position.
class Window {
 public:
  Window(int dim, int radius, WindowShape shape = WindowShape::box,
         std::optional<int> interior_radius = std::nullopt);

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  int interior_radius() const noexcept { return interior_radius_; }
  int buffer() const noexcept { return radius_ - interior_radius_; }
  WindowShape shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return points_.size(); }

  const MultiIndex& point(std::size_t pos) const { return points_[pos]; }
  const std::vector<MultiIndex>& points() const noexcept { return points_; }

  bool contains(const MultiIndex& n) const noexcept;
  bool is_interior(const MultiIndex& n) const noexcept;
  /// Position of n in enumeration order, or -1 when outside.
  std::ptrdiff_t position(const MultiIndex& n) const noexcept;
  /// Position of point(pos) + k, or -1 when outside.
  std::ptrdiff_t neighbor(std::size_t pos, const MultiIndex& k) const noexcept;

  /// Positions of the interior points, increasing.
  std::vector<std::size_t> interior_positions() const;

  /// Copy with a different interior radius.
  Window with_interior(int interior_radius) const;

  friend bool operator==(const Window& a, const Window& b) noexcept {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_ && a.shape_ == b.shape_;
  }

 private:
  bool within(const MultiIndex& n, int r) const noexcept;

  int dim_;
  int radius_;
  WindowShape shape_;
  int interior_radius_;
  std::vector<MultiIndex> points_;
  std::vector<std::int32_t> lookup_;  // box of side 2R+1 -> position or -1
};

std::vector<MultiIndex> enumerate_window(const Window& window);

/// {n in window : n + k in window}, as positions in enumeration order.
std::vector<std::size_t> shifted_domain(const Window& window, const MultiIndex& k);

/// Interior radius that leaves a buffer of ceil(4 / decay) sites, clamped at 0.
int default_interior_radius(int radius, double decay);

}  // namespace kamspec
