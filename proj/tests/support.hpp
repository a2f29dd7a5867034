#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "kamspec/band.hpp"
#include "kamspec/spectrum.hpp"
#include "kamspec/t_algebra.hpp"

namespace testing {

using kamspec::Complex;
using kamspec::MultiIndex;

inline const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

struct Gen {
  std::mt19937_64 eng;
  explicit Gen(std::uint64_t seed) : eng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  Complex complex(double scale) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

  MultiIndex index(int d, int r) {
    MultiIndex k(d);
    for (int i = 0; i < d; ++i) k[i] = integer(-r, r);
    return k;
  }

  std::vector<Complex> dense(std::size_t n, double scale) {
    std::vector<Complex> v(n);
    for (auto& x : v) x = complex(scale);
    return v;
  }
};

inline kamspec::SpectrumModel maryland(double c = 1.0, double gamma = 1.0) {
  return kamspec::SpectrumModel({kGolden}, {kamspec::Transform::tan_pi}, c, gamma);
}

inline kamspec::SpectrumModel linear(std::vector<double> omega) {
  return kamspec::SpectrumModel(std::move(omega), {kamspec::Transform::identity});
}

// Brute-force ||a||_T straight from the model's eigenvalues.
inline double brute_t_norm(const kamspec::TSequence& a) {
  const auto& lat = *a.lattice();
  const auto& w = lat.window();
  const auto& model = lat.model();
  const MultiIndex base = model.base_point();
  const double l0 = model.eigenvalue(base);
  double sup = 0.0;
  double diff = 0.0;
  for (std::size_t p : a.domain()) {
    sup = std::max(sup, std::abs(a[p]));
    for (std::size_t q : a.domain()) {
      if (p == q) continue;
      const MultiIndex j = w.point(q) - w.point(p);
      const double gap = std::abs(model.h(model.mu(base + j)) - l0);
      diff = std::max(diff, std::abs(a[q] - a[p]) / gap);
    }
  }
  return sup + diff;
}

inline kamspec::TSequence random_sequence(const kamspec::LatticePtr& lat, Gen& g, double scale) {
  return kamspec::TSequence::from_dense(lat, [&] {
    std::vector<std::size_t> d(lat->size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = i;
    return d;
  }(), g.dense(lat->size(), scale));
}

// Random band operator with diagonals |k| <= kmax, entry scale e^{-decay |k|}.
inline kamspec::BandOperator random_band(const kamspec::LatticePtr& lat, Gen& g, int kmax, double decay) {
  kamspec::BandOperator out(lat, decay);
  const auto& w = lat->window();
  const int d = w.dim();
  MultiIndex k(d);
  std::vector<MultiIndex> offsets;
  const auto rec = [&](auto&& self, int axis) -> void {
    if (axis == d) {
      if (kamspec::l1_norm(k) <= kmax) offsets.push_back(k);
      return;
    }
    for (int x = -kmax; x <= kmax; ++x) {
      k[axis] = x;
      self(self, axis + 1);
    }
  };
  rec(rec, 0);
  for (const auto& off : offsets) {
    auto dom = kamspec::shifted_domain(w, off);
    if (dom.empty()) continue;
    const double s = std::exp(-decay * kamspec::l1_norm(off));
    out.set_diagonal(off, kamspec::TSequence::from_dense(lat, std::move(dom), g.dense(w.size(), s)));
  }
  return out;
}

inline double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
