#include "kamspec/perturbation.hpp"

#include <cmath>
#include <limits>

#include "kamspec/error.hpp"

namespace kamspec {

namespace {

double horner(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

Complex evaluate(const ProfileFn& f, double lambda, const MultiIndex& k) {
  Complex v;
  try {
    v = f(lambda);
  } catch (const std::exception& e) {
    throw Error(Errc::profile, "profile f_" + k.to_string() + " failed: " + e.what());
  }
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    throw Error(Errc::profile, "profile f_" + k.to_string() + " is not finite at lambda=" + std::to_string(lambda));
  }
  return v;
}

}  // namespace

ProfileExpr::Kind ProfileExpr::parse_kind(const std::string& name) {
  if (name == "polynomial") return Kind::polynomial;
  if (name == "sin") return Kind::sin;
  if (name == "cos") return Kind::cos;
  if (name == "rational") return Kind::rational;
  if (name == "tanh") return Kind::tanh;
  throw Error(Errc::config, "unknown profile expression '" + name + "'");
}

ProfileFn ProfileExpr::compile() const {
  const ProfileExpr e = *this;
  switch (kind) {
    case Kind::polynomial:
      return [e](double x) { return e.amplitude * horner(e.coeffs, x); };
    case Kind::sin:
      return [e](double x) { return e.amplitude * std::sin(e.frequency * x + e.phase); };
    case Kind::cos:
      return [e](double x) { return e.amplitude * std::cos(e.frequency * x + e.phase); };
    case Kind::tanh:
      return [e](double x) { return e.amplitude * std::tanh(e.frequency * x + e.phase); };
    case Kind::rational:
      return [e](double x) {
        const double den = horner(e.denom, x);
        if (den == 0.0) throw Error(Errc::profile, "rational profile has a zero denominator");
        return e.amplitude * (horner(e.coeffs, x) / den);
      };
  }
  return [](double) { return Complex(0.0, 0.0); };
}

bool in_upper_half(const MultiIndex& k) noexcept {
  for (int i = 0; i < k.dim(); ++i) {
    if (k[i] != 0) return k[i] > 0;
  }
  return true;
}

BandOperator laplacian(const LatticePtr& lattice) {
  BandOperator out(lattice, std::numeric_limits<double>::infinity());
  const int d = lattice->dim();
  for (int axis = 0; axis < d; ++axis) {
    for (int sign : {-1, 1}) {
      const MultiIndex k = MultiIndex::unit(d, axis, sign);
      const auto dom = shifted_domain(lattice->window(), k);
      if (dom.empty()) continue;
      out.set_diagonal(k, TSequence::constant(lattice, 1.0, dom));
    }
  }
  return out;
}

BandOperator build_perturbation(const PerturbationSpec& spec, const LatticePtr& lattice) {
  const Window& w = lattice->window();
  const auto lam = lattice->eigenvalues();
  switch (spec.kind) {
    case PerturbationKind::laplacian: {
      BandOperator v = laplacian(lattice);
      v.set_alpha_hint(spec.alpha);
      return v;
    }
    case PerturbationKind::explicit_entries: {
      std::map<MultiIndex, std::vector<Complex>> acc;
      for (const auto& e : spec.entries) {
        const auto p = w.position(e.n);
        if (p < 0 || w.neighbor(static_cast<std::size_t>(p), e.k) < 0) continue;
        auto [it, fresh] = acc.try_emplace(e.k);
        if (fresh) it->second.assign(w.size(), Complex(0.0, 0.0));
        it->second[static_cast<std::size_t>(p)] = e.value;
      }
      BandOperator v(lattice, spec.alpha);
      for (auto& [k, dense] : acc) {
        v.set_diagonal(k, TSequence::from_dense(lattice, shifted_domain(w, k), std::move(dense)));
      }
      return v;
    }
    case PerturbationKind::profile: {
      BandOperator v(lattice, spec.alpha);
      for (const auto& term : spec.profile) {
        if (term.k.dim() != w.dim()) throw Error(Errc::profile, "profile offset has the wrong dimension");
        if (spec.hermitian && !in_upper_half(term.k)) {
          throw Error(Errc::profile, "offset " + term.k.to_string() +
                                         " is fixed by the hermitian relation; give its partner instead");
        }
        const auto dom = shifted_domain(w, term.k);
        if (dom.empty()) continue;
        std::vector<Complex> dense(w.size());
        for (std::size_t p : dom) {
          dense[p] = evaluate(term.f, lam[p], term.k);
          if (spec.hermitian && term.k.is_zero()) {
            if (std::abs(dense[p].imag()) > 1e-12 * std::max(1.0, std::abs(dense[p]))) {
              throw Error(Errc::profile, "hermitian profile needs a real f_0");
            }
            dense[p] = dense[p].real();
          }
        }
        const TSequence seq = TSequence::from_dense(lattice, dom, dense);
        if (const TSequence* old = v.find(term.k)) {
          v.set_diagonal(term.k, *old + seq);
        } else {
          v.set_diagonal(term.k, seq);
        }
      }
      if (spec.hermitian) {
        // (V_{-k})_m = conj((V_k)_{m-k})
        std::vector<std::pair<MultiIndex, TSequence>> partners;
        for (const auto& [k, seq] : v.diagonals()) {
          if (k.is_zero()) continue;
          const MultiIndex mk = -k;
          auto dom = shifted_domain(w, mk);
          std::vector<Complex> dense(w.size());
          for (std::size_t p : dom) dense[p] = std::conj(seq[static_cast<std::size_t>(w.neighbor(p, mk))]);
          partners.emplace_back(mk, TSequence::from_dense(lattice, std::move(dom), std::move(dense)));
        }
        for (auto& [k, seq] : partners) v.set_diagonal(k, seq);
      }
      return v;
    }
  }
  throw Error(Errc::config, "unknown perturbation kind");
}

A4Report verify_assumption_A4(const BandOperator& v, double alpha, std::optional<int> kmax, double prune_floor) {
  A4Report rep;
  rep.alpha = alpha;
  const auto all = alpha_norm_breakdown(v, alpha);
  double top = 0.0;
  for (const auto& [k, x] : all) top = std::max(top, x);
  if (kmax) {
    rep.kmax = *kmax;
  } else {
    rep.kmax = 0;
    for (const auto& [k, x] : all) {
      if (x > prune_floor * top) rep.kmax = std::max(rep.kmax, l1_norm(k));
    }
  }
  for (const auto& [k, x] : all) {
    if (l1_norm(k) > rep.kmax) continue;
    rep.per_offset.emplace_back(k, x);
    rep.norm = std::max(rep.norm, x);
  }
  return rep;
}

HermitianCheck hermitian_check(const BandOperator& v) {
  HermitianCheck out;
  const Window& w = v.window();
  double scale = 0.0;
  for (const auto& [k, seq] : v.diagonals()) scale = std::max(scale, seq.sup_abs());
  out.witness_n = MultiIndex::zero(w.dim());
  out.witness_k = MultiIndex::zero(w.dim());
  for (const auto& [k, seq] : v.diagonals()) {
    const TSequence* partner = v.find(-k);
    for (std::size_t p = 0; p < w.size(); ++p) {
      const auto q = w.neighbor(p, k);
      if (q < 0) continue;
      const Complex mine = seq[p];
      const Complex theirs = partner ? (*partner)[static_cast<std::size_t>(q)] : Complex(0.0, 0.0);
      const double viol = std::abs(mine - std::conj(theirs));
      if (viol > out.worst_violation) {
        out.worst_violation = viol;
        out.witness_n = w.point(p);
        out.witness_k = k;
      }
    }
  }
  out.hermitian = out.worst_violation <= 1e-12 * (scale > 0.0 ? scale : 1.0);
  return out;
}

double c1_grid_norm(const std::function<Complex(double)>& g, double lo, double hi, int points_per_unit) {
  if (!(hi > lo) || points_per_unit < 1) throw Error(Errc::domain, "empty C1 grid");
  const auto n = static_cast<long>(std::ceil((hi - lo) * points_per_unit));
  const double step = (hi - lo) / static_cast<double>(n);
  std::vector<Complex> vals(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) vals[static_cast<std::size_t>(i)] = g(lo + step * static_cast<double>(i));
  double sup = 0.0;
  double dsup = 0.0;
  for (long i = 0; i <= n; ++i) {
    sup = std::max(sup, std::abs(vals[static_cast<std::size_t>(i)]));
    const long a = std::max(0L, i - 1);
    const long b = std::min(n, i + 1);
    const Complex der = (vals[static_cast<std::size_t>(b)] - vals[static_cast<std::size_t>(a)]) /
                        (step * static_cast<double>(b - a));
    dsup = std::max(dsup, std::abs(der));
  }
  return sup + dsup;
}

double shaped_norm_bound(const PerturbationSpec& spec, const SpectrumModel& model, const Window& window,
                         double alpha, double a, int points_per_unit) {
  if (spec.kind != PerturbationKind::profile) throw Error(Errc::profile, "bound applies to profile perturbations");
  double lo = -0.5;
  double hi = 0.5;
  if (!model.periodic()) {
    lo = hi = 0.0;
    for (const auto& n : window.points()) {
      lo = std::min(lo, model.mu(n));
      hi = std::max(hi, model.mu(n));
    }
    lo -= 1.0;
    hi += 1.0;
  }
  double best = 0.0;
  for (const auto& term : spec.profile) {
    const auto g = [&](double x) { return term.f(model.h(x)); };
    const double wgt = l1_norm(term.k) == 0 ? 1.0 : std::exp(alpha * l1_norm(term.k));
    best = std::max(best, wgt * c1_grid_norm(g, lo, hi, points_per_unit));
  }
  return (1.0 + 1.0 / a) * best;
}

}  // namespace kamspec
