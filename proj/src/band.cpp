#include "kamspec/band.hpp"

#include <cmath>
#include <limits>

#include "kamspec/constants.hpp"
#include "kamspec/error.hpp"

namespace kamspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double weight(double alpha, const MultiIndex& k) {
  const int n = l1_norm(k);
  return n == 0 ? 1.0 : std::exp(alpha * n);
}

}  // namespace

BandOperator::BandOperator(LatticePtr lattice, double alpha_hint)
    : lattice_(std::move(lattice)), alpha_hint_(alpha_hint) {
  if (!lattice_) throw Error(Errc::domain, "operator needs a lattice");
}

BandOperator BandOperator::identity(LatticePtr lattice) {
  BandOperator out(lattice, kInf);
  out.diagonals_.emplace(MultiIndex::zero(lattice->dim()), TSequence::constant(lattice, 1.0));
  return out;
}

BandOperator BandOperator::zero(LatticePtr lattice) { return BandOperator(std::move(lattice), kInf); }

BandOperator BandOperator::diagonal(const TSequence& values) {
  BandOperator out(values.lattice(), kInf);
  out.set_diagonal(MultiIndex::zero(values.lattice()->dim()), values);
  return out;
}

BandOperator BandOperator::from_dense(LatticePtr lattice, const Eigen::MatrixXcd& m, double drop_tol) {
  const Window& w = lattice->window();
  const auto W = static_cast<Eigen::Index>(w.size());
  if (m.rows() != W || m.cols() != W) throw Error(Errc::size, "dense matrix does not match the window");
  std::map<MultiIndex, std::vector<Complex>> acc;
  for (Eigen::Index r = 0; r < W; ++r) {
    for (Eigen::Index c = 0; c < W; ++c) {
      const Complex v = m(r, c);
      if (std::abs(v) <= drop_tol) continue;
      const MultiIndex k = w.point(static_cast<std::size_t>(c)) - w.point(static_cast<std::size_t>(r));
      auto [it, fresh] = acc.try_emplace(k);
      if (fresh) it->second.assign(w.size(), Complex(0.0, 0.0));
      it->second[static_cast<std::size_t>(r)] = v;
    }
  }
  BandOperator out(lattice);
  for (auto& [k, dense] : acc) {
    out.diagonals_.emplace(k, TSequence::from_dense(lattice, shifted_domain(w, k), std::move(dense)));
  }
  return out;
}

void BandOperator::set_diagonal(const MultiIndex& k, const TSequence& values) {
  if (values.lattice() != lattice_) throw Error(Errc::domain, "diagonal built on a different lattice");
  auto dom = shifted_domain(window(), k);
  if (dom.empty()) throw Error(Errc::invalid_offset, "offset " + k.to_string() + " does not fit the window");
  std::vector<Complex> dense(window().size());
  for (std::size_t p : values.domain()) {
    if (window().neighbor(p, k) < 0) {
      throw Error(Errc::invalid_offset, "diagonal " + k.to_string() + " has entries outside its shifted domain");
    }
    dense[p] = values[p];
  }
  diagonals_.insert_or_assign(k, TSequence::from_dense(lattice_, std::move(dom), std::move(dense)));
}

const TSequence* BandOperator::find(const MultiIndex& k) const {
  auto it = diagonals_.find(k);
  return it == diagonals_.end() ? nullptr : &it->second;
}

Complex BandOperator::entry(std::size_t row, std::size_t col) const {
  const TSequence* s = find(window().point(col) - window().point(row));
  return s ? (*s)[row] : Complex(0.0, 0.0);
}

bool BandOperator::is_diagonal() const noexcept {
  for (const auto& [k, s] : diagonals_) {
    if (!k.is_zero() && !s.is_zero()) return false;
  }
  return true;
}

int BandOperator::bandwidth() const noexcept {
  int b = 0;
  for (const auto& [k, s] : diagonals_) b = std::max(b, l1_norm(k));
  return b;
}

BandOperator BandOperator::scaled(Complex s) const {
  BandOperator out(lattice_, alpha_hint_);
  for (const auto& [k, seq] : diagonals_) out.diagonals_.emplace(k, seq.scaled(s));
  return out;
}

BandOperator BandOperator::adjoint() const {
  BandOperator out(lattice_, alpha_hint_);
  const Window& w = window();
  for (const auto& [k, seq] : diagonals_) {
    // (A*)_{n, n-k} = conj(A_{n-k, n}) = conj((A_k)_{n-k})
    const MultiIndex mk = -k;
    auto dom = shifted_domain(w, mk);
    std::vector<Complex> dense(w.size());
    for (std::size_t p : dom) dense[p] = std::conj(seq[static_cast<std::size_t>(w.neighbor(p, mk))]);
    out.diagonals_.emplace(mk, TSequence::from_dense(lattice_, std::move(dom), std::move(dense)));
  }
  return out;
}

BandOperator operator+(const BandOperator& a, const BandOperator& b) {
  BandOperator out = a;
  out.alpha_hint_ = std::min(a.alpha_hint_, b.alpha_hint_);
  for (const auto& [k, seq] : b.diagonals_) {
    auto it = out.diagonals_.find(k);
    if (it == out.diagonals_.end()) {
      out.diagonals_.emplace(k, seq);
    } else {
      it->second = it->second + seq;
    }
  }
  return out;
}

BandOperator operator-(const BandOperator& a, const BandOperator& b) { return a + b.scaled(-1.0); }

std::vector<std::pair<MultiIndex, double>> alpha_norm_breakdown(const BandOperator& a, double alpha) {
  if (!(alpha >= 0.0)) throw Error(Errc::domain, "alpha must be >= 0");
  std::vector<std::pair<MultiIndex, double>> out;
  for (const auto& [k, seq] : a.diagonals()) {
    const double t = t_norm(seq);
    if (t == 0.0) {
      out.emplace_back(k, 0.0);
    } else if (k.is_zero()) {
      out.emplace_back(k, t);
    } else {
      out.emplace_back(k, std::isinf(alpha) ? kInf : weight(alpha, k) * t);
    }
  }
  return out;
}

double alpha_norm(const BandOperator& a, double alpha) {
  double s = 0.0;
  for (const auto& [k, v] : alpha_norm_breakdown(a, alpha)) s = std::max(s, v);
  return s;
}

BandOperator diagonal_part(const BandOperator& a) {
  BandOperator out(a.lattice(), kInf);
  if (const TSequence* s = a.find(MultiIndex::zero(a.lattice()->dim()))) out.set_diagonal(MultiIndex::zero(a.lattice()->dim()), *s);
  return out;
}

BandOperator off_diagonal_part(const BandOperator& a) {
  BandOperator out(a.lattice(), a.alpha_hint());
  for (const auto& [k, s] : a.diagonals()) {
    if (!k.is_zero()) out.set_diagonal(k, s);
  }
  return out;
}

BandOperator compose(const BandOperator& x, const BandOperator& y, double alpha, double delta,
                     const ComposeOptions& opts) {
  if (!(delta > 0.0) || !(delta < alpha)) throw Error(Errc::invalid_loss, "composition needs 0 < delta < alpha");
  if (x.lattice() != y.lattice()) throw Error(Errc::domain, "operators live on different lattices");
  const LatticePtr& lat = x.lattice();
  const Window& w = lat->window();

  std::map<MultiIndex, std::vector<Complex>> acc;
  for (const auto& [l, xl] : x.diagonals()) {
    for (const auto& [m, ym] : y.diagonals()) {
      const MultiIndex k = l + m;
      std::vector<Complex>* out = nullptr;
      for (std::size_t p : xl.domain()) {
        const Complex xv = xl[p];
        if (xv == Complex(0.0, 0.0)) continue;
        const auto q = static_cast<std::size_t>(w.neighbor(p, l));
        if (!ym.contains(q)) continue;
        const Complex yv = ym[q];
        if (yv == Complex(0.0, 0.0)) continue;
        if (!out) {
          auto [it, fresh] = acc.try_emplace(k);
          if (fresh) it->second.assign(w.size(), Complex(0.0, 0.0));
          out = &it->second;
        }
        (*out)[p] += xv * yv;
      }
    }
  }

  const double beta = alpha - delta;
  const double gmax = lat->max_inv_base_gap();
  struct Candidate {
    MultiIndex k;
    TSequence seq;
    double wsup;
  };
  std::vector<Candidate> cands;
  double scale_lb = 0.0;
  for (auto& [k, dense] : acc) {
    double sup = 0.0;
    for (const auto& v : dense) sup = std::max(sup, std::abs(v));
    if (sup == 0.0) continue;
    const double ws = weight(beta, k) * sup;
    scale_lb = std::max(scale_lb, ws);
    cands.push_back({k, TSequence::from_dense(lat, shifted_domain(w, k), std::move(dense)), ws});
  }

  BandOperator result(lat, beta);
  if (cands.empty()) return result;

  // Diagonals whose weighted norm cannot reach the prune level are dropped without a full norm evaluation.
  std::vector<std::pair<const Candidate*, double>> kept;
  double scale = 0.0;
  for (const auto& c : cands) {
    if (c.wsup * (1.0 + 2.0 * gmax) < opts.prune_floor * scale_lb) continue;
    const double wn = weight(beta, c.k) * t_norm(c.seq);
    scale = std::max(scale, wn);
    kept.emplace_back(&c, wn);
  }
  for (const auto& [c, wn] : kept) {
    if (wn < opts.prune_floor * scale) continue;
    result.set_diagonal(c->k, c->seq);
  }
  return result;
}

NeumannResult neumann_series(const BandOperator& x, double alpha, double delta, const NeumannOptions& opts) {
  if (!(delta > 0.0) || !(delta < alpha) || delta > 1.0) {
    throw Error(Errc::invalid_loss, "Neumann inversion needs 0 < delta <= 1 and delta < alpha");
  }
  const LatticePtr& lat = x.lattice();
  const BandOperator I = BandOperator::identity(lat);
  const BandOperator N = I - x;
  const double n0 = alpha_norm(N, alpha);
  const double threshold = std::pow(delta / 3.0, lat->dim());
  NeumannResult res{I, 0, n0 < threshold};
  if (opts.enforce_precondition && !res.precondition_met) {
    throw Error(Errc::not_invertible, "||X - I||_alpha = " + std::to_string(n0) + " is not below (delta/3)^d = " +
                                          std::to_string(threshold));
  }
  if (n0 == 0.0) return res;

  const double beta = alpha - delta;
  const double first = alpha_norm(N, beta);
  res.inverse = I + N;
  res.terms = 1;
  if (first == 0.0) return res;
  BandOperator term = N;
  const ComposeOptions copts{opts.prune_floor};
  for (int l = 2; l <= opts.max_terms; ++l) {
    term = compose(term, N, alpha, delta, copts);
    const double tn = alpha_norm(term, beta);
    if (!std::isfinite(tn) || tn > 1e12 * first) {
      throw Error(Errc::divergence, "Neumann series grows at term " + std::to_string(l));
    }
    res.inverse = res.inverse + term;
    res.terms = l;
    if (tn < opts.series_tol * first) {
      res.inverse.set_alpha_hint(beta);
      return res;
    }
  }
  throw Error(Errc::divergence, "Neumann series did not settle within " + std::to_string(opts.max_terms) + " terms");
}

BandOperator neumann_inverse(const BandOperator& x, double alpha, double delta, const NeumannOptions& opts) {
  return neumann_series(x, alpha, delta, opts).inverse;
}

double operator_norm_bound(const BandOperator& a, double alpha) {
  if (!(alpha > 0.0)) throw Error(Errc::domain, "alpha must be > 0");
  if (std::isinf(alpha)) return alpha_norm(a, alpha);
  return q_factor(alpha, a.lattice()->dim()) * alpha_norm(a, alpha);
}

Eigen::MatrixXcd to_dense(const BandOperator& a) {
  const Window& w = a.window();
  if (w.size() > kMaxDenseSide) throw Error(Errc::size, "window too large for dense export");
  const auto W = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(W, W);
  for (const auto& [k, seq] : a.diagonals()) {
    for (std::size_t p : seq.domain()) {
      m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(w.neighbor(p, k))) = seq[p];
    }
  }
  return m;
}

Eigen::VectorXcd apply(const BandOperator& a, const Eigen::VectorXcd& v) {
  const Window& w = a.window();
  if (static_cast<std::size_t>(v.size()) != w.size()) throw Error(Errc::size, "vector does not match the window");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (const auto& [k, seq] : a.diagonals()) {
    for (std::size_t p : seq.domain()) {
      out(static_cast<Eigen::Index>(p)) += seq[p] * v(w.neighbor(p, k));
    }
  }
  return out;
}

}  // namespace kamspec
