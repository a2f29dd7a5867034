#include "kamspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kamspec/error.hpp"

namespace kamspec {

namespace {

constexpr double kPoleMargin = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool within_slack(double value, double bound) { return value <= bound * (1.0 + 1e-12); }

// Eigenvalues of the window in enumeration order.
std::vector<double> window_eigenvalues(const SpectrumModel& model, const Window& window) {
  std::vector<double> out(window.size());
  for (std::size_t p = 0; p < window.size(); ++p) out[p] = model.eigenvalue(window.point(p));
  return out;
}

// Nonzero offsets with |k| <= kmax that fit inside the window, lexicographic.
std::vector<MultiIndex> offsets_up_to(const Window& window, int kmax) {
  std::vector<MultiIndex> out;
  if (kmax <= 0) return out;
  const Window ball(window.dim(), kmax, WindowShape::ball);
  for (const auto& k : ball.points()) {
    if (k.is_zero() || linf_norm(k) > 2 * window.radius()) continue;
    out.push_back(k);
  }
  return out;
}

double gap_or_throw(double diff, double floor, const MultiIndex& n, const MultiIndex& k) {
  if (std::abs(diff) < floor) {
    throw Error(Errc::degenerate_spectrum,
                "eigenvalue gap below floor at n=" + n.to_string() + " k=" + k.to_string());
  }
  return diff;
}

double base_gap(const SpectrumModel& model, const MultiIndex& k, double floor) {
  const MultiIndex& b = model.base_point();
  return gap_or_throw(model.eigenvalue(b + k) - model.eigenvalue(b), floor, b, k);
}

}  // namespace

std::string to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::cubic: return "cubic";
    case Transform::tan_pi: return "tan_pi";
    case Transform::sawtooth: return "sawtooth";
  }
  return "identity";
}

Transform parse_transform(const std::string& name) {
  if (name == "identity") return Transform::identity;
  if (name == "cubic") return Transform::cubic;
  if (name == "tan_pi" || name == "tan") return Transform::tan_pi;
  if (name == "sawtooth") return Transform::sawtooth;
  throw Error(Errc::config, "unknown transform '" + name + "'");
}

std::string to_string(AssumptionId id) {
  switch (id) {
    case AssumptionId::A1: return "A1";
    case AssumptionId::A2: return "A2";
    case AssumptionId::A3: return "A3";
    case AssumptionId::A4: return "A4";
  }
  return "A1";
}

double wrap_unit(double x) noexcept { return x - std::ceil(x - 0.5); }

SpectrumModel::SpectrumModel(std::vector<double> omega, TransformSpec transform, double c, double gamma,
                             std::optional<MultiIndex> base_point)
    : omega_(std::move(omega)), transform_(transform), c_(c), gamma_(gamma) {
  if (omega_.empty() || omega_.size() > static_cast<std::size_t>(kMaxDim)) {
    throw Error(Errc::invalid_window, "frequency vector must have 1 to " + std::to_string(kMaxDim) + " entries");
  }
  for (double w : omega_) {
    if (!std::isfinite(w)) throw Error(Errc::domain, "non-finite frequency");
  }
  if (!(c_ >= 1.0) || !std::isfinite(c_)) throw Error(Errc::domain, "Diophantine constant c must be >= 1");
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw Error(Errc::domain, "Diophantine exponent must be > 0");
  if (transform_.kind == Transform::cubic && !(transform_.beta >= 0.0)) {
    throw Error(Errc::domain, "cubic coefficient must be >= 0");
  }
  base_point_ = base_point.value_or(MultiIndex::zero(dim()));
  if (base_point_.dim() != dim()) throw Error(Errc::invalid_window, "base point dimension mismatch");
}

bool SpectrumModel::periodic() const noexcept {
  return transform_.kind == Transform::tan_pi || transform_.kind == Transform::sawtooth;
}

SpectrumModel SpectrumModel::with_constants(double c, double gamma) const {
  return SpectrumModel(omega_, transform_, c, gamma, base_point_);
}

SpectrumModel SpectrumModel::with_omega(std::vector<double> omega) const {
  std::optional<MultiIndex> base;
  if (omega.size() == omega_.size()) base = base_point_;
  return SpectrumModel(std::move(omega), transform_, c_, gamma_, base);
}

double SpectrumModel::mu(const MultiIndex& n) const noexcept {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += omega_[static_cast<std::size_t>(i)] * n[i];
  return s;
}

double SpectrumModel::h(double x) const noexcept {
  switch (transform_.kind) {
    case Transform::identity: return x;
    case Transform::cubic: return x + transform_.beta * x * x * x;
    case Transform::tan_pi: return std::tan(std::numbers::pi * wrap_unit(x));
    case Transform::sawtooth: return wrap_unit(x);
  }
  return x;
}

double SpectrumModel::h_prime(double x) const noexcept {
  switch (transform_.kind) {
    case Transform::identity: return 1.0;
    case Transform::cubic: return 1.0 + 3.0 * transform_.beta * x * x;
    case Transform::tan_pi: {
      const double cs = std::cos(std::numbers::pi * wrap_unit(x));
      return std::numbers::pi / (cs * cs);
    }
    case Transform::sawtooth: return 1.0;
  }
  return 1.0;
}

double SpectrumModel::eigenvalue(const MultiIndex& n) const {
  const double x = mu(n);
  if (transform_.kind == Transform::tan_pi && std::abs(wrap_unit(x)) > 0.5 - kPoleMargin) {
    throw Error(Errc::pole, "tan_pi pole at n=" + n.to_string());
  }
  return h(x);
}

double degeneracy_floor(const SpectrumModel& model, const Window& window, double rel) {
  double scale = 0.0;
  for (const auto& n : window.points()) scale = std::max(scale, std::abs(model.eigenvalue(n)));
  if (scale == 0.0) scale = 1.0;
  return rel * scale;
}

AssumptionReport verify_assumption_A1(const SpectrumModel& model, const Window& window, int kmax) {
  const auto lam = window_eigenvalues(model, window);
  const double floor = degeneracy_floor(model, window);
  AssumptionReport rep;
  rep.id = AssumptionId::A1;
  rep.declared_c = model.c();
  for (const auto& k : offsets_up_to(window, kmax)) {
    double worst = 0.0;
    std::size_t arg = 0;
    for (std::size_t p = 0; p < window.size(); ++p) {
      const auto q = window.neighbor(p, k);
      if (q < 0) continue;
      const double g = 1.0 / std::abs(gap_or_throw(lam[static_cast<std::size_t>(q)] - lam[p], floor, window.point(p), k));
      if (g > worst) {
        worst = g;
        arg = p;
      }
    }
    const double ratio = worst / std::pow(static_cast<double>(l1_norm(k)), model.gamma());
    rep.per_offset.emplace_back(k, ratio);
    if (ratio > rep.worst_constant) {
      rep.worst_constant = ratio;
      rep.worst_witness = {window.point(arg), k};
    }
  }
  rep.passed = within_slack(rep.worst_constant, rep.declared_c);
  return rep;
}

AssumptionReport verify_assumption_A2(const SpectrumModel& model, const Window& window, int kmax) {
  const auto lam = window_eigenvalues(model, window);
  const double floor = degeneracy_floor(model, window);
  AssumptionReport rep;
  rep.id = AssumptionId::A2;
  rep.declared_c = model.c();
  for (const auto& k : offsets_up_to(window, kmax)) {
    const double weight = 1.0 + 1.0 / std::abs(base_gap(model, k, floor));
    double worst = 0.0;
    std::size_t arg = 0;
    for (std::size_t p = 0; p < window.size(); ++p) {
      const auto q = window.neighbor(p, k);
      if (q < 0) continue;
      const double g = 1.0 / std::abs(gap_or_throw(lam[static_cast<std::size_t>(q)] - lam[p], floor, window.point(p), k));
      if (g > worst) {
        worst = g;
        arg = p;
      }
    }
    const double ratio = worst / weight;
    rep.per_offset.emplace_back(k, ratio);
    if (ratio > rep.worst_constant) {
      rep.worst_constant = ratio;
      rep.worst_witness = {window.point(arg), k};
    }
  }
  rep.passed = within_slack(rep.worst_constant, rep.declared_c);
  return rep;
}

AssumptionReport verify_assumption_A3(const SpectrumModel& model, const Window& window, int kmax, int jmax) {
  const auto lam = window_eigenvalues(model, window);
  const double floor = degeneracy_floor(model, window);
  const auto ks = offsets_up_to(window, kmax);
  const auto js = offsets_up_to(window, jmax);
  std::vector<double> inv_base_j(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) inv_base_j[i] = 1.0 / base_gap(model, js[i], floor);

  AssumptionReport rep;
  rep.id = AssumptionId::A3;
  rep.declared_c = model.c();
  std::vector<double> r(window.size());
  std::vector<char> has(window.size());
  for (const auto& k : ks) {
    const double weight = 1.0 + 1.0 / std::abs(base_gap(model, k, floor));
    for (std::size_t p = 0; p < window.size(); ++p) {
      const auto q = window.neighbor(p, k);
      has[p] = q >= 0;
      if (has[p]) r[p] = 1.0 / gap_or_throw(lam[static_cast<std::size_t>(q)] - lam[p], floor, window.point(p), k);
    }
    double worst = 0.0;
    std::vector<MultiIndex> witness;
    for (std::size_t ji = 0; ji < js.size(); ++ji) {
      for (std::size_t p = 0; p < window.size(); ++p) {
        if (!has[p]) continue;
        const auto pj = window.neighbor(p, js[ji]);
        if (pj < 0 || !has[static_cast<std::size_t>(pj)]) continue;
        const double v = std::abs(inv_base_j[ji] * (r[static_cast<std::size_t>(pj)] - r[p]));
        if (v > worst) {
          worst = v;
          witness = {window.point(p), js[ji], k};
        }
      }
    }
    const double ratio = worst / weight;
    rep.per_offset.emplace_back(k, ratio);
    if (ratio > rep.worst_constant) {
      rep.worst_constant = ratio;
      rep.worst_witness = witness;
    }
  }
  rep.passed = within_slack(rep.worst_constant, rep.declared_c);
  return rep;
}

CertifiedConstant certify_constant(const SpectrumModel& model, const Window& window, std::optional<int> kmax,
                                   std::optional<int> jmax, double safety) {
  const int diam = 2 * window.radius();
  CertifiedConstant out;
  out.a1 = verify_assumption_A1(model, window, kmax.value_or(diam));
  out.a2 = verify_assumption_A2(model, window, kmax.value_or(diam));
  out.a3 = verify_assumption_A3(model, window, kmax.value_or(diam), jmax.value_or(diam));
  const double worst = std::max({out.a1.worst_constant, out.a2.worst_constant, out.a3.worst_constant});
  out.c = std::max(1.0, safety * worst);
  for (auto* rep : {&out.a1, &out.a2, &out.a3}) {
    rep->declared_c = out.c;
    rep->passed = within_slack(rep->worst_constant, out.c);
  }
  return out;
}

DiophantineScan diophantine_scan(std::span<const double> omega, const Window& window, double gamma, bool periodic) {
  if (static_cast<int>(omega.size()) != window.dim()) {
    throw Error(Errc::invalid_window, "frequency vector and window dimension differ");
  }
  DiophantineScan out;
  out.C_est = 0.0;
  out.witness = MultiIndex::zero(window.dim());
  for (const auto& k : window.points()) {
    if (k.is_zero()) continue;
    double dot = 0.0;
    double mag = 0.0;
    for (int i = 0; i < window.dim(); ++i) {
      dot += omega[static_cast<std::size_t>(i)] * k[i];
      mag += std::abs(omega[static_cast<std::size_t>(i)] * k[i]);
    }
    const double dist = periodic ? std::abs(dot - std::round(dot)) : std::abs(dot);
    if (dist <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + mag)) {
      throw Error(Errc::resonance, "resonant offset k=" + k.to_string());
    }
    const double value = 1.0 / (dist * std::pow(static_cast<double>(l1_norm(k)), gamma));
    if (value > out.C_est) {
      out.C_est = value;
      out.witness = k;
    }
  }
  return out;
}

HConditionReport check_h_conditions(const SpectrumModel& model, const HConditionOptions& opts) {
  if (!(opts.grid_step > 0.0)) throw Error(Errc::domain, "grid step must be positive");
  HConditionReport rep;
  rep.periodic_case = model.periodic();
  rep.diophantine_C = opts.diophantine_C;

  // Grid: multiples of the step; periodic models use the open interval (-1/2, 1/2).
  const double half = rep.periodic_case ? 0.5 : opts.x_range;
  auto m = static_cast<long>(std::floor(half / opts.grid_step + 1e-9));
  if (rep.periodic_case && m * opts.grid_step >= 0.5 - 1e-12) --m;
  std::vector<double> grid;
  for (long i = -m; i <= m; ++i) grid.push_back(static_cast<double>(i) * opts.grid_step);

  const auto hp = [&](double x) { return model.h_prime(x); };
  rep.a = kInf;
  for (double x : grid) rep.a = std::min(rep.a, std::abs(hp(x)));
  if (rep.a < 1e-12) throw Error(Errc::flat_h, "inf |h'| below floor");

  const auto bad = [&](double x) { return rep.periodic_case && std::abs(wrap_unit(x)) >= 0.5 - 1e-9; };

  // b: sup |d/dx 1/(h(x+y) - h(x))| / (1 + 1/|y|)
  double b = 0.0;
  for (double x : grid) {
    for (double y : grid) {
      if (y == 0.0 || bad(x + y)) continue;
      const double D = model.h(x + y) - model.h(x);
      if (D == 0.0) continue;
      const double deriv = std::abs((hp(x + y) - hp(x)) / (D * D));
      b = std::max(b, deriv / (1.0 + 1.0 / std::abs(y)));
    }
  }
  rep.b = b * opts.b_safety;

  if (model.transform().kind == Transform::tan_pi) {
    rep.hprime_max_unit = kInf;
  } else {
    double mx = 0.0;
    const auto steps = static_cast<long>(std::ceil(1.0 / opts.grid_step));
    for (long i = -steps; i <= steps; ++i) mx = std::max(mx, std::abs(hp(static_cast<double>(i) / steps)));
    rep.hprime_max_unit = mx;
  }

  if (!rep.periodic_case) {
    rep.c_formula = (1.0 + rep.b + rep.diophantine_C) / rep.a * (2.0 + rep.hprime_max_unit);
    return rep;
  }

  // delta_1: largest grid |y| such that every |y'| <= |y| keeps |G| <= (b/a)(1 + 1/|z|).
  const auto G = [&](double x, double y, double z) {
    return (1.0 / (model.h(y) - model.h(0.0))) *
           (1.0 / (model.h(x + y + z) - model.h(x + y)) - 1.0 / (model.h(x + z) - model.h(x)));
  };
  std::optional<double> delta1;
  for (long iy = 1; iy <= m; ++iy) {
    bool ok = true;
    for (double y : {iy * opts.grid_step, -iy * opts.grid_step}) {
      for (double x : grid) {
        if (bad(x + y)) continue;
        for (double z : grid) {
          if (z == 0.0 || bad(x + y + z) || bad(x + z)) continue;
          const double g = std::abs(G(x, y, z));
          if (!(g <= (rep.b / rep.a) * (1.0 + 1.0 / std::abs(z)))) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (!ok) break;
    delta1 = static_cast<double>(iy) * opts.grid_step;
  }
  rep.delta1 = delta1;
  if (!delta1) {
    rep.c_formula = kInf;
    return rep;
  }
  double a_delta = 0.0;
  for (double x : grid) {
    if (std::abs(x) <= *delta1 + 1e-12) a_delta = std::max(a_delta, std::abs(hp(x)));
  }
  rep.A_delta1 = std::max(1.0 / *delta1, a_delta);
  const double a = rep.a;
  rep.c_formula = std::max({rep.A_delta1 / a, rep.b * (rep.A_delta1 + 1.0) / a,
                          2.0 * rep.A_delta1 / (*delta1 * a * a), rep.diophantine_C / a});
  return rep;
}

}  // namespace kamspec
