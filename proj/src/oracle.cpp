#include "kamspec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kamspec/band.hpp"
#include "kamspec/error.hpp"

namespace kamspec {

namespace {

double off_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

DenseEigResult dense_symmetric_eig(const Eigen::MatrixXd& H, double tol, int max_sweeps) {
  const Eigen::Index n = H.rows();
  if (H.cols() != n) throw Error(Errc::symmetry, "matrix is not square");
  if (static_cast<std::size_t>(n) > kMaxDenseSide) throw Error(Errc::size, "matrix too large for the oracle");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(Errc::symmetry, "matrix is not symmetric");
  }

  Eigen::MatrixXd a = 0.5 * (H + H.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double target = tol * H.norm();
  DenseEigResult out;

  while (off_norm(a) > target) {
    if (out.sweeps >= max_sweeps) {
      throw Error(Errc::oracle_failure, "Jacobi did not converge in " + std::to_string(max_sweeps) + " sweeps");
    }
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with the rotation in the (p, q) plane
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = a(src, src);
    Eigen::VectorXd col = v.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.vectors.col(i) = col;
  }
  return out;
}

MatchReport match_spectra(const std::vector<double>& lambda, const Eigen::MatrixXcd& vectors,
                          const DenseEigResult& oracle, const std::vector<std::size_t>& sites) {
  const Eigen::Index n = oracle.values.size();
  if (static_cast<Eigen::Index>(lambda.size()) != n) throw Error(Errc::size, "spectra have different sizes");
  MatchReport rep;
  std::map<std::size_t, std::size_t> claimed;
  for (std::size_t pos : sites) {
    Eigen::Index best = 0;
    oracle.vectors.row(static_cast<Eigen::Index>(pos)).cwiseAbs().maxCoeff(&best);
    const auto pair = static_cast<std::size_t>(best);
    if (auto it = claimed.find(pair); it != claimed.end()) {
      throw Error(Errc::pairing, "sites at positions " + std::to_string(it->second) + " and " +
                                     std::to_string(pos) + " both claim eigenpair " + std::to_string(pair));
    }
    claimed.emplace(pair, pos);
    SiteMatch m;
    m.pos = pos;
    m.pair = pair;
    m.theta = oracle.values(best);
    m.delta = std::abs(lambda[pos] - m.theta);
    if (vectors.size() > 0) {
      const Complex ov = vectors.col(static_cast<Eigen::Index>(pos)).dot(oracle.vectors.col(best).cast<Complex>());
      m.overlap_deficit = std::max(0.0, 1.0 - std::abs(ov));
    }
    rep.max_delta = std::max(rep.max_delta, m.delta);
    rep.max_overlap_deficit = std::max(rep.max_overlap_deficit, m.overlap_deficit);
    rep.sites.push_back(m);
  }
  return rep;
}

}  // namespace kamspec
