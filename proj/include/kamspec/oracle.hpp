#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kamspec/lattice.hpp"

namespace kamspec {

struct DenseEigResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column i belongs to values(i)
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass drops below tol * ||H||_F.
DenseEigResult dense_symmetric_eig(const Eigen::MatrixXd& H, double tol = 1e-15, int max_sweeps = 50);

struct SiteMatch {
  std::size_t pos = 0;      // window position of the site
  std::size_t pair = 0;     // oracle eigenpair index
  double theta = 0.0;       // oracle eigenvalue
  double delta = 0.0;       // |lambda_n - theta|
  double overlap_deficit = 0.0;  // 1 - |<u_n, x>|
};

struct MatchReport {
  std::vector<SiteMatch> sites;
  double max_delta = 0.0;
  double max_overlap_deficit = 0.0;
};

/// Pairs each listed site with the oracle eigenpair of largest |<e_n, x>|.
/// lambda and vectors are indexed by window position; vectors may be empty (no overlap check).
MatchReport match_spectra(const std::vector<double>& lambda, const Eigen::MatrixXcd& vectors,
                          const DenseEigResult& oracle, const std::vector<std::size_t>& sites);

}  // namespace kamspec
