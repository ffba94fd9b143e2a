#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

namespace dgdflow {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The oracle suite: gradient/Hessian finite-difference checks for every
/// preset, brute-force spectral cross-checks, time-change round trips,
/// integrator order measurement, and the per-agent vs Kronecker field
/// equivalence.
std::vector<SelftestResult> run_selftest();

/// Prints one line per check; returns true when all pass.
bool report_selftest(std::ostream& os);

/// Cyclic-Jacobi eigenvalues of a symmetric matrix, ascending. Reference
/// implementation kept independent of the main eigensolver backend.
Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a);

/// Determinant by explicit cofactor expansion (n <= 4).
double small_determinant(const Eigen::MatrixXd& a);

}  // namespace dgdflow
