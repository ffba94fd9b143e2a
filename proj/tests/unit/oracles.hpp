#pragma once

// Test-side oracles: finite differences and small helpers kept independent of
// the library code paths they check.

#include <Eigen/Dense>
#include <functional>
#include <random>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& a, double h = 1e-5) {
  VectorXd g(a.size());
  VectorXd p = a;
  for (int j = 0; j < a.size(); ++j) {
    p(j) = a(j) + h;
    const double fp = f(p);
    p(j) = a(j) - h;
    const double fm = f(p);
    p(j) = a(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline MatrixXd fd_hessian(const std::function<VectorXd(const VectorXd&)>& grad,
                           const VectorXd& a, double h = 1e-4) {
  MatrixXd out(a.size(), a.size());
  VectorXd p = a;
  for (int j = 0; j < a.size(); ++j) {
    p(j) = a(j) + h;
    const VectorXd gp = grad(p);
    p(j) = a(j) - h;
    const VectorXd gm = grad(p);
    p(j) = a(j);
    out.col(j) = (gp - gm) / (2.0 * h);
  }
  return out;
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double halfwidth) {
  std::uniform_real_distribution<double> u(-halfwidth, halfwidth);
  VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = u(rng);
  return v;
}

}  // namespace oracles
