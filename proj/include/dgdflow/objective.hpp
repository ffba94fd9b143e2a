#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dgdflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One agent's objective: a C^2 scalar function with analytic oracles.
struct LocalObjective {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&)> hessian;
};

inline constexpr double kCriticalTol = 1e-6;    // |grad| below this counts as critical
inline constexpr double kDegenerateTol = 1e-8;  // relative eigenvalue floor for "nondegenerate"

enum class CriticalKind { minimum, maximum, saddle, degenerate };

struct HessianClass {
  CriticalKind kind;
  int negative_count = 0;  // number of negative eigenvalues (p for saddles)
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// N local objectives on R^d plus their sum. Immutable; evaluation is pure.
class ObjectiveSet {
 public:
  ObjectiveSet(int dimension, std::vector<LocalObjective> locals);

  int dimension() const { return dimension_; }
  int agent_count() const { return static_cast<int>(locals_.size()); }
  int stacked_dimension() const { return dimension_ * agent_count(); }
  const LocalObjective& local(int n) const { return locals_.at(n); }

  /// f(a) = sum_n f_n(a)
  double eval_sum(const VectorXd& a) const;
  VectorXd sum_gradient(const VectorXd& a) const;
  MatrixXd sum_hessian(const VectorXd& a) const;

  /// h(x) = sum_n f_n(x_n) on the stacked space R^{Nd}.
  double stacked_value(const VectorXd& x) const;
  VectorXd stacked_gradient(const VectorXd& x) const;
  /// Block-diagonal by construction; off-blocks are exact zeros.
  MatrixXd stacked_hessian(const VectorXd& x) const;

 private:
  int dimension_;
  std::vector<LocalObjective> locals_;
};

/// Eigen-classification of the sum Hessian at a critical point of f.
/// Throws if `a` is not critical to kCriticalTol.
HessianClass classify_hessian(const ObjectiveSet& obj, const VectorXd& a);

/// Classification without the critical-point gate (used on restricted/derived
/// matrices as well).
HessianClass classify_matrix(const MatrixXd& symmetric);

/// Presets: "quartic_saddle" (d=2), "random_quartic", "quadratic_convex".
/// `heterogeneity_seed` perturbs the locals without changing the sum
/// (zero-sum linear terms for quartic_saddle); pass std::nullopt for the
/// homogeneous split.
ObjectiveSet make_preset(const std::string& name, int agent_count, int dimension,
                         std::optional<std::uint64_t> heterogeneity_seed = std::nullopt);

}  // namespace dgdflow
