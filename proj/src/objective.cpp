#include "dgdflow/objective.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dgdflow {

ObjectiveSet::ObjectiveSet(int dimension, std::vector<LocalObjective> locals)
    : dimension_(dimension), locals_(std::move(locals)) {
  if (dimension_ < 1) throw std::invalid_argument("objective: dimension must be >= 1");
  if (locals_.empty()) throw std::invalid_argument("objective: need at least one local");
}

double ObjectiveSet::eval_sum(const VectorXd& a) const {
  double s = 0.0;
  for (const auto& l : locals_) s += l.value(a);
  if (!std::isfinite(s)) throw std::domain_error("objective: non-finite sum value");
  return s;
}

VectorXd ObjectiveSet::sum_gradient(const VectorXd& a) const {
  VectorXd g = VectorXd::Zero(dimension_);
  for (const auto& l : locals_) g += l.gradient(a);
  return g;
}

MatrixXd ObjectiveSet::sum_hessian(const VectorXd& a) const {
  MatrixXd h = MatrixXd::Zero(dimension_, dimension_);
  for (const auto& l : locals_) h += l.hessian(a);
  return h;
}

double ObjectiveSet::stacked_value(const VectorXd& x) const {
  double s = 0.0;
  for (int n = 0; n < agent_count(); ++n)
    s += locals_[n].value(x.segment(n * dimension_, dimension_));
  return s;
}

VectorXd ObjectiveSet::stacked_gradient(const VectorXd& x) const {
  VectorXd g(x.size());
  for (int n = 0; n < agent_count(); ++n)
    g.segment(n * dimension_, dimension_) =
        locals_[n].gradient(x.segment(n * dimension_, dimension_));
  return g;
}

MatrixXd ObjectiveSet::stacked_hessian(const VectorXd& x) const {
  const int m = stacked_dimension();
  MatrixXd h = MatrixXd::Zero(m, m);
  for (int n = 0; n < agent_count(); ++n)
    h.block(n * dimension_, n * dimension_, dimension_, dimension_) =
        locals_[n].hessian(x.segment(n * dimension_, dimension_));
  return h;
}

HessianClass classify_matrix(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric);
  HessianClass out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  const double scale = std::max(1.0, out.eigenvalues.cwiseAbs().maxCoeff());
  const double floor = kDegenerateTol * scale;
  if (out.eigenvalues.cwiseAbs().minCoeff() < floor) {
    out.kind = CriticalKind::degenerate;
    return out;
  }
  out.negative_count = static_cast<int>((out.eigenvalues.array() < 0.0).count());
  if (out.negative_count == 0)
    out.kind = CriticalKind::minimum;
  else if (out.negative_count == out.eigenvalues.size())
    out.kind = CriticalKind::maximum;
  else
    out.kind = CriticalKind::saddle;
  return out;
}

HessianClass classify_hessian(const ObjectiveSet& obj, const VectorXd& a) {
  if (obj.sum_gradient(a).norm() >= kCriticalTol)
    throw std::invalid_argument("objective: classify_hessian requires a critical point");
  return classify_matrix(obj.sum_hessian(a));
}

namespace {

// Zero-sum linear perturbations; the sum objective is unchanged exactly.
std::vector<VectorXd> zero_sum_offsets(int agents, int dimension, std::uint64_t seed,
                                       double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<VectorXd> b(agents, VectorXd::Zero(dimension));
  if (agents < 2) return b;
  VectorXd total = VectorXd::Zero(dimension);
  for (int n = 0; n + 1 < agents; ++n) {
    for (int j = 0; j < dimension; ++j) b[n](j) = u(rng);
    total += b[n];
  }
  b[agents - 1] = -total;
  return b;
}

ObjectiveSet make_quartic_saddle(int agents, int dimension,
                                 std::optional<std::uint64_t> seed) {
  if (dimension != 2)
    throw std::invalid_argument("objective: quartic_saddle preset requires d = 2");
  std::vector<VectorXd> b(agents, VectorXd::Zero(2));
  if (seed) b = zero_sum_offsets(agents, 2, *seed, 0.1);
  const double inv_n = 1.0 / agents;
  std::vector<LocalObjective> locals;
  locals.reserve(agents);
  for (int n = 0; n < agents; ++n) {
    const VectorXd bn = b[n];
    locals.push_back(LocalObjective{
        [inv_n, bn](const VectorXd& a) {
          const double a1 = a(0), a2 = a(1);
          return inv_n * (a1 * a1 - a2 * a2 + 0.25 * a2 * a2 * a2 * a2) + bn.dot(a);
        },
        [inv_n, bn](const VectorXd& a) {
          VectorXd g(2);
          g(0) = inv_n * 2.0 * a(0) + bn(0);
          g(1) = inv_n * (-2.0 * a(1) + a(1) * a(1) * a(1)) + bn(1);
          return g;
        },
        [inv_n](const VectorXd& a) {
          MatrixXd h = MatrixXd::Zero(2, 2);
          h(0, 0) = inv_n * 2.0;
          h(1, 1) = inv_n * (-2.0 + 3.0 * a(1) * a(1));
          return h;
        }});
  }
  return ObjectiveSet(2, std::move(locals));
}

ObjectiveSet make_random_quartic(int agents, int dimension,
                                 std::optional<std::uint64_t> seed) {
  std::mt19937_64 rng(seed.value_or(2024));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<LocalObjective> locals;
  locals.reserve(agents);
  for (int n = 0; n < agents; ++n) {
    MatrixXd g(dimension, dimension);
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j) g(i, j) = u(rng);
    const MatrixXd s = 0.5 * (g + g.transpose());
    VectorXd bn(dimension);
    for (int j = 0; j < dimension; ++j) bn(j) = u(rng);
    locals.push_back(LocalObjective{
        [s, bn](const VectorXd& a) {
          const double q = a.squaredNorm();
          return 0.25 * q * q + 0.5 * a.dot(s * a) + bn.dot(a);
        },
        [s, bn](const VectorXd& a) -> VectorXd {
          return a.squaredNorm() * a + s * a + bn;
        },
        [s](const VectorXd& a) -> MatrixXd {
          const int d = static_cast<int>(a.size());
          return a.squaredNorm() * MatrixXd::Identity(d, d) + 2.0 * a * a.transpose() + s;
        }});
  }
  return ObjectiveSet(dimension, std::move(locals));
}

ObjectiveSet make_quadratic_convex(int agents, int dimension,
                                   std::optional<std::uint64_t> seed) {
  std::mt19937_64 rng(seed.value_or(12345));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<LocalObjective> locals;
  locals.reserve(agents);
  for (int n = 0; n < agents; ++n) {
    VectorXd c(dimension);
    for (int j = 0; j < dimension; ++j) c(j) = u(rng);
    locals.push_back(LocalObjective{
        [c](const VectorXd& a) { return 0.5 * (a - c).squaredNorm(); },
        [c](const VectorXd& a) -> VectorXd { return a - c; },
        [](const VectorXd& a) -> MatrixXd {
          const int d = static_cast<int>(a.size());
          return MatrixXd::Identity(d, d);
        }});
  }
  return ObjectiveSet(dimension, std::move(locals));
}

}  // namespace

ObjectiveSet make_preset(const std::string& name, int agent_count, int dimension,
                         std::optional<std::uint64_t> heterogeneity_seed) {
  if (agent_count < 1) throw std::invalid_argument("objective: N must be >= 1");
  if (name == "quartic_saddle")
    return make_quartic_saddle(agent_count, dimension, heterogeneity_seed);
  if (name == "random_quartic")
    return make_random_quartic(agent_count, dimension, heterogeneity_seed);
  if (name == "quadratic_convex")
    return make_quadratic_convex(agent_count, dimension, heterogeneity_seed);
  throw std::invalid_argument("objective: unknown preset '" + name + "'");
}

}  // namespace dgdflow
