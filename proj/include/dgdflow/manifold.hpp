#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dgdflow/analysis.hpp"
#include "dgdflow/dynamics.hpp"
#include "dgdflow/graph.hpp"
#include "dgdflow/integrate.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/schedule.hpp"

namespace dgdflow {

/// Critical-point branch g(beta) of the penalized problem
/// grad h(g) + beta Q g = 0, tracked by Newton continuation from large beta
/// toward small, plus the implicit derivative dg/dbeta.
struct PenalizedPath {
  std::vector<double> beta_grid;  // increasing
  std::vector<VectorXd> g_values;
  std::vector<VectorXd> g_prime;  // solves (hess h(g) + beta Q) g' = -Q g
  VectorXd target;                // the constrained saddle the branch tracks
  double residual_max = 0.0;      // worst Newton residual over the grid
};

PenalizedPath critical_path(const ObjectiveSet& obj, const MatrixXd& Q,
                            const VectorXd& x_star, const std::vector<double>& beta_grid,
                            double newton_tol = 1e-11);

/// Constants of the exponential-dichotomy estimates: the stable block of the
/// transition factor decays like K e^{-(alpha+sigma) dt}, the unstable block
/// (run backward) like K e^{sigma dt}; epsilon is the measured Lipschitz
/// constant of the rotated nonlinearity on the radius-r ball.
struct ContractionConstants {
  double alpha = 0.0;
  double sigma = 0.0;
  double K = 1.0;
  double epsilon = 0.0;
  double radius = 0.0;
  double start_time = 0.0;
  int stable_count = 0;    // k
  int unstable_count = 0;  // p

  bool contraction_ok() const { return epsilon < sigma / (6.0 * K); }
  double contraction_bound() const { return 2.0 * epsilon * K / sigma; }
};

/// Time-varying linearization of the recentered flow in diagonalizing
/// coordinates z = U(t) y. `lambda` holds the flow eigenvalues (stable
/// first: negative entries 0..k-1, positive entries k..M-1 for t >= T).
struct LinearizedSystem {
  std::vector<double> t;
  std::vector<VectorXd> lambda;
  std::vector<MatrixXd> U;
  std::vector<MatrixXd> Udot;
  std::vector<VectorXd> lambda_prefix;  // trapezoid prefix integrals of lambda
  int stable_count = 0;
  ContractionConstants constants;

  int dim() const { return U.empty() ? 0 : static_cast<int>(U.front().rows()); }
  int nodes() const { return static_cast<int>(t.size()); }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
  /// Piecewise-linear evaluation of int_{t0}^{time} lambda_j.
  double lambda_integral(int j, double time) const;
};

LinearizedSystem linearize(const ObjectiveSet& obj, const MatrixXd& Q,
                           const PenalizedPath& path, const PenaltySchedule& penalty,
                           const std::vector<double>& t_grid);

/// Hand-built system for tests: diagonal lambda(t) given per node, identity U.
LinearizedSystem make_diagonal_system(const std::vector<double>& t_grid,
                                      const std::function<VectorXd(double)>& lambda_of_t,
                                      int stable_count);

enum class TransitionBlock { stable, unstable };

/// V^s(t2,t1) (requires t2 >= t1) or V^u(t2,t1) (requires t2 <= t1):
/// diagonal-block exponential of the lambda integral, zero elsewhere.
MatrixXd transition_factor(const LinearizedSystem& sys, double t2, double t1,
                           TransitionBlock which);

/// Rotated forcing phi(t_i) = U(t_i) g'(beta_{t_i}) beta_dot(t_i) per node.
std::vector<VectorXd> forcing_nodes(const LinearizedSystem& sys, const PenalizedPath& path,
                                    const PenaltySchedule& penalty);

/// The inhomogeneous offset of the integral equation,
///   c(t) = -int_{t0}^t V^s(t,tau) phi(tau) dtau + int_t^inf V^u(t,tau) phi(tau) dtau,
/// evaluated at every grid node; the unstable tail beyond the grid is
/// truncated and its bound recorded.
struct ForcingOffset {
  std::vector<VectorXd> values;
  double tail_bound = 0.0;
};

ForcingOffset forcing_term(const LinearizedSystem& sys, const std::vector<VectorXd>& phi);

/// Rotated nonlinearity evaluated at grid node `node`: z -> F~(z, t_node).
using NonlinearTerm = std::function<VectorXd(const VectorXd&, int)>;

/// F~(z,t) = U(t) F(U(t)^T z, t) + Udot(t) U(t)^T z with
/// F(y,t) = -grad h(y+g) - beta Q (y+g) - A(t) y, recentered so F(0,t) = 0
/// exactly.
VectorXd nonlinear_residual(const ObjectiveSet& obj, const MatrixXd& Q,
                            const PenalizedPath& path, const LinearizedSystem& sys,
                            const PenaltySchedule& penalty, const VectorXd& z, int node);

NonlinearTerm make_nonlinear_term(const ObjectiveSet& obj, const MatrixXd& Q,
                                  const PenalizedPath& path, const LinearizedSystem& sys,
                                  const PenaltySchedule& penalty);

/// Measured Lipschitz quotient of F~ over sampled pairs in the radius ball,
/// with a 10% safety factor.
double measure_lipschitz(const LinearizedSystem& sys, const NonlinearTerm& f, double radius,
                         std::uint64_t seed, int pairs = 400);

struct StableSolution {
  VectorXd a_s;
  std::vector<VectorXd> u;  // per grid node
  int picard_iters = 0;
  double contraction_ratio = 0.0;  // max successive-increment sup-norm ratio
  double residual = 0.0;           // final sup-norm update size
  double tail_bound = 0.0;
};

/// Picard iteration on the stable/unstable integral equation starting from
/// u0(t) = V^s(t,t0) (a_s; 0). `offset` may be empty when c == 0.
StableSolution solve_stable_solution(const LinearizedSystem& sys, const NonlinearTerm& f,
                                     const ForcingOffset& offset, const VectorXd& a_s,
                                     int max_iters = 100, double tol = 1e-10);

/// Max interior-node residual of zdot = Lambda z + F~(z,t) - phi(t) for the
/// fixed point, via central differences on the grid.
double ode_residual(const LinearizedSystem& sys, const NonlinearTerm& f,
                    const std::vector<VectorXd>& phi, const std::vector<VectorXd>& u);

struct ManifoldChart {
  double t0 = 0.0;
  int stable_count = 0;
  std::vector<VectorXd> samples;    // a_s
  std::vector<VectorXd> psi;        // unstable coordinates of u(t0, a_s)
  std::vector<StableSolution> solutions;
  MatrixXd frame;                   // U(t0)
  VectorXd offset;                  // g(beta_{t0})

  /// Chart point mapped to original coordinates: x = U(t0)^T (a_s; psi) + g0.
  VectorXd state(int sample_index) const;
};

/// Samples are independent; jobs > 1 solves them on OpenMP threads with
/// results in disjoint slots (identical output for every jobs value).
ManifoldChart build_chart(const LinearizedSystem& sys, const NonlinearTerm& f,
                          const ForcingOffset& offset, const PenalizedPath& path,
                          const std::vector<VectorXd>& samples, int jobs = 1);

struct ManifoldOptions {
  double t0 = 10.0;
  double horizon = 20.0;
  int grid_points = 1601;
  double radius = 0.04;
  int samples = 5;
  std::uint64_t sample_seed = 1;
  double newton_tol = 1e-11;
};

/// End-to-end stable-manifold pipeline for a consensus+innovations scenario
/// around a saddle of the sum objective: penalized path, linearization,
/// constants, forcing, and the contraction solver, all in the alpha clock.
class ManifoldWorkspace {
 public:
  /// Borrows `obj`; the objective must outlive the workspace.
  ManifoldWorkspace(const Graph& g, const ObjectiveSet& obj, const Schedule& s,
                    const VectorXd& saddle, const ManifoldOptions& opts);
  ManifoldWorkspace(const ManifoldWorkspace&) = delete;
  ManifoldWorkspace& operator=(const ManifoldWorkspace&) = delete;

  const LinearizedSystem& system() const { return sys_; }
  const PenalizedPath& path() const { return path_; }
  const ForcingOffset& offset() const { return offset_; }
  const ContractionConstants& constants() const { return sys_.constants; }
  const MatrixXd& Q() const { return Q_; }
  const PenaltySchedule& penalty() const { return penalty_; }
  const NonlinearTerm& nonlinear() const { return nonlinear_; }

  StableSolution solve(const VectorXd& a_s) const;
  ManifoldChart chart(const std::vector<VectorXd>& samples, int jobs = 1) const;
  /// Random a_s samples with |a_s| < radius/3.
  std::vector<VectorXd> sample_coordinates(int count, std::uint64_t seed) const;

  /// Original-clock time tau with S_alpha(tau) = alpha-clock time t.
  double original_time(double alpha_clock_time) const;

 private:
  MatrixXd Q_;
  PenaltySchedule penalty_;
  TimeChange alpha_clock_;
  PenalizedPath path_;
  LinearizedSystem sys_;
  std::vector<VectorXd> phi_;
  ForcingOffset offset_;
  NonlinearTerm nonlinear_;
  ManifoldOptions opts_;
};

struct ProbeSettings {
  VectorXd base;       // stacked base point
  VectorXd direction;  // stacked probe direction
  double s_min = -0.5;
  double s_max = 0.5;
  double tol_s = 1e-6;
  double t_start = 0.0;  // probe initializations enter the flow at this time
  double horizon = 1e3;  // integration length past t_start
  double delta_saddle = 0.05;
  double escape_offset = 1e-2;
};

struct ProbeResult {
  bool found_boundary = false;
  double s_star = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double stay_max_distance = 0.0;  // max over time of max-agent distance to the saddle at s*
  std::optional<int> class_lo;     // atlas classification at the range endpoints
  std::optional<int> class_hi;
  std::optional<int> escape_class_plus;   // at s* + escape_offset
  std::optional<int> escape_class_minus;  // at s* - escape_offset
  int integrations = 0;
};

/// Bisection along `direction` for the basin boundary (the stable manifold):
/// initializes at base + s * direction, integrates the consensus+innovations
/// flow, and classifies the outcome. Returns found_boundary = false when the
/// whole range lands in one class.
ProbeResult shooting_probe(const Graph& g, const ObjectiveSet& obj, const Schedule& s,
                           const CriticalPointAtlas& atlas, int saddle_index,
                           const IntegratorOptions& iopts, const ProbeSettings& ps);

}  // namespace dgdflow
