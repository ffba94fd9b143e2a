#include "dgdflow/manifold.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include "dgdflow/numerics.hpp"
#include "dgdflow/parallel.hpp"

namespace dgdflow {

namespace {

// Newton solve of grad h(x) + beta Q x = 0 from a warm start.
VectorXd penalized_newton(const ObjectiveSet& obj, const MatrixXd& Q, double beta,
                          VectorXd x, double tol, double* residual_out) {
  for (int it = 0; it < 100; ++it) {
    const VectorXd res = obj.stacked_gradient(x) + beta * (Q * x);
    if (residual_out) *residual_out = res.norm();
    if (res.norm() < tol) return x;
    const MatrixXd jac = obj.stacked_hessian(x) + beta * Q;
    Eigen::FullPivLU<MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw std::runtime_error("manifold: singular Jacobian on the penalized path at beta=" +
                               std::to_string(beta));
    x -= lu.solve(res);
  }
  throw std::runtime_error("manifold: Newton did not converge on the penalized path at beta=" +
                           std::to_string(beta));
}

}  // namespace

PenalizedPath critical_path(const ObjectiveSet& obj, const MatrixXd& Q,
                            const VectorXd& x_star, const std::vector<double>& beta_grid,
                            double newton_tol) {
  if (beta_grid.empty()) throw std::invalid_argument("manifold: empty beta grid");
  for (std::size_t i = 1; i < beta_grid.size(); ++i)
    if (!(beta_grid[i] > beta_grid[i - 1]))
      throw std::invalid_argument("manifold: beta grid must be increasing");

  PenalizedPath path;
  path.beta_grid = beta_grid;
  path.target = x_star;
  path.g_values.resize(beta_grid.size());
  path.g_prime.resize(beta_grid.size());

  // Continuation from the largest beta (closest to the constrained saddle)
  // downward, warm-starting each solve from the previous branch point.
  VectorXd warm = x_star;
  for (std::size_t step = beta_grid.size(); step-- > 0;) {
    double res = 0.0;
    warm = penalized_newton(obj, Q, beta_grid[step], warm, newton_tol, &res);
    path.residual_max = std::max(path.residual_max, res);
    path.g_values[step] = warm;
    const MatrixXd jac = obj.stacked_hessian(warm) + beta_grid[step] * Q;
    path.g_prime[step] = Eigen::FullPivLU<MatrixXd>(jac).solve(-(Q * warm));
  }
  return path;
}

double LinearizedSystem::lambda_integral(int j, double time) const {
  const double step = dt();
  if (time < t.front() - 1e-12 || time > t.back() + 1e-12)
    throw std::invalid_argument("manifold: time outside the grid");
  long i = static_cast<long>(std::floor((time - t.front()) / step));
  i = std::clamp(i, 0l, static_cast<long>(t.size()) - 2);
  const double local = time - t[i];
  const double frac = local / step;
  const double lam_here = lambda[i](j);
  const double lam_there = lambda[i + 1](j);
  const double lam_interp = lam_here + frac * (lam_there - lam_here);
  return lambda_prefix[i](j) + 0.5 * local * (lam_here + lam_interp);
}

namespace {

// Prefix integrals plus the dichotomy constants (alpha, sigma, K) measured
// from the eigenvalue branches on the grid.
void finish_system(LinearizedSystem& sys) {
  const int m = sys.dim();
  const int n = sys.nodes();
  sys.lambda_prefix.assign(n, VectorXd::Zero(m));
  for (int i = 1; i < n; ++i) {
    const double dt = sys.t[i] - sys.t[i - 1];
    sys.lambda_prefix[i] =
        sys.lambda_prefix[i - 1] + 0.5 * dt * (sys.lambda[i] + sys.lambda[i - 1]);
  }

  const int k = sys.stable_count;
  double stable_min = std::numeric_limits<double>::infinity();
  double unstable_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) stable_min = std::min(stable_min, -sys.lambda[i](j));
    for (int j = k; j < m; ++j) unstable_min = std::min(unstable_min, sys.lambda[i](j));
  }
  if (k == 0) stable_min = 0.0;
  if (k == m) unstable_min = stable_min;  // no unstable block; sigma from the stable gap

  ContractionConstants& c = sys.constants;
  c.stable_count = k;
  c.unstable_count = m - k;
  c.start_time = sys.t.front();
  c.alpha = 0.9 * stable_min;
  c.sigma = 0.5 * std::min(unstable_min, stable_min - c.alpha);
  if (!(c.alpha > 0.0) || !(c.sigma > 0.0))
    throw std::runtime_error("manifold: could not pick positive dichotomy rates");

  // Worst on-grid ratio of the transition factors against the target decay.
  double worst = 1.0;
  for (int j = 0; j < k; ++j) {
    double run_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double f = sys.lambda_prefix[i](j) + (c.alpha + c.sigma) * sys.t[i];
      run_min = std::min(run_min, f);
      worst = std::max(worst, std::exp(f - run_min));
    }
  }
  for (int j = k; j < m; ++j) {
    // V^u runs backward: ratio exp((I_j - sigma t)(t2) - (I_j - sigma t)(t1)), t2 <= t1.
    double run_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double h = sys.lambda_prefix[i](j) - c.sigma * sys.t[i];
      run_max = std::max(run_max, h);
      worst = std::max(worst, std::exp(run_max - h));
    }
  }
  c.K = 1.05 * worst;
}

}  // namespace

LinearizedSystem linearize(const ObjectiveSet& obj, const MatrixXd& Q,
                           const PenalizedPath& path, const PenaltySchedule& penalty,
                           const std::vector<double>& t_grid) {
  const int m = obj.stacked_dimension();
  const int n = static_cast<int>(t_grid.size());
  if (n < 3) throw std::invalid_argument("manifold: need at least 3 grid nodes");
  if (path.g_values.size() != t_grid.size())
    throw std::invalid_argument("manifold: path and time grid sizes differ");

  LinearizedSystem sys;
  sys.t = t_grid;
  sys.lambda.resize(n);
  sys.U.resize(n);

  std::vector<MatrixXd> vectors(n);  // columns = eigenvectors of the flow matrix
  for (int i = 0; i < n; ++i) {
    const double beta = penalty.beta(t_grid[i]);
    if (std::abs(beta - path.beta_grid[i]) > 1e-9 * std::max(1.0, beta))
      throw std::invalid_argument("manifold: path betas do not match the penalty schedule");
    const MatrixXd hess = obj.stacked_hessian(path.g_values[i]) + beta * Q;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(hess);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("manifold: eigendecomposition failed on the grid");
    // Flow matrix is the negated penalized Hessian.
    sys.lambda[i] = -es.eigenvalues();
    vectors[i] = es.eigenvectors();
  }

  // Node 0: canonical order, stable (negative) branches first, ascending.
  {
    std::vector<int> order(m);
    for (int j = 0; j < m; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return sys.lambda[0](a) < sys.lambda[0](b); });
    VectorXd lam(m);
    MatrixXd vec(m, m);
    for (int j = 0; j < m; ++j) {
      lam(j) = sys.lambda[0](order[j]);
      vec.col(j) = vectors[0].col(order[j]);
    }
    sys.lambda[0] = lam;
    vectors[0] = vec;
  }
  sys.stable_count = static_cast<int>((sys.lambda[0].array() < 0.0).count());

  // Align every node to the previous one: greedy |dot| matching with sign
  // fixing, then an orthogonal Procrustes re-basing inside (near-)degenerate
  // eigenvalue groups where the matching alone is ambiguous.
  for (int i = 1; i < n; ++i) {
    const MatrixXd& prev = vectors[i - 1];
    MatrixXd cur = vectors[i];
    VectorXd lam = sys.lambda[i];
    MatrixXd aligned(m, m);
    VectorXd lam_aligned(m);
    std::vector<char> used(m, 0);
    for (int j = 0; j < m; ++j) {
      int best = -1;
      double best_dot = -1.0;
      for (int cidx = 0; cidx < m; ++cidx) {
        if (used[cidx]) continue;
        const double dot = std::abs(prev.col(j).dot(cur.col(cidx)));
        if (dot > best_dot) {
          best_dot = dot;
          best = cidx;
        }
      }
      used[best] = 1;
      const double sign = prev.col(j).dot(cur.col(best)) < 0.0 ? -1.0 : 1.0;
      aligned.col(j) = sign * cur.col(best);
      lam_aligned(j) = lam(best);
    }
    const double scale = std::max(1.0, lam_aligned.cwiseAbs().maxCoeff());
    for (int j = 0; j < m;) {
      int e = j + 1;
      while (e < m && std::abs(lam_aligned(e) - lam_aligned(j)) < 1e-10 * scale) ++e;
      if (e - j > 1) {
        const MatrixXd block = aligned.middleCols(j, e - j);
        const MatrixXd overlap = block.transpose() * prev.middleCols(j, e - j);
        Eigen::JacobiSVD<MatrixXd> svd(overlap,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
        aligned.middleCols(j, e - j) =
            block * (svd.matrixU() * svd.matrixV().transpose());
      }
      j = e;
    }
    vectors[i] = aligned;
    sys.lambda[i] = lam_aligned;
  }

  // Sign constancy along each branch (the dichotomy splitting must persist).
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const bool stable_here = sys.lambda[i](j) < 0.0;
      if (stable_here != (j < sys.stable_count))
        throw std::runtime_error(
            "manifold: eigenvalue sign change on the grid; increase t0");
    }

  for (int i = 0; i < n; ++i) sys.U[i] = vectors[i].transpose();

  sys.Udot.resize(n);
  const double dt = sys.t[1] - sys.t[0];
  for (int i = 0; i < n; ++i) {
    if (i == 0)
      sys.Udot[i] = (sys.U[1] - sys.U[0]) / dt;
    else if (i == n - 1)
      sys.Udot[i] = (sys.U[n - 1] - sys.U[n - 2]) / dt;
    else
      sys.Udot[i] = (sys.U[i + 1] - sys.U[i - 1]) / (2.0 * dt);
  }

  finish_system(sys);
  return sys;
}

LinearizedSystem make_diagonal_system(const std::vector<double>& t_grid,
                                      const std::function<VectorXd(double)>& lambda_of_t,
                                      int stable_count) {
  if (t_grid.size() < 3) throw std::invalid_argument("manifold: need at least 3 grid nodes");
  LinearizedSystem sys;
  sys.t = t_grid;
  const int n = static_cast<int>(t_grid.size());
  sys.lambda.resize(n);
  for (int i = 0; i < n; ++i) sys.lambda[i] = lambda_of_t(t_grid[i]);
  const int m = static_cast<int>(sys.lambda[0].size());
  sys.U.assign(n, MatrixXd::Identity(m, m));
  sys.Udot.assign(n, MatrixXd::Zero(m, m));
  sys.stable_count = stable_count;
  finish_system(sys);
  return sys;
}

MatrixXd transition_factor(const LinearizedSystem& sys, double t2, double t1,
                           TransitionBlock which) {
  const int m = sys.dim();
  const int k = sys.stable_count;
  MatrixXd out = MatrixXd::Zero(m, m);
  if (which == TransitionBlock::stable) {
    if (t2 < t1 - 1e-12)
      throw std::invalid_argument("manifold: stable factor requires t2 >= t1");
    for (int j = 0; j < k; ++j)
      out(j, j) = std::exp(sys.lambda_integral(j, t2) - sys.lambda_integral(j, t1));
  } else {
    if (t2 > t1 + 1e-12)
      throw std::invalid_argument("manifold: unstable factor requires t2 <= t1");
    for (int j = k; j < m; ++j)
      out(j, j) = std::exp(sys.lambda_integral(j, t2) - sys.lambda_integral(j, t1));
  }
  return out;
}

std::vector<VectorXd> forcing_nodes(const LinearizedSystem& sys, const PenalizedPath& path,
                                    const PenaltySchedule& penalty) {
  if (path.g_prime.size() != sys.t.size())
    throw std::invalid_argument("manifold: path and system grids differ");
  std::vector<VectorXd> phi(sys.t.size());
  for (int i = 0; i < sys.nodes(); ++i)
    phi[i] = sys.U[i] * (path.g_prime[i] * penalty.beta_dot(sys.t[i]));
  return phi;
}

namespace {

// Forward accumulation J(t_i) = int_{t0}^{t_i} e^{I_j(t_i)-I_j(tau)} xi_j(tau) dtau
// per stable branch, trapezoid with per-segment exponential weights.
void stable_convolution(const LinearizedSystem& sys, const std::vector<VectorXd>& xi,
                        std::vector<VectorXd>& out, double scale) {
  const int n = sys.nodes();
  const int k = sys.stable_count;
  for (int j = 0; j < k; ++j) {
    double acc = 0.0;
    for (int i = 1; i < n; ++i) {
      const double dt = sys.t[i] - sys.t[i - 1];
      const double w = std::exp(sys.lambda_prefix[i](j) - sys.lambda_prefix[i - 1](j));
      acc = w * acc + 0.5 * dt * (w * xi[i - 1](j) + xi[i](j));
      out[i](j) += scale * acc;
    }
  }
}

// Backward accumulation H(t_i) = int_{t_i}^{t_end} e^{I_j(t_i)-I_j(tau)} xi_j(tau) dtau
// per unstable branch; the tail beyond the grid is truncated.
void unstable_convolution(const LinearizedSystem& sys, const std::vector<VectorXd>& xi,
                          std::vector<VectorXd>& out, double scale) {
  const int n = sys.nodes();
  const int m = sys.dim();
  for (int j = sys.stable_count; j < m; ++j) {
    double acc = 0.0;
    for (int i = n - 2; i >= 0; --i) {
      const double dt = sys.t[i + 1] - sys.t[i];
      const double w = std::exp(sys.lambda_prefix[i](j) - sys.lambda_prefix[i + 1](j));
      acc = w * acc + 0.5 * dt * (xi[i](j) + w * xi[i + 1](j));
      out[i](j) += scale * acc;
    }
  }
}

double unstable_tail_bound(const LinearizedSystem& sys, const VectorXd& xi_last) {
  const int m = sys.dim();
  double worst = 0.0;
  for (int j = sys.stable_count; j < m; ++j) {
    const double rate = sys.lambda[sys.nodes() - 1](j);
    if (rate > 0.0) worst = std::max(worst, std::abs(xi_last(j)) / rate);
  }
  return worst;
}

}  // namespace

ForcingOffset forcing_term(const LinearizedSystem& sys, const std::vector<VectorXd>& phi) {
  if (phi.size() != sys.t.size())
    throw std::invalid_argument("manifold: forcing nodes do not match the grid");
  ForcingOffset off;
  off.values.assign(sys.nodes(), VectorXd::Zero(sys.dim()));
  stable_convolution(sys, phi, off.values, -1.0);
  unstable_convolution(sys, phi, off.values, +1.0);
  off.tail_bound = unstable_tail_bound(sys, phi.back());
  return off;
}

VectorXd nonlinear_residual(const ObjectiveSet& obj, const MatrixXd& Q,
                            const PenalizedPath& path, const LinearizedSystem& sys,
                            const PenaltySchedule& penalty, const VectorXd& z, int node) {
  (void)Q;
  (void)penalty;
  const VectorXd y = sys.U[node].transpose() * z;
  const VectorXd& g = path.g_values[node];
  // The penalty terms cancel exactly against the linearization, leaving the
  // pure Hessian remainder of grad h about g.
  const VectorXd f = -(obj.stacked_gradient(y + g) - obj.stacked_gradient(g) -
                       obj.stacked_hessian(g) * y);
  return sys.U[node] * f + sys.Udot[node] * y;
}

NonlinearTerm make_nonlinear_term(const ObjectiveSet& obj, const MatrixXd& Q,
                                  const PenalizedPath& path, const LinearizedSystem& sys,
                                  const PenaltySchedule& penalty) {
  return [&obj, &Q, &path, &sys, &penalty](const VectorXd& z, int node) {
    return nonlinear_residual(obj, Q, path, sys, penalty, z, node);
  };
}

double measure_lipschitz(const LinearizedSystem& sys, const NonlinearTerm& f, double radius,
                         std::uint64_t seed, int pairs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> node_pick(0, sys.nodes() - 1);
  const int m = sys.dim();
  auto ball_point = [&]() {
    VectorXd z(m);
    for (int j = 0; j < m; ++j) z(j) = u(rng);
    const double norm = z.norm();
    if (norm > 0.0) z *= radius * std::abs(u(rng)) / norm;
    return z;
  };
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const int node = node_pick(rng);
    const VectorXd a = ball_point();
    VectorXd b;
    if (p % 2 == 0) {
      b = ball_point();  // far pair
    } else {
      b = a + 1e-4 * ball_point();  // near pair, probes the local quotient
      if (b.norm() > radius) b *= radius / b.norm();
    }
    const double dz = (a - b).norm();
    if (dz < 1e-14) continue;
    worst = std::max(worst, (f(a, node) - f(b, node)).norm() / dz);
  }
  return 1.1 * worst;
}

StableSolution solve_stable_solution(const LinearizedSystem& sys, const NonlinearTerm& f,
                                     const ForcingOffset& offset, const VectorXd& a_s,
                                     int max_iters, double tol) {
  const int n = sys.nodes();
  const int m = sys.dim();
  const int k = sys.stable_count;
  if (a_s.size() != k)
    throw std::invalid_argument("manifold: stable coordinate dimension mismatch");
  const ContractionConstants& c = sys.constants;
  if (c.radius > 0.0) {
    if (a_s.norm() >= c.radius / 3.0)
      throw std::invalid_argument("manifold: |a_s| must be below radius/3");
    if (c.epsilon > 0.0 && !c.contraction_ok())
      throw std::runtime_error(
          "manifold: epsilon >= sigma/(6K); shrink the radius or increase t0");
  }
  const bool has_offset = !offset.values.empty();
  if (has_offset && offset.values.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("manifold: offset does not match the grid");

  // Base term V^s(t, t0) (a_s; 0).
  std::vector<VectorXd> base(n, VectorXd::Zero(m));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      base[i](j) = std::exp(sys.lambda_prefix[i](j) - sys.lambda_prefix[0](j)) * a_s(j);

  StableSolution sol;
  sol.a_s = a_s;
  sol.u = base;
  sol.tail_bound = has_offset ? offset.tail_bound : 0.0;

  std::vector<VectorXd> xi(n), next(n);
  double prev_delta = -1.0;
  for (int iter = 1; iter <= max_iters; ++iter) {
    for (int i = 0; i < n; ++i) xi[i] = f(sol.u[i], i);
    next = base;
    if (has_offset)
      for (int i = 0; i < n; ++i) next[i] += offset.values[i];
    stable_convolution(sys, xi, next, +1.0);
    unstable_convolution(sys, xi, next, -1.0);

    double delta = 0.0;
    for (int i = 0; i < n; ++i) delta = std::max(delta, (next[i] - sol.u[i]).norm());
    sol.u.swap(next);
    sol.picard_iters = iter;
    sol.residual = delta;
    if (prev_delta > 0.0 && delta > 0.0)
      sol.contraction_ratio = std::max(sol.contraction_ratio, delta / prev_delta);
    if (prev_delta > 0.0 && delta >= prev_delta && delta > 10.0 * tol)
      throw std::runtime_error("manifold: Picard iteration is not contracting");
    if (delta < tol) break;
    prev_delta = delta;
  }
  return sol;
}

double ode_residual(const LinearizedSystem& sys, const NonlinearTerm& f,
                    const std::vector<VectorXd>& phi, const std::vector<VectorXd>& u) {
  const int n = sys.nodes();
  double worst = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double dt2 = sys.t[i + 1] - sys.t[i - 1];
    VectorXd lhs = (u[i + 1] - u[i - 1]) / dt2;
    VectorXd rhs = sys.lambda[i].cwiseProduct(u[i]) + f(u[i], i);
    if (!phi.empty()) rhs -= phi[i];
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

VectorXd ManifoldChart::state(int sample_index) const {
  const VectorXd& a = samples.at(sample_index);
  const VectorXd& p = psi.at(sample_index);
  VectorXd z(a.size() + p.size());
  z << a, p;
  return frame.transpose() * z + offset;
}

ManifoldChart build_chart(const LinearizedSystem& sys, const NonlinearTerm& f,
                          const ForcingOffset& offset, const PenalizedPath& path,
                          const std::vector<VectorXd>& samples, int jobs) {
  ManifoldChart chart;
  chart.t0 = sys.t.front();
  chart.stable_count = sys.stable_count;
  chart.frame = sys.U.front();
  chart.offset = path.g_values.front();
  chart.samples = samples;
  chart.psi.resize(samples.size());
  chart.solutions.resize(samples.size());

  std::mutex error_mutex;
  std::exception_ptr error;
  parallel_for(static_cast<std::ptrdiff_t>(samples.size()), jobs, [&](std::ptrdiff_t i) {
    try {
      StableSolution sol = solve_stable_solution(sys, f, offset, samples[i]);
      chart.psi[i] = sol.u.front().tail(sys.dim() - sys.stable_count);
      chart.solutions[i] = std::move(sol);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);
  return chart;
}

ManifoldWorkspace::ManifoldWorkspace(const Graph& g, const ObjectiveSet& obj,
                                     const Schedule& s, const VectorXd& saddle,
                                     const ManifoldOptions& opts)
    : Q_(kron_laplacian(g, obj.dimension())),
      penalty_(alpha_clock_penalty(s)),
      alpha_clock_(time_change(s, ClockKind::alpha)),
      opts_(opts) {
  if (obj.dimension() < 2)
    throw std::invalid_argument(
        "manifold: the chart machinery needs d >= 2 (null space of the penalty)");
  if (obj.sum_gradient(saddle).norm() >= kCriticalTol)
    throw std::invalid_argument("manifold: the supplied point is not critical");
  const HessianClass cls = classify_matrix(obj.sum_hessian(saddle));
  if (cls.kind != CriticalKind::saddle)
    throw std::invalid_argument("manifold: the supplied point is not a nondegenerate saddle");

  const int n_nodes = opts.grid_points;
  if (n_nodes < 3) throw std::invalid_argument("manifold: grid_points must be >= 3");
  std::vector<double> t_grid(n_nodes);
  for (int i = 0; i < n_nodes; ++i)
    t_grid[i] = opts.t0 + opts.horizon * i / (n_nodes - 1);

  std::vector<double> betas(n_nodes);
  for (int i = 0; i < n_nodes; ++i) betas[i] = penalty_.beta(t_grid[i]);

  VectorXd lifted(obj.stacked_dimension());
  for (int a = 0; a < obj.agent_count(); ++a)
    lifted.segment(a * obj.dimension(), obj.dimension()) = saddle;

  path_ = critical_path(obj, Q_, lifted, betas, opts.newton_tol);
  sys_ = linearize(obj, Q_, path_, penalty_, t_grid);
  phi_ = forcing_nodes(sys_, path_, penalty_);
  offset_ = forcing_term(sys_, phi_);
  nonlinear_ = make_nonlinear_term(obj, Q_, path_, sys_, penalty_);

  sys_.constants.radius = opts.radius;
  sys_.constants.epsilon = measure_lipschitz(sys_, nonlinear_, opts.radius, 99);
  if (!sys_.constants.contraction_ok())
    throw std::runtime_error(
        "manifold: measured epsilon >= sigma/(6K); shrink --radius or increase --t0");
  for (const auto& cv : offset_.values)
    if (cv.norm() > opts.radius / 3.0)
      throw std::runtime_error(
          "manifold: forcing offset exceeds radius/3; increase --t0");
}

StableSolution ManifoldWorkspace::solve(const VectorXd& a_s) const {
  return solve_stable_solution(sys_, nonlinear_, offset_, a_s);
}

ManifoldChart ManifoldWorkspace::chart(const std::vector<VectorXd>& samples,
                                       int jobs) const {
  return build_chart(sys_, nonlinear_, offset_, path_, samples, jobs);
}

std::vector<VectorXd> ManifoldWorkspace::sample_coordinates(int count,
                                                            std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int k = sys_.stable_count;
  std::vector<VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    VectorXd a(k);
    for (int j = 0; j < k; ++j) a(j) = u(rng);
    const double norm = a.norm();
    if (norm > 0.0) a *= (opts_.radius / 3.0) * 0.9 * std::abs(u(rng)) / norm;
    out.push_back(a);
  }
  return out;
}

double ManifoldWorkspace::original_time(double alpha_clock_time) const {
  return alpha_clock_.T(alpha_clock_time);
}

ProbeResult shooting_probe(const Graph& g, const ObjectiveSet& obj, const Schedule& s,
                           const CriticalPointAtlas& atlas, int saddle_index,
                           const IntegratorOptions& iopts, const ProbeSettings& ps) {
  const CriticalPoint& saddle = atlas.points.at(saddle_index);
  if (saddle.classification.kind != CriticalKind::saddle)
    throw std::invalid_argument("manifold: probe target is not a saddle");
  const int n = g.node_count();
  const int d = obj.dimension();
  // Most negative Hessian eigenvalue direction = the escape direction.
  const VectorXd escape_dir = saddle.classification.eigenvectors.col(0);

  const FlowField field = dgd_field(g, obj, s);
  ProbeResult result;

  auto run = [&](double sval) {
    ++result.integrations;
    const VectorXd x0 = ps.base + sval * ps.direction;
    return integrate(field, x0, ps.t_start, ps.t_start + ps.horizon, iopts);
  };
  auto side = [&](const Trajectory& traj) {
    const auto split = consensus_projection(traj.final_state(), n, d);
    return (split.average - saddle.location).dot(escape_dir) >= 0.0 ? 1 : -1;
  };
  auto classify = [&](const Trajectory& traj) {
    return classify_limit(traj, atlas, obj, n, d);
  };

  Trajectory lo_traj = run(ps.s_min);
  Trajectory hi_traj = run(ps.s_max);
  result.class_lo = classify(lo_traj);
  result.class_hi = classify(hi_traj);
  const int side_lo = side(lo_traj);
  const int side_hi = side(hi_traj);
  if (result.class_lo == result.class_hi || side_lo == side_hi) {
    result.found_boundary = false;
    return result;
  }

  double lo = ps.s_min, hi = ps.s_max;
  while (hi - lo > ps.tol_s) {
    const double mid = 0.5 * (lo + hi);
    const int mid_side = side(run(mid));
    if (mid_side == side_lo)
      lo = mid;
    else
      hi = mid;
  }
  result.found_boundary = true;
  result.bracket_lo = lo;
  result.bracket_hi = hi;
  result.s_star = 0.5 * (lo + hi);

  const Trajectory stay = run(result.s_star);
  double worst = 0.0;
  for (const auto& x : stay.states)
    for (int a = 0; a < n; ++a)
      worst = std::max(worst, (x.segment(a * d, d) - saddle.location).norm());
  result.stay_max_distance = worst;

  result.escape_class_plus = classify(run(result.s_star + ps.escape_offset));
  result.escape_class_minus = classify(run(result.s_star - ps.escape_offset));
  return result;
}

}  // namespace dgdflow
