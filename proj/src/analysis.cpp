#include "dgdflow/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dgdflow/numerics.hpp"
#include "dgdflow/parallel.hpp"

namespace dgdflow {

ConsensusReport consensus_residual(const Trajectory& traj, int agent_count,
                                   int dimension) {
  ConsensusReport report;
  report.times = traj.times;
  report.perp_norms.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    const auto split = consensus_projection(x, agent_count, dimension);
    report.perp_norms.push_back(split.disagreement.norm());
  }
  report.final_residual = report.perp_norms.empty() ? 0.0 : report.perp_norms.back();
  return report;
}

Trajectory retimed(const Trajectory& traj, const TimeChange& tc) {
  Trajectory out = traj;
  for (auto& t : out.times) t = tc.S(t);
  return out;
}

namespace {

// Grid-sampled max of the stacked gradient norm over the validity box,
// decomposed per agent.
double gradient_bound(const ObjectiveSet& obj, double halfwidth) {
  const int d = obj.dimension();
  double total = 0.0;
  for (int n = 0; n < obj.agent_count(); ++n) {
    double worst = 0.0;
    if (d <= 3) {
      const int pts = 21;
      std::vector<int> idx(d, 0);
      VectorXd a(d);
      while (true) {
        for (int j = 0; j < d; ++j) a(j) = -halfwidth + 2.0 * halfwidth * idx[j] / (pts - 1);
        worst = std::max(worst, obj.local(n).gradient(a).squaredNorm());
        int j = 0;
        while (j < d && ++idx[j] == pts) idx[j++] = 0;
        if (j == d) break;
      }
    } else {
      std::mt19937_64 rng(17);
      std::uniform_real_distribution<double> u(-halfwidth, halfwidth);
      VectorXd a(d);
      for (int k = 0; k < 4000; ++k) {
        for (int j = 0; j < d; ++j) a(j) = u(rng);
        worst = std::max(worst, obj.local(n).gradient(a).squaredNorm());
      }
    }
    total += worst;
  }
  return std::sqrt(total);
}

}  // namespace

std::vector<double> consensus_bound_envelope(const Graph& g, const ObjectiveSet& obj,
                                             const Schedule& s, const VectorXd& x0,
                                             const std::vector<double>& t_grid,
                                             double box_halfwidth) {
  const SpectralData sd = laplacian(g);
  if (sd.lambda2 <= kSpectralTol)
    throw std::invalid_argument("analysis: envelope requires a connected graph");
  const int n = g.node_count();
  const int d = obj.dimension();
  if (x0.size() != static_cast<Eigen::Index>(n) * d)
    throw std::invalid_argument("analysis: x0 length is not N*d");

  // Modal coefficients of x0 on the non-consensus Laplacian eigenmodes.
  std::vector<std::pair<double, double>> modes;  // (eigenvalue, |coef|^2)
  for (int j = 0; j < n; ++j) {
    if (sd.eigenvalues(j) <= kSpectralTol) continue;
    for (int c = 0; c < d; ++c) {
      double coef = 0.0;
      for (int i = 0; i < n; ++i) coef += sd.eigenvectors(i, j) * x0(i * d + c);
      modes.push_back({sd.eigenvalues(j), coef * coef});
    }
  }

  const double big_c = gradient_bound(obj, box_halfwidth);
  const TimeChange tc = time_change(s, ClockKind::beta);
  const double t_last = t_grid.empty() ? 1.0 : std::max(1.0, t_grid.back());
  const double tau_gamma = fit_gamma_exponent(tc, t_last);
  if (tau_gamma <= 0.0)
    throw std::runtime_error("analysis: fitted ratio exponent is not positive");

  std::vector<double> env;
  env.reserve(t_grid.size());
  for (double t : t_grid) {
    double hom2 = 0.0;
    for (const auto& [lam, c2] : modes) hom2 += std::exp(-2.0 * lam * t) * c2;
    double conv = 0.0;
    if (t > 0.0) {
      const double vmax = std::min(t, 60.0 / sd.lambda2);
      conv = adaptive_simpson(
          [&](double v) {
            return std::exp(-sd.lambda2 * v) * std::pow(t - v + 1.0, -tau_gamma);
          },
          0.0, vmax, 1e-10 * (1.0 + 1.0 / sd.lambda2));
    }
    env.push_back(std::sqrt(hom2) + big_c * conv * (1.0 + 1e-7));
  }
  return env;
}

CriticalPointAtlas find_critical_points(const ObjectiveSet& obj, double region_halfwidth,
                                        int n_seeds, std::uint64_t rng_seed) {
  const int d = obj.dimension();
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> u(-region_halfwidth, region_halfwidth);
  CriticalPointAtlas atlas;

  for (int seed = 0; seed < n_seeds; ++seed) {
    VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = u(rng);
    bool failed = false;
    // Iterate to step stagnation so roots with vanishing Hessians still
    // polish down to machine level.
    for (int it = 0; it < 120; ++it) {
      const VectorXd grad = obj.sum_gradient(x);
      if (grad.norm() < 1e-13) break;
      const MatrixXd hess = obj.sum_hessian(x);
      Eigen::FullPivLU<MatrixXd> lu(hess);
      if (!lu.isInvertible()) {
        failed = true;
        break;
      }
      const VectorXd step = lu.solve(grad);
      if (!step.allFinite() || step.norm() > 20.0 * region_halfwidth) {
        failed = true;
        break;
      }
      x -= step;
      if (x.cwiseAbs().maxCoeff() > 10.0 * region_halfwidth) {
        failed = true;
        break;
      }
      if (step.norm() < 1e-14 * (1.0 + x.norm())) break;
    }
    const bool converged = !failed && obj.sum_gradient(x).norm() < 1e-10;
    if (!converged || x.cwiseAbs().maxCoeff() > region_halfwidth + 1e-6) {
      ++atlas.diverged_seeds;
      continue;
    }
    bool duplicate = false;
    for (const auto& p : atlas.points)
      if ((p.location - x).norm() < atlas.dedup_tol) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    CriticalPoint cp;
    cp.location = x;
    cp.classification = classify_hessian(obj, x);
    cp.f_value = obj.eval_sum(x);
    atlas.points.push_back(std::move(cp));
  }

  std::sort(atlas.points.begin(), atlas.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              for (int j = 0; j < a.location.size(); ++j) {
                if (a.location(j) < b.location(j) - 1e-12) return true;
                if (a.location(j) > b.location(j) + 1e-12) return false;
              }
              return false;
            });
  return atlas;
}

PerturbationSeries perturbation_residual(const Trajectory& traj, const ObjectiveSet& obj,
                                         int agent_count, int dimension) {
  PerturbationSeries series;
  series.times = traj.times;
  series.values.reserve(traj.states.size());
  series.norms.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    const auto split = consensus_projection(x, agent_count, dimension);
    VectorXd r = VectorXd::Zero(dimension);
    for (int n = 0; n < agent_count; ++n) {
      r -= obj.local(n).gradient(x.segment(n * dimension, dimension)) -
           obj.local(n).gradient(split.average);
    }
    r /= agent_count;
    series.values.push_back(r);
    series.norms.push_back(series.values.back().norm());
  }
  series.final_norm = series.norms.empty() ? 0.0 : series.norms.back();
  return series;
}

double windowed_integral_sup(const PerturbationSeries& series, double t_start,
                             double window) {
  if (series.times.size() < 2)
    throw std::invalid_argument("analysis: series too short for windowed integral");
  std::size_t i0 = 0;
  while (i0 + 1 < series.times.size() && series.times[i0] < t_start) ++i0;
  VectorXd acc = VectorXd::Zero(series.values.front().size());
  double sup = 0.0;
  for (std::size_t j = i0 + 1; j < series.times.size(); ++j) {
    if (series.times[j] > series.times[i0] + window) break;
    const double dt = series.times[j] - series.times[j - 1];
    acc += 0.5 * dt * (series.values[j] + series.values[j - 1]);
    sup = std::max(sup, acc.norm());
  }
  return sup;
}

std::optional<int> classify_limit(const Trajectory& traj, const CriticalPointAtlas& atlas,
                                  const ObjectiveSet& obj, int agent_count, int dimension,
                                  const ClassifyOptions& opts) {
  if (atlas.points.empty())
    throw std::invalid_argument("analysis: classify_limit needs a nonempty atlas");
  const auto split = consensus_projection(traj.final_state(), agent_count, dimension);
  if (split.disagreement.norm() >= opts.consensus_tol) return std::nullopt;
  if (obj.sum_gradient(split.average).norm() >= opts.grad_tol) return std::nullopt;
  int best = -1;
  double best_dist = opts.capture_radius;
  for (std::size_t i = 0; i < atlas.points.size(); ++i) {
    const double dist = (atlas.points[i].location - split.average).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

BasinStats monte_carlo_basins(const BasinScenario& scenario,
                              const CriticalPointAtlas& atlas, long trials,
                              std::uint64_t rng_seed, int jobs) {
  if (trials < 1) throw std::invalid_argument("analysis: trials must be >= 1");
  if (!scenario.graph || !scenario.objective || !scenario.schedule)
    throw std::invalid_argument("analysis: basin scenario is incomplete");
  const int n = scenario.graph->node_count();
  const int d = scenario.objective->dimension();
  const FlowField field = dgd_field(*scenario.graph, *scenario.objective,
                                    *scenario.schedule, scenario.box_halfwidth);

  std::vector<int> outcome(trials, -1);
  parallel_for(trials, jobs, [&](std::ptrdiff_t i) {
    std::mt19937_64 rng(derive_seed(rng_seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(-scenario.init_halfwidth,
                                             scenario.init_halfwidth);
    VectorXd x0(n * d);
    for (int j = 0; j < n * d; ++j) x0(j) = u(rng);
    const Trajectory traj =
        integrate(field, x0, 0.0, scenario.horizon, scenario.integrator);
    if (traj.termination != Termination::horizon_reached) return;
    const auto id = classify_limit(traj, atlas, *scenario.objective, n, d,
                                   scenario.classify);
    if (id) outcome[i] = *id;
  });

  BasinStats stats;
  stats.trials = trials;
  stats.seed = rng_seed;
  stats.init_halfwidth = scenario.init_halfwidth;
  stats.hits.assign(atlas.points.size(), 0);
  for (int o : outcome) {
    if (o < 0)
      ++stats.unresolved;
    else
      ++stats.hits[o];
  }
  return stats;
}

}  // namespace dgdflow
