#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgdflow/dynamics.hpp"
#include "dgdflow/graph.hpp"
#include "dgdflow/integrate.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/schedule.hpp"

namespace dgdflow {

struct ConsensusReport {
  std::vector<double> times;
  std::vector<double> perp_norms;            // ||y_perp(t)||
  std::vector<double> bound_envelope;        // empty when not requested
  double final_residual = 0.0;
};

struct CriticalPoint {
  VectorXd location;
  HessianClass classification;
  double f_value = 0.0;
};

struct CriticalPointAtlas {
  std::vector<CriticalPoint> points;
  int diverged_seeds = 0;
  double dedup_tol = 1e-5;
};

struct ClassifyOptions {
  double capture_radius = 0.1;
  double consensus_tol = 1e-2;
  // Consistent with capture_radius: |grad f| within the capture ball stays
  // below (max Hessian eigenvalue) * radius; 0.5 covers the presets.
  double grad_tol = 0.5;
};

struct BasinStats {
  long trials = 0;
  std::vector<long> hits;  // parallel to atlas.points
  long unresolved = 0;
  std::uint64_t seed = 0;
  double init_halfwidth = 0.0;
};

/// Per-sample disagreement norms of a stored trajectory.
ConsensusReport consensus_residual(const Trajectory& traj, int agent_count, int dimension);

/// Same trajectory re-timed through a clock change: sample times map to S(t).
Trajectory retimed(const Trajectory& traj, const TimeChange& tc);

/// Two-term decay bound for the disagreement in the beta clock: the exact
/// homogeneous consensus decay of x0 plus the convolution
/// C * int_0^t exp(-lambda2 (t-s)) (s+1)^{-tau_gamma} ds, with C the
/// grid-sampled max stacked-gradient norm over the validity box and tau_gamma
/// fitted so the ratio process stays below (t+1)^{-tau_gamma}.
std::vector<double> consensus_bound_envelope(const Graph& g, const ObjectiveSet& obj,
                                             const Schedule& s, const VectorXd& x0,
                                             const std::vector<double>& t_grid,
                                             double box_halfwidth = 10.0);

/// Newton search for critical points of the sum objective from seeded random
/// starts in [-halfwidth, halfwidth]^d; converged points are deduplicated and
/// classified. Divergent seeds are counted, not fatal.
CriticalPointAtlas find_critical_points(const ObjectiveSet& obj, double region_halfwidth,
                                        int n_seeds, std::uint64_t rng_seed);

/// The perturbation r(t) = -(1/N) sum_n (grad f_n(y_n) - grad f_n(y_avg))
/// along a trajectory, with norms and the windowed-integral statistic
/// sup_{0<=v<=window} || int_t^{t+v} r ||.
struct PerturbationSeries {
  std::vector<double> times;
  std::vector<VectorXd> values;
  std::vector<double> norms;
  double final_norm = 0.0;
};

PerturbationSeries perturbation_residual(const Trajectory& traj, const ObjectiveSet& obj,
                                         int agent_count, int dimension);

/// sup over v in [0, window] of || int_t^{t+v} r du || starting at `t_start`
/// (trapezoid on the stored grid).
double windowed_integral_sup(const PerturbationSeries& series, double t_start,
                             double window);

/// Index into atlas.points, or nullopt when unresolved.
std::optional<int> classify_limit(const Trajectory& traj, const CriticalPointAtlas& atlas,
                                  const ObjectiveSet& obj, int agent_count, int dimension,
                                  const ClassifyOptions& opts = {});

struct BasinScenario {
  const Graph* graph = nullptr;
  const ObjectiveSet* objective = nullptr;
  const Schedule* schedule = nullptr;
  IntegratorOptions integrator;
  double horizon = 1e3;
  double init_halfwidth = 2.0;
  double box_halfwidth = 10.0;
  ClassifyOptions classify;
};

/// Independent uniform initializations in [-init_halfwidth, init_halfwidth]^{Nd},
/// integrated and classified against the atlas. Reproducible for a fixed seed
/// regardless of the parallelism degree `jobs`.
BasinStats monte_carlo_basins(const BasinScenario& scenario,
                              const CriticalPointAtlas& atlas, long trials,
                              std::uint64_t rng_seed, int jobs = 0);

}  // namespace dgdflow
