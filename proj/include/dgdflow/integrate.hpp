#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dgdflow/dynamics.hpp"

namespace dgdflow {

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorOptions {
  Method method = Method::rk45_adaptive;
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 1e3;
  long max_steps = 4'000'000;
  int stride = 1;  // store every stride-th accepted step (final step always kept)

  void validate() const;
};

enum class Termination { horizon_reached, event_fired, box_exit, step_failure };

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  Termination termination = Termination::horizon_reached;
  std::string event_name;
  long steps_taken = 0;

  const VectorXd& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

Trajectory integrate(const FlowField& field, const VectorXd& x0, double t0, double t_end,
                     const IntegratorOptions& opts);

/// Integrates until predicate(t, x) first holds at a step point (checked at t0
/// too), or until t_end / max_steps.
Trajectory integrate_until(const FlowField& field, const VectorXd& x0, double t0,
                           double t_end,
                           const std::function<bool(double, const VectorXd&)>& predicate,
                           const std::string& event_name, const IntegratorOptions& opts);

/// Like integrate, but the stored samples are dense-output interpolations at
/// the given strictly increasing times within [t0, t_end].
Trajectory integrate_sampled(const FlowField& field, const VectorXd& x0, double t0,
                             double t_end, const std::vector<double>& sample_times,
                             const IntegratorOptions& opts);

/// Measured global-convergence order of rk4_fixed on a problem with a known
/// solution: least-squares slope of log(error) vs log(h) over step halvings.
double order_check(const FlowField& field, const VectorXd& x0, double t0, double t_end,
                   const std::function<VectorXd(double)>& reference, double h0 = 0.2,
                   int levels = 4);

}  // namespace dgdflow
