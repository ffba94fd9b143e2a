#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dgdflow/analysis.hpp"
#include "dgdflow/graph.hpp"
#include "dgdflow/integrate.hpp"
#include "dgdflow/manifold.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/schedule.hpp"

namespace dgdflow {

struct GraphSpec {
  std::string preset;  // "path" | "ring" | "complete" | "star", or empty for explicit edges
  int nodes = 4;
  std::vector<std::pair<int, int>> edges;
};

struct ObjectiveSpec {
  std::string preset = "quartic_saddle";
  int agents = 4;
  int dimension = 2;
  std::optional<std::uint64_t> seed;  // heterogeneity; absent = homogeneous split
};

struct ScheduleSpec {
  double tau_alpha = 0.8;
  double tau_beta = 0.3;
};

struct IntegratorSpec {
  std::string method = "rk45";  // "rk45" | "rk4"
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  double horizon = 1e3;
  double box = 10.0;
  int stride = 10;
};

struct InitSpec {
  std::string kind = "uniform";  // "uniform" | "consensus" | "stacked"
  double halfwidth = 2.0;        // uniform box half-width
  std::vector<double> point;     // consensus point (R^d) or stacked state (R^{Nd})
};

struct ManifoldSpec {
  double t0 = 10.0;
  double horizon = 20.0;
  int grid_points = 1601;
  double radius = 0.04;
  int samples = 5;
};

struct ProbeSpec {
  std::string direction = "unstable";  // "unstable" | "stable" | explicit vector
  std::vector<double> direction_vec;
  double stable_offset = 0.02;  // base = consensus saddle + offset * stable eigvec
  double s_min = -0.5;
  double s_max = 0.5;
  double tol_s = 1e-6;
  double escape_offset = 1e-2;
  double delta_saddle = 0.05;
};

/// One experiment description; round-trips through JSON identically.
struct Scenario {
  std::string experiment = "simulate";  // simulate | basins | consensus | manifold | probe
  std::uint64_t seed = 0;
  std::string clock = "original";  // "original" | "beta" | "alpha" (diagnostic re-timing)
  GraphSpec graph;
  ObjectiveSpec objective;
  ScheduleSpec schedule;
  IntegratorSpec integrator;
  InitSpec init;
  long trials = 200;
  ManifoldSpec manifold;
  ProbeSpec probe;

  nlohmann::json to_json() const;
  /// Throws std::runtime_error with a message naming the failing
  /// module.field on malformed or inadmissible input.
  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::string& path);

  Graph build_graph() const;
  ObjectiveSet build_objective() const;
  Schedule build_schedule() const;
  IntegratorOptions integrator_options() const;
  VectorXd initial_state(std::uint64_t trial_seed) const;
  std::string hash() const;
};

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 0;  // <= 0: all cores
  std::optional<std::uint64_t> seed_override;
};

/// Executes the scenario's experiment, writing CSV/JSON artifacts plus a
/// manifest into out_dir. Returns a process exit status.
int run_scenario(const Scenario& sc, const RunOptions& ro, std::ostream& log);

/// One run per value of the scalar config path `param` (e.g.
/// "schedule.tau_beta"), plus an aggregate CSV. Inadmissible values are
/// rejected up front.
int run_sweep(const Scenario& base, const std::string& param,
              const std::vector<double>& values, const RunOptions& ro, std::ostream& log);

/// Deterministic decimal formatting used for all CSV output.
std::string format_double(double v);

}  // namespace dgdflow
