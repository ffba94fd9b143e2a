// Benchmark: Monte-Carlo basin trials with the serial reference path vs the
// OpenMP path at increasing thread counts. Same seeds, identical results
// expected; only wall time differs.

#include <chrono>
#include <cstdio>

#include "dgdflow/analysis.hpp"
#include "dgdflow/graph.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/parallel.hpp"
#include "dgdflow/schedule.hpp"

using namespace dgdflow;

int main(int argc, char** argv) {
  const long trials = argc > 1 ? std::atol(argv[1]) : 64;
  const Graph g = build_preset("ring", 4);
  const ObjectiveSet obj = make_preset("quartic_saddle", 4, 2);
  const Schedule sched(0.8, 0.3);
  const CriticalPointAtlas atlas = find_critical_points(obj, 3.0, 200, 1);

  BasinScenario bs;
  bs.graph = &g;
  bs.objective = &obj;
  bs.schedule = &sched;
  bs.horizon = 1e3;
  bs.integrator.stride = 50;

  std::printf("%-8s %-12s %-10s %-12s\n", "jobs", "time_s", "speedup", "unresolved");
  double serial_time = 0.0;
  BasinStats reference;
  for (int jobs : {1, 2, 4, resolve_jobs(0)}) {
    const auto start = std::chrono::steady_clock::now();
    const BasinStats stats = monte_carlo_basins(bs, atlas, trials, 7, jobs);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (jobs == 1) {
      serial_time = dt;
      reference = stats;
    }
    bool same = stats.hits == reference.hits && stats.unresolved == reference.unresolved;
    std::printf("%-8d %-12.3f %-10.2f %-12ld %s\n", jobs, dt,
                serial_time > 0 ? serial_time / dt : 1.0, stats.unresolved,
                same ? "" : "MISMATCH vs serial!");
  }
  return 0;
}
