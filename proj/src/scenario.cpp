#include "dgdflow/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dgdflow/numerics.hpp"
#include "dgdflow/parallel.hpp"
#include "dgdflow/selftest.hpp"

namespace dgdflow {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw std::runtime_error(field + ": " + msg);
}

double get_number(const json& j, const std::string& module, const std::string& field,
                  double def) {
  if (!j.contains(field)) return def;
  if (!j.at(field).is_number()) fail(module + "." + field, "expected a number");
  return j.at(field).get<double>();
}

long get_integer(const json& j, const std::string& module, const std::string& field,
                 long def) {
  if (!j.contains(field)) return def;
  if (!j.at(field).is_number_integer()) fail(module + "." + field, "expected an integer");
  return j.at(field).get<long>();
}

std::string get_string(const json& j, const std::string& module, const std::string& field,
                       const std::string& def) {
  if (!j.contains(field)) return def;
  if (!j.at(field).is_string()) fail(module + "." + field, "expected a string");
  return j.at(field).get<std::string>();
}

std::vector<double> get_vector(const json& j, const std::string& module,
                               const std::string& field) {
  std::vector<double> out;
  if (!j.contains(field)) return out;
  if (!j.at(field).is_array()) fail(module + "." + field, "expected an array of numbers");
  for (const auto& v : j.at(field)) {
    if (!v.is_number()) fail(module + "." + field, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string kind_name(CriticalKind k) {
  switch (k) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

json atlas_to_json(const CriticalPointAtlas& atlas) {
  json out = json::array();
  for (const auto& p : atlas.points) {
    json entry;
    entry["location"] = std::vector<double>(p.location.data(),
                                            p.location.data() + p.location.size());
    entry["kind"] = kind_name(p.classification.kind);
    entry["negative_eigenvalues"] = p.classification.negative_count;
    entry["f_value"] = p.f_value;
    out.push_back(entry);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("io: cannot write " + path.string());
  os << text;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) body_ << ',';
      body_ << columns_[i];
    }
    body_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) body_ << ',';
      body_ << format_double(values[i]);
    }
    body_ << '\n';
  }

  std::string str() const { return body_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream body_;
};

int saddle_index_of(const CriticalPointAtlas& atlas) {
  for (std::size_t i = 0; i < atlas.points.size(); ++i)
    if (atlas.points[i].classification.kind == CriticalKind::saddle)
      return static_cast<int>(i);
  fail("objective.preset", "no saddle point found in the critical-point atlas");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

json Scenario::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["clock"] = clock;
  json jg;
  jg["nodes"] = graph.nodes;
  if (!graph.preset.empty()) jg["preset"] = graph.preset;
  if (!graph.edges.empty()) {
    json edges = json::array();
    for (const auto& [a, b] : graph.edges) edges.push_back({a, b});
    jg["edges"] = edges;
  }
  j["graph"] = jg;
  json jo;
  jo["preset"] = objective.preset;
  jo["N"] = objective.agents;
  jo["d"] = objective.dimension;
  if (objective.seed) jo["seed"] = *objective.seed;
  j["objective"] = jo;
  j["schedule"] = {{"tau_alpha", schedule.tau_alpha}, {"tau_beta", schedule.tau_beta}};
  j["integrator"] = {{"method", integrator.method}, {"abs_tol", integrator.abs_tol},
                     {"rel_tol", integrator.rel_tol}, {"horizon", integrator.horizon},
                     {"box", integrator.box},         {"stride", integrator.stride}};
  json ji;
  ji["kind"] = init.kind;
  ji["halfwidth"] = init.halfwidth;
  if (!init.point.empty()) ji["point"] = init.point;
  j["init"] = ji;
  j["trials"] = trials;
  j["manifold"] = {{"t0", manifold.t0},
                   {"horizon", manifold.horizon},
                   {"grid_points", manifold.grid_points},
                   {"radius", manifold.radius},
                   {"samples", manifold.samples}};
  json jp;
  jp["direction"] = probe.direction;
  if (!probe.direction_vec.empty()) jp["direction_vec"] = probe.direction_vec;
  jp["stable_offset"] = probe.stable_offset;
  jp["s_min"] = probe.s_min;
  jp["s_max"] = probe.s_max;
  jp["tol_s"] = probe.tol_s;
  jp["escape_offset"] = probe.escape_offset;
  jp["delta_saddle"] = probe.delta_saddle;
  j["probe"] = jp;
  return j;
}

Scenario Scenario::from_json(const json& j) {
  if (!j.is_object()) fail("config", "top level must be an object");
  Scenario sc;
  sc.experiment = get_string(j, "config", "experiment", sc.experiment);
  if (sc.experiment != "simulate" && sc.experiment != "basins" &&
      sc.experiment != "consensus" && sc.experiment != "manifold" &&
      sc.experiment != "probe")
    fail("config.experiment", "unknown experiment '" + sc.experiment + "'");
  sc.seed = static_cast<std::uint64_t>(get_integer(j, "config", "seed", 0));
  sc.clock = get_string(j, "config", "clock", sc.clock);
  if (sc.clock != "original" && sc.clock != "beta" && sc.clock != "alpha")
    fail("config.clock", "expected original|beta|alpha");

  if (j.contains("graph")) {
    const json& jg = j.at("graph");
    sc.graph.nodes = static_cast<int>(get_integer(jg, "graph", "nodes", sc.graph.nodes));
    sc.graph.preset = get_string(jg, "graph", "preset", "");
    if (jg.contains("edges")) {
      if (!jg.at("edges").is_array()) fail("graph.edges", "expected an array of pairs");
      for (const auto& e : jg.at("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer())
          fail("graph.edges", "each edge must be a pair of integer node ids");
        sc.graph.edges.push_back({e[0].get<int>(), e[1].get<int>()});
      }
    }
    if (sc.graph.preset.empty() && sc.graph.edges.empty())
      fail("graph.edges", "need either a preset or an explicit edge list");
  }

  if (j.contains("objective")) {
    const json& jo = j.at("objective");
    sc.objective.preset = get_string(jo, "objective", "preset", sc.objective.preset);
    sc.objective.agents =
        static_cast<int>(get_integer(jo, "objective", "N", sc.objective.agents));
    sc.objective.dimension =
        static_cast<int>(get_integer(jo, "objective", "d", sc.objective.dimension));
    if (jo.contains("seed"))
      sc.objective.seed =
          static_cast<std::uint64_t>(get_integer(jo, "objective", "seed", 0));
  }

  if (j.contains("schedule")) {
    const json& js = j.at("schedule");
    sc.schedule.tau_alpha = get_number(js, "schedule", "tau_alpha", sc.schedule.tau_alpha);
    sc.schedule.tau_beta = get_number(js, "schedule", "tau_beta", sc.schedule.tau_beta);
  }

  if (j.contains("integrator")) {
    const json& ji = j.at("integrator");
    sc.integrator.method = get_string(ji, "integrator", "method", sc.integrator.method);
    if (sc.integrator.method != "rk45" && sc.integrator.method != "rk4")
      fail("integrator.method", "expected rk45|rk4");
    sc.integrator.abs_tol = get_number(ji, "integrator", "abs_tol", sc.integrator.abs_tol);
    sc.integrator.rel_tol = get_number(ji, "integrator", "rel_tol", sc.integrator.rel_tol);
    sc.integrator.horizon = get_number(ji, "integrator", "horizon", sc.integrator.horizon);
    sc.integrator.box = get_number(ji, "integrator", "box", sc.integrator.box);
    sc.integrator.stride =
        static_cast<int>(get_integer(ji, "integrator", "stride", sc.integrator.stride));
    if (sc.integrator.horizon <= 0) fail("integrator.horizon", "must be positive");
    if (sc.integrator.stride < 1) fail("integrator.stride", "must be >= 1");
  }

  if (j.contains("init")) {
    const json& ji = j.at("init");
    sc.init.kind = get_string(ji, "init", "kind", sc.init.kind);
    if (sc.init.kind != "uniform" && sc.init.kind != "consensus" &&
        sc.init.kind != "stacked")
      fail("init.kind", "expected uniform|consensus|stacked");
    sc.init.halfwidth = get_number(ji, "init", "halfwidth", sc.init.halfwidth);
    sc.init.point = get_vector(ji, "init", "point");
  }

  sc.trials = get_integer(j, "config", "trials", sc.trials);
  if (sc.trials < 1) fail("config.trials", "must be >= 1");

  if (j.contains("manifold")) {
    const json& jm = j.at("manifold");
    sc.manifold.t0 = get_number(jm, "manifold", "t0", sc.manifold.t0);
    sc.manifold.horizon = get_number(jm, "manifold", "horizon", sc.manifold.horizon);
    sc.manifold.grid_points =
        static_cast<int>(get_integer(jm, "manifold", "grid_points", sc.manifold.grid_points));
    sc.manifold.radius = get_number(jm, "manifold", "radius", sc.manifold.radius);
    sc.manifold.samples =
        static_cast<int>(get_integer(jm, "manifold", "samples", sc.manifold.samples));
    if (sc.manifold.grid_points < 3) fail("manifold.grid_points", "must be >= 3");
  }

  if (j.contains("probe")) {
    const json& jp = j.at("probe");
    sc.probe.direction = get_string(jp, "probe", "direction", sc.probe.direction);
    sc.probe.direction_vec = get_vector(jp, "probe", "direction_vec");
    if (sc.probe.direction != "unstable" && sc.probe.direction != "stable" &&
        sc.probe.direction != "vector")
      fail("probe.direction", "expected unstable|stable|vector");
    if (sc.probe.direction == "vector" && sc.probe.direction_vec.empty())
      fail("probe.direction_vec", "required when probe.direction is 'vector'");
    sc.probe.stable_offset = get_number(jp, "probe", "stable_offset", sc.probe.stable_offset);
    sc.probe.s_min = get_number(jp, "probe", "s_min", sc.probe.s_min);
    sc.probe.s_max = get_number(jp, "probe", "s_max", sc.probe.s_max);
    sc.probe.tol_s = get_number(jp, "probe", "tol_s", sc.probe.tol_s);
    sc.probe.escape_offset =
        get_number(jp, "probe", "escape_offset", sc.probe.escape_offset);
    sc.probe.delta_saddle = get_number(jp, "probe", "delta_saddle", sc.probe.delta_saddle);
    if (!(sc.probe.s_min < sc.probe.s_max)) fail("probe.s_min", "need s_min < s_max");
  }

  // Eager validation of the derived pieces so config errors surface here.
  try {
    sc.build_graph();
  } catch (const std::exception& e) {
    fail(sc.graph.preset.empty() ? "graph.edges" : "graph.preset", e.what());
  }
  if (sc.objective.agents != sc.graph.nodes)
    fail("objective.N", "must equal graph.nodes");
  try {
    sc.build_objective();
  } catch (const std::exception& e) {
    fail("objective.preset", e.what());
  }
  try {
    sc.build_schedule();
  } catch (const std::exception& e) {
    fail("schedule.tau_beta", e.what());
  }
  if (sc.init.kind == "consensus" &&
      sc.init.point.size() != static_cast<std::size_t>(sc.objective.dimension))
    fail("init.point", "consensus point must have length d");
  if (sc.init.kind == "stacked" &&
      sc.init.point.size() !=
          static_cast<std::size_t>(sc.objective.dimension * sc.objective.agents))
    fail("init.point", "stacked point must have length N*d");
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: parse error: ") + e.what());
  }
  return from_json(j);
}

Graph Scenario::build_graph() const {
  if (!graph.preset.empty()) return build_preset(graph.preset, graph.nodes);
  return dgdflow::build_graph(graph.nodes, graph.edges);
}

ObjectiveSet Scenario::build_objective() const {
  return make_preset(objective.preset, objective.agents, objective.dimension,
                     objective.seed);
}

Schedule Scenario::build_schedule() const {
  return Schedule(schedule.tau_alpha, schedule.tau_beta);
}

IntegratorOptions Scenario::integrator_options() const {
  IntegratorOptions opts;
  opts.method = integrator.method == "rk4" ? Method::rk4_fixed : Method::rk45_adaptive;
  opts.abs_tol = integrator.abs_tol;
  opts.rel_tol = integrator.rel_tol;
  opts.stride = integrator.stride;
  return opts;
}

VectorXd Scenario::initial_state(std::uint64_t trial_seed) const {
  const int n = objective.agents;
  const int d = objective.dimension;
  VectorXd x0(n * d);
  if (init.kind == "uniform") {
    std::mt19937_64 rng(trial_seed);
    std::uniform_real_distribution<double> u(-init.halfwidth, init.halfwidth);
    for (int i = 0; i < n * d; ++i) x0(i) = u(rng);
  } else if (init.kind == "consensus") {
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < d; ++j) x0(a * d + j) = init.point[j];
  } else {
    for (int i = 0; i < n * d; ++i) x0(i) = init.point[i];
  }
  return x0;
}

std::string Scenario::hash() const { return fnv1a_hex(to_json().dump()); }

namespace {

struct RunContext {
  const Scenario& sc;
  std::filesystem::path out;
  int jobs;
  std::uint64_t seed;
  std::ostream& log;
};

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::event_fired: return "event_fired";
    case Termination::box_exit: return "box_exit";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const ObjectiveSet& obj, int n, int d) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < n * d; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("perp_norm");
  header.push_back("grad_norm");
  header.push_back("f_avg");
  CsvWriter csv(header);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto split = consensus_projection(traj.states[i], n, d);
    std::vector<double> row{traj.times[i]};
    for (int j = 0; j < n * d; ++j) row.push_back(traj.states[i](j));
    row.push_back(split.disagreement.norm());
    row.push_back(obj.sum_gradient(split.average).norm());
    row.push_back(obj.eval_sum(split.average));
    csv.row(row);
  }
  write_text(path, csv.str());
}

Trajectory simulate_once(const RunContext& ctx, const Graph& g, const ObjectiveSet& obj,
                         const Schedule& sched) {
  const FlowField field = dgd_field(g, obj, sched, ctx.sc.integrator.box);
  const VectorXd x0 = ctx.sc.initial_state(ctx.seed);
  return integrate(field, x0, 0.0, ctx.sc.integrator.horizon,
                   ctx.sc.integrator_options());
}

std::vector<double> report_times(const RunContext& ctx, const Schedule& sched,
                                 const std::vector<double>& times) {
  if (ctx.sc.clock == "original") return times;
  const TimeChange tc = time_change(
      sched, ctx.sc.clock == "beta" ? ClockKind::beta : ClockKind::alpha);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(tc.S(t));
  return out;
}

json run_simulate(const RunContext& ctx) {
  const Graph g = ctx.sc.build_graph();
  const ObjectiveSet obj = ctx.sc.build_objective();
  const Schedule sched = ctx.sc.build_schedule();
  const Trajectory traj = simulate_once(ctx, g, obj, sched);
  const int n = g.node_count();
  const int d = obj.dimension();
  write_trajectory_csv(ctx.out / "trajectory.csv", traj, obj, n, d);

  const ConsensusReport report = consensus_residual(traj, n, d);
  const std::vector<double> times = report_times(ctx, sched, report.times);
  CsvWriter csv({"t", "perp_norm"});
  for (std::size_t i = 0; i < times.size(); ++i)
    csv.row({times[i], report.perp_norms[i]});
  write_text(ctx.out / "consensus.csv", csv.str());

  const auto split = consensus_projection(traj.final_state(), n, d);
  json summary;
  summary["termination"] = termination_name(traj.termination);
  summary["steps"] = traj.steps_taken;
  summary["final_time"] = traj.final_time();
  summary["final_perp_norm"] = report.final_residual;
  summary["final_grad_norm"] = obj.sum_gradient(split.average).norm();
  summary["final_f_avg"] = obj.eval_sum(split.average);
  return summary;
}

json run_consensus(const RunContext& ctx) {
  const Graph g = ctx.sc.build_graph();
  const ObjectiveSet obj = ctx.sc.build_objective();
  const Schedule sched = ctx.sc.build_schedule();
  const Trajectory traj = simulate_once(ctx, g, obj, sched);
  const int n = g.node_count();
  const int d = obj.dimension();
  if (traj.termination != Termination::horizon_reached)
    throw std::runtime_error("integrator.horizon: run ended early (" +
                             termination_name(traj.termination) + ")");

  // The decay bound lives in the beta clock; re-time the measured residual.
  const TimeChange tc = time_change(sched, ClockKind::beta);
  const Trajectory beta_traj = retimed(traj, tc);
  ConsensusReport report = consensus_residual(beta_traj, n, d);
  report.bound_envelope = consensus_bound_envelope(
      g, obj, sched, traj.states.front(), report.times, ctx.sc.integrator.box);

  CsvWriter csv({"t", "perp_norm", "envelope"});
  bool below = true;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    csv.row({report.times[i], report.perp_norms[i], report.bound_envelope[i]});
    if (report.bound_envelope[i] > 0.0)
      worst_ratio = std::max(worst_ratio, report.perp_norms[i] / report.bound_envelope[i]);
    if (report.perp_norms[i] > report.bound_envelope[i] * (1.0 + 1e-9) + 1e-12)
      below = false;
  }
  write_text(ctx.out / "consensus.csv", csv.str());

  json summary;
  summary["final_perp_norm"] = report.final_residual;
  summary["below_envelope"] = below;
  summary["worst_ratio"] = worst_ratio;
  summary["samples"] = report.times.size();
  return summary;
}

json run_basins(const RunContext& ctx) {
  const Graph g = ctx.sc.build_graph();
  const ObjectiveSet obj = ctx.sc.build_objective();
  const Schedule sched = ctx.sc.build_schedule();
  const CriticalPointAtlas atlas =
      find_critical_points(obj, 3.0, 200, derive_seed(ctx.seed, 0xA71A5));

  BasinScenario bs;
  bs.graph = &g;
  bs.objective = &obj;
  bs.schedule = &sched;
  bs.integrator = ctx.sc.integrator_options();
  bs.horizon = ctx.sc.integrator.horizon;
  bs.init_halfwidth = ctx.sc.init.halfwidth;
  bs.box_halfwidth = ctx.sc.integrator.box;
  const BasinStats stats = monte_carlo_basins(bs, atlas, ctx.sc.trials, ctx.seed, ctx.jobs);

  json summary;
  summary["scenario"] = ctx.sc.to_json();
  summary["scenario_hash"] = ctx.sc.hash();
  summary["seed"] = ctx.seed;
  summary["trials"] = stats.trials;
  summary["unresolved"] = stats.unresolved;
  json counts = json::array();
  long saddle_hits = 0;
  for (std::size_t i = 0; i < atlas.points.size(); ++i) {
    json entry;
    entry["location"] = std::vector<double>(
        atlas.points[i].location.data(),
        atlas.points[i].location.data() + atlas.points[i].location.size());
    entry["kind"] = kind_name(atlas.points[i].classification.kind);
    entry["hits"] = stats.hits[i];
    if (atlas.points[i].classification.kind == CriticalKind::saddle)
      saddle_hits += stats.hits[i];
    counts.push_back(entry);
  }
  summary["counts"] = counts;
  summary["saddle_hits"] = saddle_hits;
  write_text(ctx.out / "basins.json", summary.dump(2) + "\n");
  return summary;
}

json run_manifold(const RunContext& ctx) {
  const Graph g = ctx.sc.build_graph();
  const ObjectiveSet obj = ctx.sc.build_objective();
  const Schedule sched = ctx.sc.build_schedule();
  const CriticalPointAtlas atlas =
      find_critical_points(obj, 3.0, 200, derive_seed(ctx.seed, 0xA71A5));
  const int saddle_idx = saddle_index_of(atlas);

  ManifoldOptions opts;
  opts.t0 = ctx.sc.manifold.t0;
  opts.horizon = ctx.sc.manifold.horizon;
  opts.grid_points = ctx.sc.manifold.grid_points;
  opts.radius = ctx.sc.manifold.radius;
  opts.samples = ctx.sc.manifold.samples;
  const ManifoldWorkspace ws(g, obj, sched, atlas.points[saddle_idx].location, opts);
  const auto samples = ws.sample_coordinates(opts.samples, derive_seed(ctx.seed, 0xC11A));
  const ManifoldChart chart = ws.chart(samples, ctx.jobs);

  const int k = chart.stable_count;
  const int p = ws.system().dim() - k;
  std::vector<std::string> header;
  for (int j = 0; j < k; ++j) header.push_back("a" + std::to_string(j));
  for (int j = 0; j < p; ++j) header.push_back("psi" + std::to_string(j));
  header.push_back("picard_iters");
  header.push_back("contraction_ratio");
  header.push_back("residual");
  CsvWriter csv(header);
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < chart.samples.size(); ++i) {
    std::vector<double> row;
    for (int j = 0; j < k; ++j) row.push_back(chart.samples[i](j));
    for (int j = 0; j < p; ++j) row.push_back(chart.psi[i](j));
    row.push_back(chart.solutions[i].picard_iters);
    row.push_back(chart.solutions[i].contraction_ratio);
    row.push_back(chart.solutions[i].residual);
    csv.row(row);
    worst_ratio = std::max(worst_ratio, chart.solutions[i].contraction_ratio);
  }
  write_text(ctx.out / "chart.csv", csv.str());

  const ContractionConstants& cc = ws.constants();
  json summary;
  summary["scenario"] = ctx.sc.to_json();
  summary["k"] = cc.stable_count;
  summary["p"] = cc.unstable_count;
  summary["alpha"] = cc.alpha;
  summary["sigma"] = cc.sigma;
  summary["K"] = cc.K;
  summary["epsilon"] = cc.epsilon;
  summary["r"] = cc.radius;
  summary["t0"] = ctx.sc.manifold.t0;
  summary["contraction_bound"] = cc.contraction_bound();
  summary["worst_contraction_ratio"] = worst_ratio;
  summary["forcing_tail_bound"] = ws.offset().tail_bound;
  summary["path_residual_max"] = ws.path().residual_max;
  write_text(ctx.out / "constants.json", summary.dump(2) + "\n");
  return summary;
}

json run_probe(const RunContext& ctx) {
  const Graph g = ctx.sc.build_graph();
  const ObjectiveSet obj = ctx.sc.build_objective();
  const Schedule sched = ctx.sc.build_schedule();
  const int n = g.node_count();
  const int d = obj.dimension();
  const CriticalPointAtlas atlas =
      find_critical_points(obj, 3.0, 200, derive_seed(ctx.seed, 0xA71A5));
  const int saddle_idx = saddle_index_of(atlas);
  const CriticalPoint& saddle = atlas.points[saddle_idx];

  auto lift = [&](const VectorXd& v) -> VectorXd {
    VectorXd out(n * d);
    for (int a = 0; a < n; ++a) out.segment(a * d, d) = v;
    return out / std::sqrt(static_cast<double>(n));
  };

  ProbeSettings ps;
  const VectorXd stable_dir = saddle.classification.eigenvectors.col(d - 1);
  ps.base = lift(saddle.location) * std::sqrt(static_cast<double>(n)) +
            ctx.sc.probe.stable_offset * lift(stable_dir);
  if (ctx.sc.probe.direction == "unstable")
    ps.direction = lift(saddle.classification.eigenvectors.col(0));
  else if (ctx.sc.probe.direction == "stable")
    ps.direction = lift(stable_dir);
  else {
    if (ctx.sc.probe.direction_vec.size() != static_cast<std::size_t>(n * d))
      fail("probe.direction_vec", "explicit direction must have length N*d");
    ps.direction = Eigen::Map<const VectorXd>(ctx.sc.probe.direction_vec.data(), n * d);
    ps.direction.normalize();
  }
  ps.s_min = ctx.sc.probe.s_min;
  ps.s_max = ctx.sc.probe.s_max;
  ps.tol_s = ctx.sc.probe.tol_s;
  ps.horizon = ctx.sc.integrator.horizon;
  ps.delta_saddle = ctx.sc.probe.delta_saddle;
  ps.escape_offset = ctx.sc.probe.escape_offset;

  const ProbeResult res =
      shooting_probe(g, obj, sched, atlas, saddle_idx, ctx.sc.integrator_options(), ps);

  json summary;
  summary["scenario"] = ctx.sc.to_json();
  summary["found_boundary"] = res.found_boundary;
  summary["integrations"] = res.integrations;
  summary["atlas"] = atlas_to_json(atlas);
  auto class_or_null = [](const std::optional<int>& c) {
    return c ? json(*c) : json(nullptr);
  };
  summary["class_lo"] = class_or_null(res.class_lo);
  summary["class_hi"] = class_or_null(res.class_hi);
  if (res.found_boundary) {
    summary["s_star"] = res.s_star;
    summary["bracket_lo"] = res.bracket_lo;
    summary["bracket_hi"] = res.bracket_hi;
    summary["bracket_width"] = res.bracket_hi - res.bracket_lo;
    summary["stay_max_distance"] = res.stay_max_distance;
    summary["within_delta_saddle"] = res.stay_max_distance < ps.delta_saddle;
    summary["escape_class_plus"] = class_or_null(res.escape_class_plus);
    summary["escape_class_minus"] = class_or_null(res.escape_class_minus);
  }
  write_text(ctx.out / "probe.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace

int run_scenario(const Scenario& sc, const RunOptions& ro, std::ostream& log) {
  const auto t_start = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(ro.out_dir);
    RunContext ctx{sc, ro.out_dir, ro.jobs, ro.seed_override.value_or(sc.seed), log};
    json summary;
    if (sc.experiment == "simulate")
      summary = run_simulate(ctx);
    else if (sc.experiment == "consensus")
      summary = run_consensus(ctx);
    else if (sc.experiment == "basins")
      summary = run_basins(ctx);
    else if (sc.experiment == "manifold")
      summary = run_manifold(ctx);
    else if (sc.experiment == "probe")
      summary = run_probe(ctx);
    else
      fail("config.experiment", "unknown experiment");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    json manifest;
    manifest["config"] = sc.to_json();
    manifest["config_hash"] = sc.hash();
    manifest["seed"] = ctx.seed;
    manifest["version"] = kVersion;
    manifest["wall_time_s"] = wall;
    write_text(ctx.out / "manifest.json", manifest.dump(2) + "\n");

    json summary_doc;
    summary_doc["scenario"] = sc.to_json();
    summary_doc["scenario_hash"] = sc.hash();
    summary_doc["summary"] = summary;
    write_text(ctx.out / "summary.json", summary_doc.dump(2) + "\n");

    log << sc.experiment << ": ok (" << format_double(wall) << " s), artifacts in "
        << ro.out_dir << "\n";
    for (auto it = summary.begin(); it != summary.end(); ++it)
      if (!it.value().is_structured()) log << "  " << it.key() << " = " << it.value().dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_sweep(const Scenario& base, const std::string& param,
              const std::vector<double>& values, const RunOptions& ro, std::ostream& log) {
  if (values.empty()) {
    log << "sweep: empty value list, nothing to do\n";
    return 0;
  }
  // Validate every value up front; inadmissible combinations are rejected
  // before any run starts.
  std::string pointer = "/" + param;
  for (auto& c : pointer)
    if (c == '.') c = '/';
  std::vector<Scenario> runs;
  for (double v : values) {
    json j = base.to_json();
    try {
      j.at(nlohmann::json::json_pointer(pointer)) = v;
    } catch (const std::exception&) {
      log << "error: sweep.param: no scalar config entry '" << param << "'\n";
      return 1;
    }
    try {
      runs.push_back(Scenario::from_json(j));
    } catch (const std::exception& e) {
      log << "error: sweep value " << format_double(v) << " rejected: " << e.what()
          << "\n";
      return 1;
    }
  }

  std::vector<json> summaries;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    char short_value[32];
    std::snprintf(short_value, sizeof(short_value), "%.12g", values[i]);
    RunOptions sub = ro;
    sub.out_dir = ro.out_dir + "/" + param + "=" + short_value;
    const int status = run_scenario(runs[i], sub, log);
    if (status != 0) return status;
    std::ifstream is(sub.out_dir + "/summary.json");
    json doc;
    is >> doc;
    summaries.push_back(doc["summary"]);
  }

  // One aggregate table keyed by the swept value; columns are the scalar
  // numeric summary fields shared by all runs.
  std::vector<std::string> columns{"value"};
  for (auto it = summaries.front().begin(); it != summaries.front().end(); ++it)
    if (it.value().is_number()) columns.push_back(it.key());
  CsvWriter agg(columns);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<double> row{values[i]};
    for (std::size_t c = 1; c < columns.size(); ++c)
      row.push_back(summaries[i].value(columns[c], 0.0));
    agg.row(row);
  }
  std::filesystem::create_directories(ro.out_dir);
  write_text(std::filesystem::path(ro.out_dir) / "aggregate.csv", agg.str());
  log << "sweep: " << runs.size() << " runs complete\n";
  return 0;
}

}  // namespace dgdflow
