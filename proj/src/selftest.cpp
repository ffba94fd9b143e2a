#include "dgdflow/selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "dgdflow/dynamics.hpp"
#include "dgdflow/graph.hpp"
#include "dgdflow/integrate.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/schedule.hpp"

namespace dgdflow {

Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-28 * scale * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  Eigen::VectorXd ev = a.diagonal();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

double small_determinant(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double det = 0.0;
  double sign = 1.0;
  for (int c = 0; c < n; ++c) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (int i = 1; i < n; ++i) {
      int mc = 0;
      for (int j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, mc++) = a(i, j);
      }
    }
    det += sign * a(0, c) * small_determinant(minor);
    sign = -sign;
  }
  return det;
}

namespace {

VectorXd central_gradient(const std::function<double(const VectorXd&)>& f,
                          const VectorXd& a, double h) {
  VectorXd g(a.size());
  VectorXd p = a;
  for (int j = 0; j < a.size(); ++j) {
    p(j) = a(j) + h;
    const double fp = f(p);
    p(j) = a(j) - h;
    const double fm = f(p);
    p(j) = a(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct Check {
  std::vector<SelftestResult>& out;
  void add(const std::string& name, bool ok, const std::string& detail) {
    out.push_back({name, ok, detail});
  }
};

void check_gradient_oracles(Check& c) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  struct Item {
    const char* label;
    ObjectiveSet obj;
  };
  const std::vector<Item> presets = {
      {"quartic_saddle", make_preset("quartic_saddle", 4, 2)},
      {"quartic_saddle_het", make_preset("quartic_saddle", 4, 2, 7)},
      {"random_quartic", make_preset("random_quartic", 3, 3, 5)},
      {"quadratic_convex", make_preset("quadratic_convex", 4, 2, 3)},
  };
  for (const auto& item : presets) {
    double worst_g = 0.0, worst_h = 0.0, worst_sym = 0.0;
    for (int s = 0; s < 50; ++s) {
      VectorXd a(item.obj.dimension());
      for (int j = 0; j < a.size(); ++j) a(j) = u(rng);
      for (int n = 0; n < item.obj.agent_count(); ++n) {
        const auto& local = item.obj.local(n);
        const VectorXd g = local.gradient(a);
        const VectorXd g_fd = central_gradient(local.value, a, 1e-5);
        worst_g = std::max(worst_g, (g - g_fd).norm() / std::max(1.0, g.norm()));
        const MatrixXd hess = local.hessian(a);
        worst_sym = std::max(worst_sym, (hess - hess.transpose()).cwiseAbs().maxCoeff());
        MatrixXd h_fd(a.size(), a.size());
        for (int j = 0; j < a.size(); ++j) {
          VectorXd p = a;
          p(j) = a(j) + 1e-4;
          const VectorXd gp = local.gradient(p);
          p(j) = a(j) - 1e-4;
          const VectorXd gm = local.gradient(p);
          h_fd.col(j) = (gp - gm) / 2e-4;
        }
        worst_h = std::max(worst_h,
                           (hess - h_fd).norm() / std::max(1.0, hess.norm()));
      }
    }
    std::ostringstream os;
    os << "grad rel " << worst_g << ", hess rel " << worst_h << ", sym " << worst_sym;
    c.add(std::string("objective.oracles.") + item.label,
          worst_g < 1e-5 && worst_h < 1e-3 && worst_sym < 1e-10, os.str());
  }
}

void check_spectral_oracle(Check& c) {
  double worst_gap = 0.0, worst_det = 0.0;
  bool connect_ok = true;
  for (int n = 2; n <= 4; ++n) {
    std::vector<std::pair<int, int>> all_edges;
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b) all_edges.push_back({a, b});
    const int m = static_cast<int>(all_edges.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      std::vector<std::pair<int, int>> edges;
      for (int e = 0; e < m; ++e)
        if (mask & (1 << e)) edges.push_back(all_edges[e]);
      const Graph g = build_graph(n, edges);
      const SpectralData sd = laplacian(g);
      const Eigen::VectorXd ref = jacobi_eigenvalues(sd.laplacian);
      worst_gap = std::max(worst_gap, std::abs(sd.lambda2 - ref(1)));
      const Eigen::MatrixXd shifted =
          sd.laplacian - sd.lambda2 * Eigen::MatrixXd::Identity(n, n);
      worst_det = std::max(worst_det, std::abs(small_determinant(shifted)) /
                                          std::max(1.0, std::pow(2.0 * n, n)));
      if (is_connected(g) != (sd.lambda2 > kSpectralTol)) connect_ok = false;
    }
  }
  std::ostringstream os;
  os << "lambda2 gap " << worst_gap << ", charpoly residual " << worst_det;
  c.add("graph.lambda2_bruteforce", worst_gap < 1e-9 && worst_det < 1e-9 && connect_ok,
        os.str());
}

void check_time_change(Check& c) {
  double worst = 0.0;
  for (const auto& [ta, tb] : std::vector<std::pair<double, double>>{
           {0.8, 0.3}, {1.0, 0.5}, {0.6, 0.0}, {1.0, 0.0}}) {
    const Schedule s(ta, tb);
    for (ClockKind clock : {ClockKind::beta, ClockKind::alpha}) {
      const TimeChange tc = time_change(s, clock);
      for (double tau : {0.0, 1.0, 10.0, 100.0})
        worst = std::max(worst, std::abs(tc.T(tc.S(tau)) - tau));
    }
  }
  std::ostringstream os;
  os << "round-trip error " << worst;
  c.add("dynamics.time_change_round_trip", worst < 1e-8, os.str());
}

void check_integrator_order(Check& c) {
  FlowField decay;
  decay.dim = 1;
  decay.box_halfwidth = 10.0;
  decay.eval = [](double, const VectorXd& x, VectorXd& out) { out = -x; };
  VectorXd x0(1);
  x0 << 1.0;
  const double slope = order_check(
      decay, x0, 0.0, 2.0, [](double t) { return (VectorXd(1) << std::exp(-t)).finished(); });
  std::ostringstream os;
  os << "rk4 slope " << slope;
  c.add("integrator.order", slope > 3.8 && slope < 4.2, os.str());
}

void check_field_forms(Check& c) {
  const Graph g = build_preset("ring", 4);
  const ObjectiveSet obj = make_preset("quartic_saddle", 4, 2, 11);
  const Schedule s(0.8, 0.3);
  const FlowField f = dgd_field(g, obj, s);
  const Eigen::MatrixXd lap_kron = kron_laplacian(g, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> ut(0.0, 50.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd x(8);
    for (int j = 0; j < 8; ++j) x(j) = u(rng);
    const double t = ut(rng);
    const VectorXd per_agent = f(t, x);
    const VectorXd kron_form =
        -s.beta(t) * (lap_kron * x) - s.alpha(t) * obj.stacked_gradient(x);
    worst = std::max(worst, (per_agent - kron_form).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "max abs gap " << worst;
  c.add("dynamics.per_agent_vs_kronecker", worst <= 1e-12, os.str());
}

void check_graph_identities(Check& c) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_row = 0.0, worst_null = 0.0;
  bool connect_ok = true;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 11);
    std::vector<std::pair<int, int>> edges;
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b)
        if (rng() % 3 == 0) edges.push_back({a, b});
    const Graph g = build_graph(n, edges);
    const SpectralData sd = laplacian(g);
    worst_row = std::max(
        worst_row, (sd.laplacian * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff());
    if (is_connected(g) != (sd.lambda2 > kSpectralTol)) connect_ok = false;
    const int d = 1 + static_cast<int>(rng() % 3);
    const Eigen::MatrixXd lk = kron_laplacian(g, d);
    VectorXd a(d);
    for (int j = 0; j < d; ++j) a(j) = u(rng);
    VectorXd cons(n * d);
    for (int i = 0; i < n; ++i) cons.segment(i * d, d) = a;
    worst_null = std::max(worst_null,
                          (lk * cons).norm() / std::max(1e-300, a.norm()));
  }
  std::ostringstream os;
  os << "row-sum " << worst_row << ", consensus annihilation " << worst_null;
  c.add("graph.identities", worst_row <= 1e-12 && worst_null <= 1e-12 && connect_ok,
        os.str());
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  std::vector<SelftestResult> results;
  Check c{results};
  check_gradient_oracles(c);
  check_spectral_oracle(c);
  check_time_change(c);
  check_integrator_order(c);
  check_field_forms(c);
  check_graph_identities(c);
  return results;
}

bool report_selftest(std::ostream& os) {
  bool all = true;
  for (const auto& r : run_selftest()) {
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace dgdflow
