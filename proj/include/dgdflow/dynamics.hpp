#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dgdflow/graph.hpp"
#include "dgdflow/objective.hpp"
#include "dgdflow/schedule.hpp"

namespace dgdflow {

/// Non-autonomous vector field F(t, x) on R^dim with a validity box
/// |x_i| <= box_halfwidth. Values are immutable closures over read-only data
/// and may be evaluated concurrently.
struct FlowField {
  int dim = 0;
  double box_halfwidth = 10.0;
  std::function<void(double, const VectorXd&, VectorXd&)> eval;

  VectorXd operator()(double t, const VectorXd& x) const {
    VectorXd out(dim);
    eval(t, x, out);
    return out;
  }
};

/// Consensus + innovations field: block n is
///   beta(t) * sum_{l in Omega_n} (x_l - x_n) - alpha(t) * grad f_n(x_n).
FlowField dgd_field(const Graph& g, const ObjectiveSet& obj, const Schedule& s,
                    double box_halfwidth = 10.0);

/// Penalized subspace-constrained field -grad h(x) - beta(t) Q x.
FlowField penalized_field(const ObjectiveSet& obj, const Eigen::MatrixXd& Q,
                          const PenaltySchedule& penalty, double box_halfwidth = 10.0);

struct ConsensusSplit {
  VectorXd average;       // block mean in R^d
  VectorXd disagreement;  // x - 1 (x) average, in R^{Nd}
};

/// Splits a stacked state into its consensus average and the orthogonal
/// disagreement part; x = 1 (x) average + disagreement exactly.
ConsensusSplit consensus_projection(const VectorXd& x, int agent_count, int dimension);

}  // namespace dgdflow
