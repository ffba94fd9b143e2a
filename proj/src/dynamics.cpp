#include "dgdflow/dynamics.hpp"

#include <stdexcept>

namespace dgdflow {

FlowField dgd_field(const Graph& g, const ObjectiveSet& obj, const Schedule& s,
                    double box_halfwidth) {
  if (g.node_count() != obj.agent_count())
    throw std::invalid_argument("dynamics: graph and objective agent counts differ");
  const int n = g.node_count();
  const int d = obj.dimension();
  FlowField f;
  f.dim = n * d;
  f.box_halfwidth = box_halfwidth;
  f.eval = [&g, &obj, s, n, d](double t, const VectorXd& x, VectorXd& out) {
    const double at = s.alpha(t);
    const double bt = s.beta(t);
    for (int i = 0; i < n; ++i) {
      auto xi = x.segment(i * d, d);
      VectorXd block = -at * obj.local(i).gradient(xi);
      for (int l : g.neighbors(i)) block += bt * (x.segment(l * d, d) - xi);
      out.segment(i * d, d) = block;
    }
  };
  return f;
}

FlowField penalized_field(const ObjectiveSet& obj, const Eigen::MatrixXd& Q,
                          const PenaltySchedule& penalty, double box_halfwidth) {
  const int m = obj.stacked_dimension();
  if (Q.rows() != m || Q.cols() != m)
    throw std::invalid_argument("dynamics: penalty matrix does not match stacked dimension");
  FlowField f;
  f.dim = m;
  f.box_halfwidth = box_halfwidth;
  f.eval = [&obj, Q, penalty](double t, const VectorXd& x, VectorXd& out) {
    out = -obj.stacked_gradient(x) - penalty.beta(t) * (Q * x);
  };
  return f;
}

ConsensusSplit consensus_projection(const VectorXd& x, int agent_count, int dimension) {
  if (x.size() != static_cast<Eigen::Index>(agent_count) * dimension)
    throw std::invalid_argument("dynamics: state length is not N*d");
  ConsensusSplit split;
  split.average = VectorXd::Zero(dimension);
  for (int n = 0; n < agent_count; ++n)
    split.average += x.segment(n * dimension, dimension);
  split.average /= agent_count;
  split.disagreement = x;
  for (int n = 0; n < agent_count; ++n)
    split.disagreement.segment(n * dimension, dimension) -= split.average;
  return split;
}

}  // namespace dgdflow
