#include "dgdflow/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>

namespace dgdflow {

Graph::Graph(int node_count, const std::vector<std::pair<int, int>>& edges)
    : node_count_(node_count) {
  if (node_count < 1) throw std::invalid_argument("graph: node count must be >= 1");
  std::set<std::pair<int, int>> dedup;
  for (const auto& [a, b] : edges) {
    if (a < 1 || a > node_count || b < 1 || b > node_count)
      throw std::invalid_argument("graph: edge endpoint out of range [1, N]");
    if (a == b) throw std::invalid_argument("graph: self-loops are not allowed");
    dedup.insert({std::min(a, b) - 1, std::max(a, b) - 1});
  }
  edges_.assign(dedup.begin(), dedup.end());
  neighbors_.resize(node_count);
  for (const auto& [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

Graph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges) {
  return Graph(node_count, edges);
}

Graph build_preset(const std::string& name, int node_count) {
  std::vector<std::pair<int, int>> edges;
  if (name == "path") {
    for (int n = 1; n < node_count; ++n) edges.push_back({n, n + 1});
  } else if (name == "ring") {
    for (int n = 1; n < node_count; ++n) edges.push_back({n, n + 1});
    if (node_count > 2) edges.push_back({node_count, 1});
  } else if (name == "complete") {
    for (int a = 1; a <= node_count; ++a)
      for (int b = a + 1; b <= node_count; ++b) edges.push_back({a, b});
  } else if (name == "star") {
    for (int n = 2; n <= node_count; ++n) edges.push_back({1, n});
  } else {
    throw std::invalid_argument("graph: unknown preset '" + name + "'");
  }
  return Graph(node_count, edges);
}

SpectralData laplacian(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : g.edges()) {
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("graph: Laplacian eigendecomposition failed");
  SpectralData sd;
  sd.laplacian = std::move(lap);
  sd.eigenvalues = es.eigenvalues();
  sd.eigenvectors = es.eigenvectors();
  sd.lambda2 = n > 1 ? sd.eigenvalues(1) : 0.0;
  return sd;
}

bool is_connected(const Graph& g) {
  const int n = g.node_count();
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int w : g.neighbors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == n;
}

Eigen::MatrixXd kron_laplacian(const Graph& g, int d) {
  if (d < 1) throw std::invalid_argument("graph: Kronecker factor dimension must be >= 1");
  const Eigen::MatrixXd lap = laplacian(g).laplacian;
  const int n = g.node_count();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * d, n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (lap(i, j) != 0.0)
        out.block(i * d, j * d, d, d) = lap(i, j) * Eigen::MatrixXd::Identity(d, d);
  return out;
}

}  // namespace dgdflow
