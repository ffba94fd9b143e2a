#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dgdflow {

/// Undirected simple graph over nodes 1..N (1-based ids at the interface,
/// 0-based storage internally). Immutable after construction.
class Graph {
 public:
  Graph(int node_count, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return node_count_; }
  /// Deduplicated edge set, 0-based, first < second.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// Neighbor set of 0-based node n.
  const std::vector<int>& neighbors(int n) const { return neighbors_.at(n); }
  int degree(int n) const { return static_cast<int>(neighbors_.at(n).size()); }

 private:
  int node_count_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Laplacian L = D - A with its full symmetric eigendecomposition.
struct SpectralData {
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, matching eigenvalue order
  double lambda2 = 0.0;          // algebraic connectivity
};

/// Second-smallest-eigenvalue tolerance used for the connectivity cross-check.
inline constexpr double kSpectralTol = 1e-9;

Graph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges);

/// Named presets: "path", "ring", "complete", "star".
Graph build_preset(const std::string& name, int node_count);

SpectralData laplacian(const Graph& g);

/// BFS connectivity; agrees with lambda2 > kSpectralTol on valid graphs.
bool is_connected(const Graph& g);

/// Kronecker lift L (x) I_d acting on stacked states in R^{Nd}.
Eigen::MatrixXd kron_laplacian(const Graph& g, int d);

}  // namespace dgdflow
