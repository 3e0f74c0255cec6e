#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <lowdim/density.hpp>

namespace lowdim {

/// Undirected graph on vertices 1..n, used as an I-map of a target measure.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int n) : n_(n) { check_n(); }
  UndirectedGraph(int n, const std::vector<std::pair<int, int>>& edges);

  int n_vertices() const { return n_; }
  const std::set<std::pair<int, int>>& edges() const { return edges_; }

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  std::vector<int> neighbors(int v) const;
  int degree(int v) const;
  bool is_clique(const std::vector<int>& vs) const;

  /// Vertex-induced subgraph keeping labels 1..k (drops all others).
  UndirectedGraph induced_prefix(int k) const;

  bool operator==(const UndirectedGraph& o) const {
    return n_ == o.n_ && edges_ == o.edges_;
  }

 private:
  void check_n() const;
  void check_vertex(int v) const;
  int n_ = 0;
  std::set<std::pair<int, int>> edges_;
};

/// Pairs (j,k), j<k, meaning component k is independent of input j.
struct SparsityPattern {
  std::set<std::pair<int, int>> pairs;
  bool contains(int j, int k) const { return pairs.count({j, k}) > 0; }
};

/// Permutation sigma of {1..n}; perm[k-1] = sigma(k).
struct Ordering {
  std::vector<int> perm;
  static Ordering identity(int n);
  bool valid() const;
};

struct GraphDecomposition {
  std::set<int> A, S, B;
};

struct ScheduleStep {
  GraphDecomposition decomp;
  std::vector<int> sigma;  // ordering of S used for the clique augmentation
  int effective_dim = 0;   // |(A_i \ A_{i-1}) ∪ S_i|
  UndirectedGraph graph_after;
};

struct DecompositionSchedule {
  std::vector<ScheduleStep> steps;
  int final_R_dim = 0;
};

/// Marginal graphs of the elimination ordering (n, n-1, ..., 1).
/// Returned vector g has g[k-1] = G^k on vertices 1..k; g[n-1] = input.
std::vector<UndirectedGraph> marginal_graphs(const UndirectedGraph& g);

/// Predicted sparsity of the inverse (lower-triangular) transport.
SparsityPattern inverse_sparsity(const UndirectedGraph& g);

/// Predicted sparsity of the direct transport (recursive closure);
/// always a subset of inverse_sparsity(g).
SparsityPattern direct_sparsity(const UndirectedGraph& g);

/// Relabeled graph: edge (i,j) iff (sigma(i), sigma(j)) is an edge of g.
UndirectedGraph relabel(const UndirectedGraph& g, const Ordering& o);

/// Edges added across the marginal-graph construction on the relabeled graph.
std::set<std::pair<int, int>> fill_in(const UndirectedGraph& g, const Ordering& o);

/// Greedy min-fill elimination ordering; ties broken by lowest vertex label.
Ordering min_fill_ordering(const UndirectedGraph& g);

/// One proper decomposition (A,S,B) if any exists: smallest |S|, then smallest
/// |A| (a single connected component of G\S), ties lexicographic.  S may need
/// clique augmentation downstream.  Returns nullopt iff the graph is complete
/// or n < 2.
std::optional<GraphDecomposition> decompose(const UndirectedGraph& g);

/// Recursive decomposition schedule (nested A_i) ending when the remainder
/// S ∪ B is a clique in the updated graph.
DecompositionSchedule schedule_decomposition(const UndirectedGraph& g);

/// All maximal cliques of the subgraph induced on `subset` (Bron-Kerbosch).
std::vector<std::vector<int>> maximal_cliques(const UndirectedGraph& g,
                                              const std::vector<int>& subset);

struct PairwiseImapOptions {
  int probes = 64;
  std::uint64_t seed = 20260823ULL;
  double rel_tol = 1e-6;
  double fd_step = 1e-3;
};

/// Conservative minimal-I-map estimate from numerical cross second derivatives
/// of logpi at standard-normal probe points.  Throws on non-finite density.
UndirectedGraph pairwise_imap(const LogDensity& logpi,
                              const PairwiseImapOptions& opts = {});

/// Plain-text graph file: first line n, then lines "i j" with 1 <= i < j <= n.
UndirectedGraph read_graph_file(const std::string& path);
void write_graph_file(const UndirectedGraph& g, const std::string& path);

}  // namespace lowdim
