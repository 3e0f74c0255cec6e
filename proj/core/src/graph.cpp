#include <lowdim/graph.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <lowdim/quadrature.hpp>

namespace lowdim {

void UndirectedGraph::check_n() const {
  if (n_ < 0) throw std::invalid_argument("UndirectedGraph: negative size");
}

void UndirectedGraph::check_vertex(int v) const {
  if (v < 1 || v > n_)
    throw std::invalid_argument("UndirectedGraph: vertex out of range");
}

UndirectedGraph::UndirectedGraph(int n, const std::vector<std::pair<int, int>>& edges)
    : n_(n) {
  check_n();
  for (auto [i, j] : edges) add_edge(i, j);
}

void UndirectedGraph::add_edge(int i, int j) {
  check_vertex(i);
  check_vertex(j);
  if (i == j) throw std::invalid_argument("UndirectedGraph: self-loop");
  if (i > j) std::swap(i, j);
  edges_.insert({i, j});
}

bool UndirectedGraph::has_edge(int i, int j) const {
  if (i == j) return false;
  if (i > j) std::swap(i, j);
  return edges_.count({i, j}) > 0;
}

std::vector<int> UndirectedGraph::neighbors(int v) const {
  check_vertex(v);
  std::vector<int> nb;
  for (int u = 1; u <= n_; ++u)
    if (u != v && has_edge(u, v)) nb.push_back(u);
  return nb;
}

int UndirectedGraph::degree(int v) const {
  return static_cast<int>(neighbors(v).size());
}

bool UndirectedGraph::is_clique(const std::vector<int>& vs) const {
  for (size_t a = 0; a < vs.size(); ++a)
    for (size_t b = a + 1; b < vs.size(); ++b)
      if (!has_edge(vs[a], vs[b])) return false;
  return true;
}

UndirectedGraph UndirectedGraph::induced_prefix(int k) const {
  UndirectedGraph out(k);
  for (auto [i, j] : edges_)
    if (i <= k && j <= k) out.add_edge(i, j);
  return out;
}

Ordering Ordering::identity(int n) {
  Ordering o;
  o.perm.resize(n);
  for (int i = 0; i < n; ++i) o.perm[i] = i + 1;
  return o;
}

bool Ordering::valid() const {
  const int n = static_cast<int>(perm.size());
  std::vector<bool> seen(n + 1, false);
  for (int v : perm) {
    if (v < 1 || v > n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::vector<UndirectedGraph> marginal_graphs(const UndirectedGraph& g) {
  const int n = g.n_vertices();
  std::vector<UndirectedGraph> out(n > 0 ? n : 0);
  if (n == 0) return out;
  out[n - 1] = g;
  for (int k = n; k >= 2; --k) {
    const UndirectedGraph& gk = out[k - 1];
    UndirectedGraph prev(k - 1);
    for (auto [i, j] : gk.edges())
      if (j < k) prev.add_edge(i, j);
    const std::vector<int> nb = gk.neighbors(k);
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) prev.add_edge(nb[a], nb[b]);
    out[k - 2] = std::move(prev);
  }
  return out;
}

SparsityPattern inverse_sparsity(const UndirectedGraph& g) {
  SparsityPattern p;
  const auto gs = marginal_graphs(g);
  for (int k = 2; k <= g.n_vertices(); ++k) {
    const UndirectedGraph& gk = gs[k - 1];
    for (int j = 1; j < k; ++j)
      if (!gk.has_edge(j, k)) p.pairs.insert({j, k});
  }
  return p;
}

SparsityPattern direct_sparsity(const UndirectedGraph& g) {
  SparsityPattern p;
  const auto gs = marginal_graphs(g);
  // vacuous truth for j > i (component i never reads input j); false for j == i
  auto holds = [&p](int j, int i) {
    if (j > i) return true;
    if (j == i) return false;
    return p.contains(j, i);
  };
  for (int k = 2; k <= g.n_vertices(); ++k) {
    const std::vector<int> nb = gs[k - 1].neighbors(k);
    for (int j = 1; j < k; ++j) {
      bool all = true;
      for (int i : nb)
        if (!holds(j, i)) {
          all = false;
          break;
        }
      if (all) p.pairs.insert({j, k});
    }
  }
  return p;
}

UndirectedGraph relabel(const UndirectedGraph& g, const Ordering& o) {
  const int n = g.n_vertices();
  if (static_cast<int>(o.perm.size()) != n || !o.valid())
    throw std::invalid_argument("relabel: invalid ordering");
  UndirectedGraph out(n);
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      if (g.has_edge(o.perm[a - 1], o.perm[b - 1])) out.add_edge(a, b);
  return out;
}

std::set<std::pair<int, int>> fill_in(const UndirectedGraph& g, const Ordering& o) {
  UndirectedGraph h = relabel(g, o);
  std::set<std::pair<int, int>> added;
  for (int k = h.n_vertices(); k >= 2; --k) {
    std::vector<int> nb;
    for (int u = 1; u < k; ++u)
      if (h.has_edge(u, k)) nb.push_back(u);
    UndirectedGraph prev(k - 1);
    for (auto [i, j] : h.edges())
      if (j < k) prev.add_edge(i, j);
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        if (!prev.has_edge(nb[a], nb[b])) added.insert({nb[a], nb[b]});
        prev.add_edge(nb[a], nb[b]);
      }
    h = std::move(prev);
  }
  return added;
}

Ordering min_fill_ordering(const UndirectedGraph& g) {
  const int n = g.n_vertices();
  UndirectedGraph w = g;
  std::vector<bool> alive(n + 1, true);
  Ordering o;
  o.perm.assign(n, 0);
  for (int pos = n; pos >= 1; --pos) {
    int best = -1;
    long best_fill = -1;
    for (int v = 1; v <= n; ++v) {
      if (!alive[v]) continue;
      std::vector<int> nb;
      for (int u = 1; u <= n; ++u)
        if (alive[u] && u != v && w.has_edge(u, v)) nb.push_back(u);
      long fill = 0;
      for (size_t a = 0; a < nb.size(); ++a)
        for (size_t b = a + 1; b < nb.size(); ++b)
          if (!w.has_edge(nb[a], nb[b])) ++fill;
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    o.perm[pos - 1] = best;
    std::vector<int> nb;
    for (int u = 1; u <= n; ++u)
      if (alive[u] && u != best && w.has_edge(u, best)) nb.push_back(u);
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) w.add_edge(nb[a], nb[b]);
    alive[best] = false;
  }
  return o;
}

namespace {

std::vector<std::vector<int>> components_without(const UndirectedGraph& g,
                                                 const std::set<int>& removed) {
  const int n = g.n_vertices();
  std::vector<int> comp(n + 1, -1);
  std::vector<std::vector<int>> out;
  for (int s = 1; s <= n; ++s) {
    if (removed.count(s) || comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::queue<int> q;
    q.push(s);
    comp[s] = id;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      out[id].push_back(v);
      for (int u = 1; u <= n; ++u) {
        if (u == v || removed.count(u) || comp[u] >= 0) continue;
        if (g.has_edge(u, v)) {
          comp[u] = id;
          q.push(u);
        }
      }
    }
    std::sort(out[id].begin(), out[id].end());
  }
  return out;
}

bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < n - (k - 1 - i)) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<GraphDecomposition> decompose(const UndirectedGraph& g) {
  const int n = g.n_vertices();
  if (n < 2) return std::nullopt;
  bool complete = true;
  std::pair<int, int> gap{0, 0};
  for (int i = 1; i <= n && complete; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (!g.has_edge(i, j)) {
        complete = false;
        gap = {i, j};
        break;
      }
  if (complete) return std::nullopt;

  long budget = 2000000;
  for (int s = 0; s <= n - 2; ++s) {
    std::optional<GraphDecomposition> best;
    std::vector<int> c(s);
    for (int i = 0; i < s; ++i) c[i] = i + 1;
    bool more = (s <= n);
    while (more) {
      if (--budget < 0) {
        // generic fallback: separate the first non-adjacent pair
        GraphDecomposition d;
        d.A = {gap.first};
        d.B = {gap.second};
        for (int v = 1; v <= n; ++v)
          if (v != gap.first && v != gap.second) d.S.insert(v);
        return d;
      }
      std::set<int> S(c.begin(), c.end());
      auto comps = components_without(g, S);
      if (comps.size() >= 2) {
        size_t ai = 0;
        for (size_t i = 1; i < comps.size(); ++i)
          if (comps[i].size() < comps[ai].size()) ai = i;
        GraphDecomposition d;
        d.S = S;
        d.A.insert(comps[ai].begin(), comps[ai].end());
        for (size_t i = 0; i < comps.size(); ++i)
          if (i != ai) d.B.insert(comps[i].begin(), comps[i].end());
        if (!best || d.A.size() < best->A.size()) best = d;
      }
      more = s > 0 && next_combination(c, n);
      if (s == 0) more = false;
    }
    if (best) return best;
  }
  return std::nullopt;
}

std::vector<std::vector<int>> maximal_cliques(const UndirectedGraph& g,
                                              const std::vector<int>& subset) {
  std::vector<std::vector<int>> out;
  std::vector<int> R, P(subset), X;
  std::sort(P.begin(), P.end());
  // Bron-Kerbosch without pivoting (test-scale graphs)
  std::function<void(std::vector<int>&, std::vector<int>, std::vector<int>)> bk =
      [&](std::vector<int>& r, std::vector<int> p, std::vector<int> x) {
        if (p.empty() && x.empty()) {
          out.push_back(r);
          return;
        }
        while (!p.empty()) {
          const int v = p.front();
          r.push_back(v);
          std::vector<int> p2, x2;
          for (int u : p)
            if (g.has_edge(u, v)) p2.push_back(u);
          for (int u : x)
            if (g.has_edge(u, v)) x2.push_back(u);
          bk(r, p2, x2);
          r.pop_back();
          p.erase(p.begin());
          x.insert(std::lower_bound(x.begin(), x.end(), v), v);
        }
      };
  bk(R, P, X);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::set<int> boundary(const UndirectedGraph& g, const std::set<int>& A) {
  std::set<int> out;
  for (int v : A)
    for (int u : g.neighbors(v))
      if (!A.count(u)) out.insert(u);
  return out;
}

UndirectedGraph with_clique(const UndirectedGraph& g, const std::set<int>& vs) {
  UndirectedGraph out = g;
  for (auto a = vs.begin(); a != vs.end(); ++a)
    for (auto b = std::next(a); b != vs.end(); ++b) out.add_edge(*a, *b);
  return out;
}

/// Edges the Part-2d clique augmentation adds under ordering sigma of S.
std::set<std::pair<int, int>> augmentation_edges(
    const UndirectedGraph& g, const std::vector<int>& sigma,
    const std::vector<std::vector<int>>& cliques, const std::set<int>& S) {
  std::set<std::pair<int, int>> added;
  for (const auto& C : cliques) {
    int jC = 0;
    for (int j = 0; j < static_cast<int>(sigma.size()); ++j)
      if (std::find(C.begin(), C.end(), sigma[j]) != C.end() && S.count(sigma[j]))
        jC = j + 1;
    if (jC == 0) continue;
    std::set<int> clique(C.begin(), C.end());
    for (int j = 0; j < jC; ++j) clique.insert(sigma[j]);
    for (auto a = clique.begin(); a != clique.end(); ++a)
      for (auto b = std::next(a); b != clique.end(); ++b) {
        int i = std::min(*a, *b), k = std::max(*a, *b);
        if (!g.has_edge(i, k)) added.insert({i, k});
      }
  }
  return added;
}

/// Greedy schedule growing A_i from a fixed initial decomposition: absorb the
/// previous separator when that leaves B nonempty, otherwise grow by the
/// single vertex minimizing the effective dimension.
DecompositionSchedule greedy_schedule(const UndirectedGraph& g,
                                      const GraphDecomposition& d0) {
  const int n = g.n_vertices();
  DecompositionSchedule sched;
  UndirectedGraph G = g;
  std::set<int> Aprev, Sprev;
  for (int iter = 0; iter < n; ++iter) {
    GraphDecomposition d;
    if (iter == 0) {
      d = d0;
    } else {
      // absorb the previous separator; fall back to min-effective-dim
      // single-vertex growth when that is infeasible
      bool ok = false;
      if (!Sprev.empty()) {
        std::set<int> A = Aprev;
        A.insert(Sprev.begin(), Sprev.end());
        std::set<int> S = boundary(G, A);
        std::set<int> B;
        for (int v = 1; v <= n; ++v)
          if (!A.count(v) && !S.count(v)) B.insert(v);
        if (!B.empty() && A.size() > Aprev.size()) {
          d.A = A;
          d.S = S;
          d.B = B;
          ok = true;
        }
      }
      if (!ok) {
        int best_v = -1;
        size_t best_eff = 0;
        GraphDecomposition best;
        for (int v = 1; v <= n; ++v) {
          if (Aprev.count(v)) continue;
          std::set<int> A = Aprev;
          A.insert(v);
          std::set<int> S = boundary(G, A);
          std::set<int> B;
          for (int u = 1; u <= n; ++u)
            if (!A.count(u) && !S.count(u)) B.insert(u);
          if (B.empty()) continue;
          const size_t eff = 1 + S.size();
          if (best_v < 0 || eff < best_eff) {
            best_v = v;
            best_eff = eff;
            best = {A, S, B};
          }
        }
        if (best_v < 0) break;
        d = best;
      }
    }

    UndirectedGraph g_aug = with_clique(G, d.S);
    std::vector<int> sb(d.S.begin(), d.S.end());
    sb.insert(sb.end(), d.B.begin(), d.B.end());
    std::sort(sb.begin(), sb.end());
    const auto cliques = maximal_cliques(g_aug, sb);

    std::vector<int> sigma(d.S.begin(), d.S.end());
    std::set<std::pair<int, int>> best_added =
        augmentation_edges(g_aug, sigma, cliques, d.S);
    if (d.S.size() >= 2 && d.S.size() <= 8) {
      std::vector<int> cand(d.S.begin(), d.S.end());
      while (std::next_permutation(cand.begin(), cand.end())) {
        auto added = augmentation_edges(g_aug, cand, cliques, d.S);
        if (added.size() < best_added.size()) {
          sigma = cand;
          best_added = added;
        }
      }
    }

    UndirectedGraph g_next(n);
    for (auto [i, j] : g_aug.edges())
      if (!d.A.count(i) && !d.A.count(j)) g_next.add_edge(i, j);
    for (auto [i, j] : best_added) g_next.add_edge(i, j);

    ScheduleStep step;
    step.decomp = d;
    step.sigma = sigma;
    int grown = 0;
    for (int v : d.A)
      if (!Aprev.count(v)) ++grown;
    step.effective_dim = grown + static_cast<int>(d.S.size());
    step.graph_after = g_next;
    sched.steps.push_back(std::move(step));

    Aprev = d.A;
    Sprev = d.S;
    G = g_next;

    std::vector<int> rest;
    for (int v = 1; v <= n; ++v)
      if (!Aprev.count(v)) rest.push_back(v);
    if (G.is_clique(rest)) {
      sched.final_R_dim = static_cast<int>(rest.size());
      return sched;
    }
  }
  int rest = 0;
  for (int v = 1; v <= n; ++v)
    if (!Aprev.count(v)) ++rest;
  sched.final_R_dim = rest;
  return sched;
}

/// All proper decompositions tied with d0 on (|S|, |A|), in lexicographic
/// order of (A, S).  Falls back to {d0} when enumeration would be too large.
std::vector<GraphDecomposition> initial_candidates(const UndirectedGraph& g,
                                                   const GraphDecomposition& d0) {
  const int n = g.n_vertices();
  const int s = static_cast<int>(d0.S.size());
  double count = 1.0;
  for (int i = 0; i < s; ++i) count *= static_cast<double>(n - i) / (i + 1);
  if (count > 100000.0) return {d0};
  std::vector<GraphDecomposition> out;
  std::vector<int> c(s);
  for (int i = 0; i < s; ++i) c[i] = i + 1;
  bool more = s > 0 && s <= n;
  while (more) {
    std::set<int> S(c.begin(), c.end());
    const auto comps = components_without(g, S);
    if (comps.size() >= 2) {
      for (size_t i = 0; i < comps.size(); ++i) {
        if (comps[i].size() != d0.A.size()) continue;
        GraphDecomposition d;
        d.S = S;
        d.A.insert(comps[i].begin(), comps[i].end());
        for (size_t j = 0; j < comps.size(); ++j)
          if (j != i) d.B.insert(comps[j].begin(), comps[j].end());
        out.push_back(std::move(d));
      }
    }
    more = next_combination(c, n);
  }
  if (out.empty()) out.push_back(d0);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.A != y.A) return x.A < y.A;
    return x.S < y.S;
  });
  return out;
}

}  // namespace

DecompositionSchedule schedule_decomposition(const UndirectedGraph& g) {
  const int n = g.n_vertices();
  auto d0 = decompose(g);
  if (!d0) {
    DecompositionSchedule sched;
    sched.final_R_dim = n;
    return sched;
  }
  // the greedy growth outcome depends on which tied initial decomposition is
  // chosen; prefer the candidate yielding the fewest maps
  std::optional<DecompositionSchedule> best;
  for (const auto& cand : initial_candidates(g, *d0)) {
    DecompositionSchedule s = greedy_schedule(g, cand);
    if (!best || s.steps.size() < best->steps.size()) best = std::move(s);
  }
  return *best;
}

UndirectedGraph pairwise_imap(const LogDensity& logpi,
                              const PairwiseImapOptions& opts) {
  const int n = logpi.dim;
  NormalSampler rng(opts.seed);
  const double h = opts.fd_step;
  std::vector<Eigen::MatrixXd> hessians;
  hessians.reserve(opts.probes);
  auto safe_eval = [&](const Eigen::VectorXd& x) {
    const double v = logpi.eval(x);
    if (!std::isfinite(v))
      throw std::domain_error("pairwise_imap: non-finite density at probe");
    return v;
  };
  for (int p = 0; p < opts.probes; ++p) {
    Eigen::VectorXd x = rng.vector(n);
    Eigen::MatrixXd H(n, n);
    const double f0 = safe_eval(x);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      H(i, i) = (safe_eval(xp) - 2.0 * f0 + safe_eval(xm)) / (h * h);
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd a = x, b = x, c = x, d = x;
        a[i] += h; a[j] += h;
        b[i] += h; b[j] -= h;
        c[i] -= h; c[j] += h;
        d[i] -= h; d[j] -= h;
        const double v =
            (safe_eval(a) - safe_eval(b) - safe_eval(c) + safe_eval(d)) /
            (4.0 * h * h);
        H(i, j) = v;
        H(j, i) = v;
      }
    }
    hessians.push_back(std::move(H));
  }
  double maxabs = 0.0;
  for (const auto& H : hessians) maxabs = std::max(maxabs, H.cwiseAbs().maxCoeff());
  const double tol = opts.rel_tol * maxabs;
  UndirectedGraph g(n);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      for (const auto& H : hessians)
        if (std::abs(H(i - 1, j - 1)) > tol) {
          g.add_edge(i, j);
          break;
        }
  return g;
}

UndirectedGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  std::string line;
  int lineno = 0, n = -1;
  UndirectedGraph g;
  while (std::getline(in, line)) {
    ++lineno;
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    if (n < 0) {
      if (!(ls >> n) || n < 0)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected vertex count");
      g = UndirectedGraph(n);
      continue;
    }
    int i, j;
    if (!(ls >> i)) continue;  // blank line
    if (!(ls >> j))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected edge 'i j'");
    try {
      g.add_edge(i, j);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  if (n < 0) throw std::runtime_error(path + ": empty graph file");
  return g;
}

void write_graph_file(const UndirectedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << g.n_vertices() << "\n";
  for (auto [i, j] : g.edges()) out << i << " " << j << "\n";
}

}  // namespace lowdim
