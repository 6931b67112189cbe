#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftopt/errors.hpp"

namespace ftopt {

// Vertices are 0-based in memory; every text format uses 1-based labels.
using Vertex = std::size_t;
// Sorted ascending, no duplicates.
using VertexSet = std::vector<Vertex>;
using Edge = std::pair<Vertex, Vertex>;

inline bool contains(const VertexSet& s, Vertex v) { return std::binary_search(s.begin(), s.end(), v); }

inline VertexSet set_difference(const VertexSet& a, const VertexSet& b) {
  VertexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline VertexSet set_intersection(const VertexSet& a, const VertexSet& b) {
  VertexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline VertexSet all_vertices(std::size_t n) {
  VertexSet v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

inline VertexSet normalized(VertexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

class Digraph {
 public:
  Digraph() = default;
  explicit Digraph(std::size_t n) : n_(n), in_(n), out_(n) {}

  std::size_t size() const { return n_; }

  void add_edge(Vertex from, Vertex to) {
    check_vertex(from);
    check_vertex(to);
    if (from == to) throw std::invalid_argument("self-loops are not allowed");
    insert_sorted(out_[from], to);
    insert_sorted(in_[to], from);
  }

  void remove_edge(Vertex from, Vertex to) {
    check_vertex(from);
    check_vertex(to);
    erase_sorted(out_[from], to);
    erase_sorted(in_[to], from);
  }

  bool has_edge(Vertex from, Vertex to) const {
    return from < n_ && to < n_ && contains(out_[from], to);
  }

  const VertexSet& in_neighbors(Vertex v) const { return in_.at(v); }
  const VertexSet& out_neighbors(Vertex v) const { return out_.at(v); }
  std::size_t in_degree(Vertex v) const { return in_.at(v).size(); }
  std::size_t out_degree(Vertex v) const { return out_.at(v).size(); }

  // d_max: the largest in-degree.
  std::size_t max_in_degree() const {
    std::size_t d = 0;
    for (const auto& s : in_) d = std::max(d, s.size());
    return d;
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& s : out_) m += s.size();
    return m;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> e;
    for (Vertex i = 0; i < n_; ++i)
      for (Vertex j : out_[i]) e.emplace_back(i, j);
    return e;
  }

  bool is_symmetric() const {
    for (Vertex i = 0; i < n_; ++i)
      for (Vertex j : out_[i])
        if (!has_edge(j, i)) return false;
    return true;
  }

  // Drops every edge with an endpoint in `s`; the vertex set is unchanged.
  Digraph without_edges_touching(const VertexSet& s) const {
    Digraph h(n_);
    for (auto [i, j] : edges())
      if (!contains(s, i) && !contains(s, j)) h.add_edge(i, j);
    return h;
  }

  friend bool operator==(const Digraph& a, const Digraph& b) { return a.n_ == b.n_ && a.out_ == b.out_; }

 private:
  void check_vertex(Vertex v) const {
    if (v >= n_) throw std::out_of_range("vertex " + std::to_string(v + 1) + " out of range");
  }
  static void insert_sorted(VertexSet& s, Vertex v) {
    auto it = std::lower_bound(s.begin(), s.end(), v);
    if (it == s.end() || *it != v) s.insert(it, v);
  }
  static void erase_sorted(VertexSet& s, Vertex v) {
    auto it = std::lower_bound(s.begin(), s.end(), v);
    if (it != s.end() && *it == v) s.erase(it);
  }

  std::size_t n_ = 0;
  std::vector<VertexSet> in_;
  std::vector<VertexSet> out_;
};

inline Digraph complete_graph(std::size_t n) {
  Digraph g(n);
  for (Vertex i = 0; i < n; ++i)
    for (Vertex j = 0; j < n; ++j)
      if (i != j) g.add_edge(i, j);
  return g;
}

// ---- edge-list text format ------------------------------------------------

inline Digraph parse_edge_list(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  std::optional<Digraph> g;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (!g) {
      long long n = -1;
      if (first != "n" || !(ls >> n) || n < 0) throw ParseError("expected header 'n <count>'", line_no);
      std::string extra;
      if (ls >> extra) throw ParseError("trailing tokens after header", line_no);
      g.emplace(static_cast<std::size_t>(n));
      continue;
    }
    long long i = 0, j = 0;
    std::istringstream es(line);
    std::string extra;
    if (!(es >> i >> j) || (es >> extra)) throw ParseError("expected edge 'i j'", line_no);
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > g->size() || static_cast<std::size_t>(j) > g->size())
      throw ParseError("edge endpoint out of range", line_no);
    if (i == j) throw ParseError("self-loop", line_no);
    if (g->has_edge(static_cast<Vertex>(i - 1), static_cast<Vertex>(j - 1)))
      throw ParseError("duplicate edge", line_no);
    g->add_edge(static_cast<Vertex>(i - 1), static_cast<Vertex>(j - 1));
  }
  if (!g) throw ParseError("missing header 'n <count>'", line_no);
  return *g;
}

inline Digraph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  return parse_edge_list(in);
}

inline std::string to_edge_list(const Digraph& g) {
  std::ostringstream out;
  out << "n " << g.size() << '\n';
  for (auto [i, j] : g.edges()) out << i + 1 << ' ' << j + 1 << '\n';
  return out.str();
}

// ---- source component ------------------------------------------------------

namespace detail {

inline std::vector<char> membership_mask(std::size_t n, const VertexSet& vertices) {
  std::vector<char> mask(n, 0);
  for (Vertex v : vertices) mask.at(v) = 1;
  return mask;
}

// Iterative DFS over the subgraph induced by `mask`; `forward` selects edge direction.
inline std::vector<char> reach(const Digraph& g, const std::vector<char>& mask, Vertex start, bool forward) {
  std::vector<char> seen(g.size(), 0);
  std::vector<Vertex> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    Vertex u = stack.back();
    stack.pop_back();
    for (Vertex w : forward ? g.out_neighbors(u) : g.in_neighbors(u))
      if (mask[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return seen;
}

}  // namespace detail

// Vertices of the induced subgraph on `vertices` that reach every other vertex of it.
inline VertexSet source_component(const Digraph& g, const VertexSet& vertices) {
  if (vertices.empty()) return {};
  const auto mask = detail::membership_mask(g.size(), vertices);

  // Mother-vertex candidate: the root of the last DFS tree started in order.
  std::vector<char> seen(g.size(), 0);
  Vertex candidate = vertices.front();
  for (Vertex v : vertices) {
    if (seen[v]) continue;
    candidate = v;
    std::vector<Vertex> stack{v};
    seen[v] = 1;
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      for (Vertex w : g.out_neighbors(u))
        if (mask[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
  }

  const auto fwd = detail::reach(g, mask, candidate, true);
  for (Vertex v : vertices)
    if (!fwd[v]) return {};
  const auto bwd = detail::reach(g, mask, candidate, false);
  VertexSet s;
  for (Vertex v : vertices)
    if (bwd[v]) s.push_back(v);
  return s;
}

inline VertexSet source_component(const Digraph& g) { return source_component(g, all_vertices(g.size())); }

// Weakly connected components of the induced subgraph, each sorted, ordered by smallest member.
inline std::vector<VertexSet> weak_components(const Digraph& g, const VertexSet& vertices) {
  const auto mask = detail::membership_mask(g.size(), vertices);
  std::vector<char> seen(g.size(), 0);
  std::vector<VertexSet> comps;
  for (Vertex v : vertices) {
    if (seen[v]) continue;
    VertexSet comp;
    std::vector<Vertex> stack{v};
    seen[v] = 1;
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (const VertexSet* nb : {&g.out_neighbors(u), &g.in_neighbors(u)})
        for (Vertex w : *nb)
          if (mask[w] && !seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

// ---- fault sets -------------------------------------------------------------

struct FaultSet {
  std::size_t budget = 0;  // f
  VertexSet faulty;        // F

  FaultSet() = default;
  FaultSet(std::size_t f, VertexSet F) : budget(f), faulty(normalized(std::move(F))) {
    if (faulty.size() > budget) throw PreconditionError("|F| exceeds the fault budget");
  }

  std::size_t phi() const { return faulty.size(); }
  VertexSet non_faulty(std::size_t n) const { return set_difference(all_vertices(n), faulty); }
  // φ_i
  std::size_t faulty_in_neighbors(const Digraph& g, Vertex i) const {
    return set_intersection(g.in_neighbors(i), faulty).size();
  }
};

// ---- reduced graphs -----------------------------------------------------------

enum class FaultModel { byzantine, crash };

inline const char* to_string(FaultModel m) { return m == FaultModel::byzantine ? "byzantine" : "crash"; }

inline FaultModel parse_fault_model(const std::string& s) {
  if (s == "byzantine") return FaultModel::byzantine;
  if (s == "crash") return FaultModel::crash;
  throw std::invalid_argument("unknown fault model '" + s + "'");
}

struct ReducedGraph {
  VertexSet removed;                // F (Byzantine) or F' (crash)
  std::vector<Edge> removed_edges;  // extra in-edges dropped from surviving vertices; Byzantine only
  VertexSet vertices;               // V \ F for Byzantine, V for crash
  Digraph graph;                    // same labels as the input graph
};

struct ReducedGraphFamily {
  FaultModel mode = FaultModel::byzantine;
  std::vector<ReducedGraph> graphs;
  std::uint64_t tau = 0;
  bool tau_exact = true;
  std::size_t min_source_size = 0;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

namespace detail {

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}
inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > std::numeric_limits<std::uint64_t>::max() / b ? std::numeric_limits<std::uint64_t>::max() : a * b;
}
inline std::uint64_t binomial(std::uint64_t m, std::uint64_t k) {
  if (k > m) return 0;
  k = std::min(k, m - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / (m - k + i)) return std::numeric_limits<std::uint64_t>::max();
    r = r * (m - k + i) / i;
  }
  return r;
}

// All k-subsets of `items` in lexicographic order of positions.
inline void for_each_combination(const VertexSet& items, std::size_t k, const std::function<void(const VertexSet&)>& fn) {
  if (k > items.size()) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  VertexSet pick(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) pick[i] = items[idx[i]];
    fn(pick);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == items.size() - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline std::vector<VertexSet> subsets_up_to(const VertexSet& items, std::size_t lo, std::size_t hi) {
  std::vector<VertexSet> out;
  for (std::size_t k = lo; k <= std::min(hi, items.size()); ++k)
    for_each_combination(items, k, [&](const VertexSet& s) { out.push_back(s); });
  return out;
}

// In-neighbors of each surviving vertex that are themselves surviving.
inline std::vector<VertexSet> surviving_in(const Digraph& g, const VertexSet& F) {
  std::vector<VertexSet> in(g.size());
  for (Vertex i = 0; i < g.size(); ++i)
    if (!contains(F, i)) in[i] = set_difference(g.in_neighbors(i), F);
  return in;
}

}  // namespace detail

// Number of Byzantine reduced graphs for a fixed F, saturating at uint64 max.
inline std::uint64_t count_reduced_byzantine(const Digraph& g, const VertexSet& F, std::size_t f, bool maximal_only) {
  const auto in = detail::surviving_in(g, F);
  std::uint64_t total = 1;
  for (Vertex i = 0; i < g.size(); ++i) {
    if (contains(F, i)) continue;
    const std::size_t m = in[i].size();
    std::uint64_t c = 0;
    if (maximal_only) {
      c = detail::binomial(m, std::min(f, m));
    } else {
      for (std::size_t k = 0; k <= std::min(f, m); ++k) c = detail::sat_add(c, detail::binomial(m, k));
    }
    total = detail::sat_mul(total, c);
  }
  return total;
}

// Visits the reduced graphs for fixed F in order: vertices ascending, the first vertex's choice most
// significant, per-vertex removal sets by size then lexicographically. Return false to stop.
inline void for_each_reduced_byzantine(const Digraph& g, const VertexSet& F_in, std::size_t f, bool maximal_only,
                                       const std::function<bool(const ReducedGraph&)>& visit) {
  const VertexSet F = normalized(F_in);
  if (F.size() > f) throw PreconditionError("|F| exceeds the fault budget");
  for (Vertex v : F)
    if (v >= g.size()) throw PreconditionError("faulty vertex out of range");
  const VertexSet survivors = set_difference(all_vertices(g.size()), F);
  const auto in = detail::surviving_in(g, F);

  std::vector<std::vector<VertexSet>> choices;
  for (Vertex i : survivors) {
    const std::size_t m = in[i].size();
    choices.push_back(maximal_only ? detail::subsets_up_to(in[i], std::min(f, m), std::min(f, m))
                                   : detail::subsets_up_to(in[i], 0, f));
  }

  std::vector<std::size_t> pos(survivors.size(), 0);
  while (true) {
    ReducedGraph r;
    r.removed = F;
    r.vertices = survivors;
    r.graph = Digraph(g.size());
    for (std::size_t s = 0; s < survivors.size(); ++s) {
      const Vertex i = survivors[s];
      const VertexSet& drop = choices[s][pos[s]];
      for (Vertex j : in[i]) {
        if (contains(drop, j))
          r.removed_edges.emplace_back(j, i);
        else
          r.graph.add_edge(j, i);
      }
    }
    if (!visit(r)) return;
    std::size_t s = survivors.size();
    while (s > 0 && pos[s - 1] + 1 == choices[s - 1].size()) pos[--s] = 0;
    if (s == 0) return;
    ++pos[s - 1];
  }
}

inline ReducedGraphFamily enumerate_reduced_byzantine(const Digraph& g, const VertexSet& F, std::size_t f,
                                                      bool maximal_only,
                                                      std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t count = count_reduced_byzantine(g, normalized(F), f, maximal_only);
  if (count > cap)
    throw EnumerationBudgetExceeded("reduced-graph family of size " + std::to_string(count) + " exceeds cap " +
                                    std::to_string(cap));
  ReducedGraphFamily fam;
  fam.mode = FaultModel::byzantine;
  fam.tau_exact = !maximal_only;
  fam.min_source_size = std::numeric_limits<std::size_t>::max();
  for_each_reduced_byzantine(g, F, f, maximal_only, [&](const ReducedGraph& r) {
    fam.min_source_size = std::min(fam.min_source_size, source_component(r.graph, r.vertices).size());
    fam.graphs.push_back(r);
    return true;
  });
  fam.tau = fam.graphs.size();
  return fam;
}

// τ_b for fixed F: exact when the full family fits under the cap, otherwise the
// maximal-only count as a lower bound.
struct TauValue {
  std::uint64_t tau = 0;
  bool exact = false;
};

inline TauValue reduced_byzantine_tau(const Digraph& g, const VertexSet& F, std::size_t f,
                                      std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t full = count_reduced_byzantine(g, normalized(F), f, false);
  if (full <= cap) {
    std::uint64_t visited = 0;
    for_each_reduced_byzantine(g, F, f, false, [&](const ReducedGraph&) {
      ++visited;
      return true;
    });
    return {visited, true};
  }
  return {count_reduced_byzantine(g, normalized(F), f, true), false};
}

// Smallest source component over the maximal reduced graphs for fixed F. Adding edges never
// shrinks a source component, so this is also the minimum over the full family.
inline std::size_t min_source_size_byzantine(const Digraph& g, const VertexSet& F, std::size_t f,
                                             std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t count = count_reduced_byzantine(g, normalized(F), f, true);
  if (count > cap) throw EnumerationBudgetExceeded("maximal reduced-graph family exceeds cap");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for_each_reduced_byzantine(g, F, f, true, [&](const ReducedGraph& r) {
    best = std::min(best, source_component(r.graph, r.vertices).size());
    return best > 0;
  });
  return best;
}

inline ReducedGraph reduced_crash_graph(const Digraph& g, const VertexSet& F_prime) {
  ReducedGraph r;
  r.removed = normalized(F_prime);
  r.vertices = all_vertices(g.size());
  r.graph = g.without_edges_touching(r.removed);
  return r;
}

inline std::uint64_t count_reduced_crash(std::size_t n, std::size_t f) {
  std::uint64_t c = 0;
  for (std::size_t k = 0; k <= std::min(f, n); ++k) c = detail::sat_add(c, detail::binomial(n, k));
  return c;
}

// F' ordered by size, then lexicographically.
inline void for_each_reduced_crash(const Digraph& g, std::size_t f, const std::function<bool(const ReducedGraph&)>& visit) {
  const VertexSet V = all_vertices(g.size());
  bool go = true;
  for (std::size_t k = 0; k <= std::min(f, g.size()) && go; ++k)
    detail::for_each_combination(V, k, [&](const VertexSet& Fp) {
      if (go) go = visit(reduced_crash_graph(g, Fp));
    });
}

struct CrashComponentInfo {
  bool ok = false;
  std::string reason;
  VertexSet component;  // the unique non-trivial weak component, when one exists
  VertexSet source;     // its source component
};

// Crash feasibility for a single reduced graph. The non-trivial component must exist, be unique,
// carry a source, and cover every vertex outside F'.
inline CrashComponentInfo analyze_crash_reduced(const ReducedGraph& r) {
  CrashComponentInfo info;
  const VertexSet survivors = set_difference(r.vertices, r.removed);
  if (survivors.size() <= 1) {
    info.ok = true;
    info.component = survivors;
    info.source = survivors;
    return info;
  }
  std::vector<VertexSet> nontrivial;
  for (auto& c : weak_components(r.graph, r.vertices))
    if (c.size() > 1) nontrivial.push_back(std::move(c));
  if (nontrivial.empty()) {
    info.reason = "no non-trivial weakly-connected component";
    return info;
  }
  if (nontrivial.size() > 1) {
    info.reason = "multiple non-trivial weakly-connected components";
    return info;
  }
  info.component = nontrivial.front();
  info.source = source_component(r.graph, info.component);
  if (info.source.empty()) {
    info.reason = "component has no source";
    return info;
  }
  if (info.component != survivors) {
    info.reason = "a non-crashed vertex is isolated from the component";
    return info;
  }
  info.ok = true;
  return info;
}

inline ReducedGraphFamily enumerate_reduced_crash(const Digraph& g, std::size_t f,
                                                  std::uint64_t cap = kDefaultEnumerationCap) {
  if (f > g.size()) throw PreconditionError("fault budget exceeds vertex count");
  const std::uint64_t count = count_reduced_crash(g.size(), f);
  if (count > cap)
    throw EnumerationBudgetExceeded("crash family of size " + std::to_string(count) + " exceeds cap");
  ReducedGraphFamily fam;
  fam.mode = FaultModel::crash;
  fam.tau_exact = true;
  fam.min_source_size = std::numeric_limits<std::size_t>::max();
  for_each_reduced_crash(g, f, [&](const ReducedGraph& r) {
    fam.min_source_size = std::min(fam.min_source_size, analyze_crash_reduced(r).source.size());
    fam.graphs.push_back(r);
    return true;
  });
  fam.tau = fam.graphs.size();
  return fam;
}

// ---- assumption checkers --------------------------------------------------------

struct AssumptionWitness {
  VertexSet removed;
  std::vector<Edge> removed_edges;
  std::string reason;
};

struct AssumptionReport {
  FaultModel mode = FaultModel::byzantine;
  bool holds = false;
  std::size_t gamma = 0;  // meaningful only when holds
  std::uint64_t graphs_checked = 0;
  std::optional<AssumptionWitness> witness;
};

inline AssumptionReport check_assumption_byzantine(const Digraph& g, std::size_t f,
                                                   std::uint64_t cap = kDefaultEnumerationCap) {
  if (f >= g.size()) throw PreconditionError("fault budget leaves no non-faulty agent");
  const VertexSet V = all_vertices(g.size());
  std::vector<VertexSet> fault_sets = detail::subsets_up_to(V, 0, f);
  std::uint64_t total = 0;
  for (const auto& F : fault_sets) total = detail::sat_add(total, count_reduced_byzantine(g, F, f, true));
  if (total > cap)
    throw EnumerationBudgetExceeded("assumption check needs " + std::to_string(total) + " reduced graphs, cap " +
                                    std::to_string(cap));

  AssumptionReport rep;
  rep.mode = FaultModel::byzantine;
  rep.holds = true;
  rep.gamma = std::numeric_limits<std::size_t>::max();
  for (const auto& F : fault_sets) {
    for_each_reduced_byzantine(g, F, f, true, [&](const ReducedGraph& r) {
      ++rep.graphs_checked;
      const std::size_t s = source_component(r.graph, r.vertices).size();
      if (s == 0) {
        rep.holds = false;
        rep.witness = AssumptionWitness{r.removed, r.removed_edges, "reduced graph has no source component"};
        return false;
      }
      rep.gamma = std::min(rep.gamma, s);
      return true;
    });
    if (!rep.holds) break;
  }
  if (!rep.holds) rep.gamma = 0;
  return rep;
}

inline AssumptionReport check_assumption_crash(const Digraph& g, std::size_t f,
                                               std::uint64_t cap = kDefaultEnumerationCap) {
  if (f >= g.size()) throw PreconditionError("fault budget leaves no non-faulty agent");
  const std::uint64_t total = count_reduced_crash(g.size(), f);
  if (total > cap)
    throw EnumerationBudgetExceeded("assumption check needs " + std::to_string(total) + " reduced graphs, cap " +
                                    std::to_string(cap));
  AssumptionReport rep;
  rep.mode = FaultModel::crash;
  rep.holds = true;
  rep.gamma = std::numeric_limits<std::size_t>::max();
  for_each_reduced_crash(g, f, [&](const ReducedGraph& r) {
    ++rep.graphs_checked;
    const auto info = analyze_crash_reduced(r);
    if (!info.ok) {
      rep.holds = false;
      rep.witness = AssumptionWitness{r.removed, {}, info.reason};
      return false;
    }
    rep.gamma = std::min(rep.gamma, info.source.size());
    return true;
  });
  if (!rep.holds) rep.gamma = 0;
  return rep;
}

// ---- JSON ------------------------------------------------------------------------

inline nlohmann::json vertices_to_json(const VertexSet& s) {
  nlohmann::json a = nlohmann::json::array();
  for (Vertex v : s) a.push_back(v + 1);
  return a;
}

inline nlohmann::json edges_to_json(const std::vector<Edge>& es) {
  nlohmann::json a = nlohmann::json::array();
  for (auto [i, j] : es) a.push_back({i + 1, j + 1});
  return a;
}

inline nlohmann::json to_json(const AssumptionReport& r, std::optional<TauValue> tau = std::nullopt) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["holds"] = r.holds;
  j["gamma"] = r.gamma;
  j["graphs_checked"] = r.graphs_checked;
  if (tau) {
    j["tau"] = tau->tau;
    j["tau_exact"] = tau->exact;
  } else {
    j["tau"] = nullptr;
    j["tau_exact"] = nullptr;
  }
  if (r.witness) {
    j["witness"] = {{"removed", vertices_to_json(r.witness->removed)},
                    {"removed_edges", edges_to_json(r.witness->removed_edges)},
                    {"reason", r.witness->reason}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

}  // namespace ftopt
