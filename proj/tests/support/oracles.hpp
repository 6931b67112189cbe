#pragma once

// Reference implementations used only by the tests. Each one is written from the definitions
// directly and shares no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "ftopt/netgraph.hpp"
#include "ftopt/objective.hpp"

namespace oracle_ref {

using Adj = std::vector<std::vector<bool>>;  // adj[i][j]: edge i -> j

inline Adj adjacency(const ftopt::Digraph& g) {
  Adj a(g.size(), std::vector<bool>(g.size(), false));
  for (auto [i, j] : g.edges()) a[i][j] = true;
  return a;
}

inline std::vector<bool> bfs_reach(const Adj& a, std::size_t s, const std::vector<bool>& alive) {
  std::vector<bool> seen(a.size(), false);
  std::queue<std::size_t> q;
  seen[s] = true;
  q.push(s);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (std::size_t v = 0; v < a.size(); ++v)
      if (alive[v] && a[u][v] && !seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  return seen;
}

// Vertices (among `alive`) reaching every other alive vertex.
inline std::vector<std::size_t> source_by_bfs(const Adj& a, const std::vector<bool>& alive) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (!alive[s]) continue;
    const auto r = bfs_reach(a, s, alive);
    bool all = true;
    for (std::size_t v = 0; v < a.size(); ++v)
      if (alive[v] && !r[v]) all = false;
    if (all) out.push_back(s);
  }
  return out;
}

inline std::vector<std::size_t> source_by_bfs(const Adj& a) {
  return source_by_bfs(a, std::vector<bool>(a.size(), true));
}

inline std::vector<std::vector<std::size_t>> subsets_of(const std::vector<std::size_t>& items, std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t m = items.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t k = 0; k < m; ++k)
      if (mask >> k & 1) s.push_back(items[k]);
    if (s.size() <= max_size) out.push_back(s);
  }
  return out;
}

struct ByzBrute {
  bool holds = true;
  std::size_t gamma = std::numeric_limits<std::size_t>::max();
  std::uint64_t graphs = 0;
};

// Every F with |F| <= f, every maximal in-edge removal; recursion over surviving vertices.
inline ByzBrute byzantine_assumption_brute(const ftopt::Digraph& g, std::size_t f) {
  const std::size_t n = g.size();
  ByzBrute res;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  for (const auto& F : subsets_of(all, f)) {
    std::vector<bool> alive(n, true);
    for (auto v : F) alive[v] = false;
    Adj a = adjacency(g);
    std::vector<std::size_t> surv;
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i]) surv.push_back(i);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == surv.size()) {
        ++res.graphs;
        const auto src = source_by_bfs(a, alive);
        if (src.empty()) res.holds = false;
        res.gamma = std::min(res.gamma, src.size());
        return;
      }
      const std::size_t i = surv[k];
      std::vector<std::size_t> in;
      for (std::size_t j = 0; j < n; ++j)
        if (alive[j] && a[j][i]) in.push_back(j);
      const std::size_t drop = std::min(f, in.size());
      for (const auto& S : subsets_of(in, drop)) {
        if (S.size() != drop) continue;
        for (auto j : S) a[j][i] = false;
        rec(k + 1);
        for (auto j : S) a[j][i] = true;
      }
    };
    rec(0);
  }
  if (!res.holds) res.gamma = 0;
  return res;
}

// Total reduced-graph count (all removal subsets of size <= f) for one concrete F.
inline std::uint64_t byzantine_tau_formula(const ftopt::Digraph& g, const std::vector<std::size_t>& F, std::size_t f) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::find(F.begin(), F.end(), i) != F.end()) continue;
    std::size_t d = 0;
    for (auto j : g.in_neighbors(i))
      if (std::find(F.begin(), F.end(), j) == F.end()) ++d;
    std::uint64_t ways = 0, c = 1;
    for (std::size_t k = 0; k <= std::min(f, d); ++k) {
      ways += c;
      c = c * (d - k) / (k + 1);
    }
    total *= ways;
  }
  return total;
}

// Crash assumption, strict form: exactly one weakly connected component with an edge,
// covering every vertex outside F', whose induced subgraph has a source.
inline bool crash_assumption_brute(const ftopt::Digraph& g, std::size_t f) {
  const std::size_t n = g.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  for (const auto& Fp : subsets_of(all, f)) {
    std::vector<bool> alive(n, true);
    for (auto v : Fp) alive[v] = false;
    const std::size_t remaining = n - Fp.size();
    if (remaining <= 1) continue;
    Adj a = adjacency(g);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!alive[i] || !alive[j]) a[i][j] = false;
    Adj und(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (a[i][j]) und[i][j] = und[j][i] = true;
    // component of the smallest alive vertex must contain all alive vertices and have an edge
    std::size_t s = 0;
    while (!alive[s]) ++s;
    const auto r = bfs_reach(und, s, alive);
    for (std::size_t v = 0; v < n; ++v)
      if (alive[v] && !r[v]) return false;
    if (source_by_bfs(a, alive).empty()) return false;
  }
  return true;
}

inline double central_difference(const ftopt::QuadraticCost& h, double x, double eps = 1e-6) {
  return (h.value(x + eps) - h.value(x - eps)) / (2.0 * eps);
}

using Dense = std::vector<std::vector<double>>;

inline Dense multiply(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), m = b[0].size(), k = b.size();
  Dense c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k; ++l) c[i][j] += a[i][l] * b[l][j];
  return c;
}

// ms[0] is the earliest matrix; returns ms.back() * ... * ms[0].
inline Dense naive_backward_product(const std::vector<Dense>& ms) {
  Dense acc = ms.front();
  for (std::size_t k = 1; k < ms.size(); ++k) acc = multiply(ms[k], acc);
  return acc;
}

struct Interval {
  double lo, hi;
};

// Every extreme point: β on each γ-subset of N, the remaining mass on each admissible agent.
inline Interval interval_brute(const std::vector<double>& centers, const std::vector<std::size_t>& N, double beta,
                               std::size_t gamma, bool crash_mode) {
  std::vector<std::size_t> admissible = N;
  if (crash_mode) {
    admissible.clear();
    for (std::size_t i = 0; i < centers.size(); ++i) admissible.push_back(i);
  }
  Interval r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& S : subsets_of(N, gamma)) {
    if (S.size() != gamma) continue;
    for (auto k : admissible) {
      // β·Σ_S c + (1-γβ)·c_k; on grid centers the subset sum is exact
      double sum = 0.0;
      for (auto v : S) sum += centers[v];
      const double z = beta * sum + (1.0 - static_cast<double>(gamma) * beta) * centers[k];
      r.lo = std::min(r.lo, z);
      r.hi = std::max(r.hi, z);
    }
  }
  return r;
}

inline Interval constrain(Interval x, double lo, double hi) {
  if (x.hi < lo) return {lo, lo};
  if (x.lo > hi) return {hi, hi};
  return {std::max(x.lo, lo), std::min(x.hi, hi)};
}

inline ftopt::Digraph random_digraph(std::mt19937_64& rng, std::size_t n, double p) {
  ftopt::Digraph g(n);
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && coin(rng)) g.add_edge(i, j);
  return g;
}

inline ftopt::Digraph random_undirected(std::mt19937_64& rng, std::size_t n, double p) {
  ftopt::Digraph g(n);
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) {
        g.add_edge(i, j);
        g.add_edge(j, i);
      }
  return g;
}

}  // namespace oracle_ref
