#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ftopt/errors.hpp"
#include "ftopt/netgraph.hpp"
#include "ftopt/objective.hpp"
#include "ftopt/rng.hpp"

namespace ftopt {

enum class Algorithm { A1 = 1, A2, A3, A4, A5, A6 };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::A1, Algorithm::A2, Algorithm::A3,
                                               Algorithm::A4, Algorithm::A5, Algorithm::A6};

inline std::string to_string(Algorithm a) { return "A" + std::to_string(static_cast<int>(a)); }

inline Algorithm parse_algorithm(std::string_view s) {
  for (Algorithm a : kAllAlgorithms)
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

inline FaultModel fault_model(Algorithm a) {
  return a == Algorithm::A1 || a == Algorithm::A2 ? FaultModel::byzantine : FaultModel::crash;
}

inline bool uses_projection(Algorithm a) { return a != Algorithm::A3 && a != Algorithm::A4; }

// ---- faults ------------------------------------------------------------------

struct ByzantineStrategy {
  enum class Kind { constant, uniform_random, per_neighbor_split, push_extreme, silent };

  Kind kind = Kind::constant;
  double value = 0.0;                    // constant
  std::optional<double> gradient;        // constant; defaults to `value`
  double lo = 0.0, hi = 0.0;             // uniform_random range, seeded split choices
  std::map<Vertex, double> split;        // explicit per-neighbor values; empty means seeded
  bool high = true;                      // push_extreme endpoint

  static ByzantineStrategy constant_value(double v, std::optional<double> g = std::nullopt) {
    ByzantineStrategy s;
    s.kind = Kind::constant;
    s.value = v;
    s.gradient = g;
    return s;
  }
  static ByzantineStrategy uniform_random(double lo, double hi) {
    ByzantineStrategy s;
    s.kind = Kind::uniform_random;
    s.lo = lo;
    s.hi = hi;
    return s;
  }
  static ByzantineStrategy seeded_split(double lo, double hi) {
    ByzantineStrategy s;
    s.kind = Kind::per_neighbor_split;
    s.lo = lo;
    s.hi = hi;
    return s;
  }
  static ByzantineStrategy explicit_split(std::map<Vertex, double> values) {
    ByzantineStrategy s;
    s.kind = Kind::per_neighbor_split;
    s.split = std::move(values);
    return s;
  }
  static ByzantineStrategy push_extreme(bool high) {
    ByzantineStrategy s;
    s.kind = Kind::push_extreme;
    s.high = high;
    return s;
  }
  static ByzantineStrategy silent() {
    ByzantineStrategy s;
    s.kind = Kind::silent;
    return s;
  }

  friend bool operator==(const ByzantineStrategy&, const ByzantineStrategy&) = default;
};

inline std::string to_string(ByzantineStrategy::Kind k) {
  switch (k) {
    case ByzantineStrategy::Kind::constant: return "constant";
    case ByzantineStrategy::Kind::uniform_random: return "uniform_random";
    case ByzantineStrategy::Kind::per_neighbor_split: return "per_neighbor_split";
    case ByzantineStrategy::Kind::push_extreme: return "push_extreme";
    case ByzantineStrategy::Kind::silent: return "silent";
  }
  return "?";
}

inline ByzantineStrategy::Kind parse_strategy_kind(std::string_view s) {
  using K = ByzantineStrategy::Kind;
  for (K k : {K::constant, K::uniform_random, K::per_neighbor_split, K::push_extreme, K::silent})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown Byzantine strategy '" + std::string(s) + "'");
}

struct OutgoingMessage {
  double value = 0.0;
  double gradient = 0.0;
};

struct OutboxContext {
  ConstraintInterval constraint;
  double gradient_bound = 0.0;  // forged gradients use ±2L
};

// Neighbors absent from the result receive nothing and fall back to the default value.
inline std::map<Vertex, OutgoingMessage> byzantine_outbox(const ByzantineStrategy& s, Vertex /*agent*/,
                                                          std::size_t /*round*/, const VertexSet& out_neighbors,
                                                          Rng& rng, const OutboxContext& ctx) {
  using K = ByzantineStrategy::Kind;
  const double G = 2.0 * ctx.gradient_bound;
  std::map<Vertex, OutgoingMessage> box;
  switch (s.kind) {
    case K::constant:
      for (Vertex r : out_neighbors) box[r] = {s.value, s.gradient.value_or(s.value)};
      break;
    case K::uniform_random: {
      const double v = rng.uniform(s.lo, s.hi);
      const double g = rng.uniform(-G, G);
      for (Vertex r : out_neighbors) box[r] = {v, g};
      break;
    }
    case K::per_neighbor_split:
      if (!s.split.empty()) {
        const double mid = 0.5 * (ctx.constraint.lo() + ctx.constraint.hi());
        for (Vertex r : out_neighbors) {
          auto it = s.split.find(r);
          if (it != s.split.end()) box[r] = {it->second, it->second >= mid ? -G : G};
        }
      } else {
        for (Vertex r : out_neighbors) box[r] = rng.coin() ? OutgoingMessage{s.hi, -G} : OutgoingMessage{s.lo, G};
      }
      break;
    case K::push_extreme:
      for (Vertex r : out_neighbors)
        box[r] = s.high ? OutgoingMessage{ctx.constraint.hi(), -G} : OutgoingMessage{ctx.constraint.lo(), G};
      break;
    case K::silent:
      break;
  }
  return box;
}

// An agent participates fully before `round`; in `round` it transmits to `delivered` only and
// does not update; afterwards it is silent. round 0 means it never transmits.
struct CrashEvent {
  Vertex agent = 0;
  std::size_t round = 0;
  std::optional<VertexSet> delivered;  // empty optional: seeded choice

  friend bool operator==(const CrashEvent&, const CrashEvent&) = default;
};

// ---- scenario -------------------------------------------------------------------

struct Scenario {
  std::string name = "scenario";
  Digraph graph;
  std::size_t f = 0;
  std::map<Vertex, ByzantineStrategy> byzantine;
  std::map<Vertex, CrashEvent> crashes;
  CostFamily costs;
  ConstraintInterval constraint{0.0, 0.0};
  StepSchedule schedule;
  Algorithm algorithm = Algorithm::A1;
  std::size_t rounds = 0;
  std::uint64_t seed = 0;
  std::vector<double> initial;

  std::size_t size() const { return graph.size(); }

  VertexSet faulty() const {
    VertexSet F;
    for (const auto& [v, _] : byzantine) F.push_back(v);
    for (const auto& [v, _] : crashes) F.push_back(v);
    return normalized(F);
  }
  VertexSet non_faulty() const { return set_difference(all_vertices(size()), faulty()); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline void validate(const Scenario& s) {
  const std::size_t n = s.size();
  if (n == 0) throw IncompatibleScenario("graph has no vertices");
  if (s.costs.size() != n) throw IncompatibleScenario("need one cost per agent");
  if (s.initial.size() != n) throw IncompatibleScenario("need one initial state per agent");
  for (double x : s.initial)
    if (!std::isfinite(x)) throw IncompatibleScenario("initial states must be finite");
  const FaultModel model = fault_model(s.algorithm);
  if (model == FaultModel::byzantine && !s.crashes.empty())
    throw IncompatibleScenario(to_string(s.algorithm) + " runs under Byzantine faults; crash events given");
  if (model == FaultModel::crash && !s.byzantine.empty())
    throw IncompatibleScenario(to_string(s.algorithm) + " runs under crash faults; Byzantine agents given");
  if (s.algorithm == Algorithm::A4 && !s.graph.is_symmetric())
    throw IncompatibleScenario("A4 needs an undirected graph");
  for (const auto& [v, _] : s.byzantine)
    if (v >= n) throw IncompatibleScenario("Byzantine agent out of range");
  for (const auto& [v, c] : s.crashes) {
    if (v >= n || c.agent != v) throw IncompatibleScenario("crash event agent out of range");
    if (c.delivered)
      for (Vertex r : *c.delivered)
        if (!s.graph.has_edge(v, r)) throw IncompatibleScenario("crash delivery target is not an out-neighbor");
  }
  if (s.faulty().size() > s.f) throw IncompatibleScenario("more faulty agents than the fault budget");
  if (s.faulty().size() >= n) throw IncompatibleScenario("no non-faulty agent");
}

// ---- trims ------------------------------------------------------------------------

struct Entry {
  Vertex sender = 0;
  double value = 0.0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

struct TrimResult {
  std::vector<Entry> retained;  // ascending (value, sender)
  std::vector<Entry> low;       // the f smallest
  std::vector<Entry> high;      // the f largest
};

namespace detail {

inline void sort_entries(std::vector<Entry>& v) {
  std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) {
    return a.value < b.value || (a.value == b.value && a.sender < b.sender);
  });
}

// Needs |values| >= 2f; the remainder may be empty.
inline TrimResult trim(std::vector<Entry> values, std::size_t f) {
  if (values.size() < 2 * f) throw TooFewValues("trim needs at least 2f values");
  sort_entries(values);
  TrimResult r;
  r.low.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(f));
  r.retained.assign(values.begin() + static_cast<std::ptrdiff_t>(f), values.end() - static_cast<std::ptrdiff_t>(f));
  r.high.assign(values.end() - static_cast<std::ptrdiff_t>(f), values.end());
  return r;
}

}  // namespace detail

inline TrimResult trim_extremes(std::vector<Entry> values, std::size_t f) {
  if (values.size() < 2 * f + 1) throw TooFewValues("trim_extremes needs at least 2f+1 values");
  return detail::trim(std::move(values), f);
}

struct GradientTrim {
  std::vector<Entry> retained;  // R²
  double g_hat = 0.0;           // largest remaining
  double g_check = 0.0;         // smallest remaining
  double g_tilde = 0.0;         // midpoint
};

inline GradientTrim trim_gradients_mid_extremes(std::vector<Entry> values, std::size_t f) {
  if (values.size() < 2 * f + 1) throw TooFewValues("gradient trim needs at least 2f+1 values");
  auto t = detail::trim(std::move(values), f);
  GradientTrim g;
  g.retained = std::move(t.retained);
  g.g_check = g.retained.front().value;
  g.g_hat = g.retained.back().value;
  g.g_tilde = 0.5 * (g.g_hat + g.g_check);
  return g;
}

// ---- trace ---------------------------------------------------------------------------

struct ReceivedMessage {
  Vertex sender = 0;
  double value = 0.0;
  double gradient = 0.0;
  bool defaulted = false;  // Byzantine sender stayed silent; receiver substituted its own state
  friend bool operator==(const ReceivedMessage&, const ReceivedMessage&) = default;
};

struct AgentStep {
  Vertex agent = 0;
  std::vector<ReceivedMessage> received;  // ascending sender
  VertexSet retained;            // N_i*[t] (A1), R¹ (A2), R_i(t) (A3-A6)
  VertexSet trimmed_low;         // A1/A2 estimate trim
  VertexSet trimmed_high;
  VertexSet retained_gradients;  // R² (A2); may contain the agent itself
  double aggregate = 0.0;        // v_i[t-1]
  double gradient_used = 0.0;
  double projection_error = 0.0;  // e_i[t-1]
  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

struct ByzantineSend {
  Vertex sender = 0;
  Vertex receiver = 0;
  double value = 0.0;
  double gradient = 0.0;
  friend bool operator==(const ByzantineSend&, const ByzantineSend&) = default;
};

struct RoundRecord {
  std::size_t round = 0;
  double step = 0.0;              // λ[round-1]; zero for round 0
  std::vector<double> estimates;  // x[round]; NaN for Byzantine agents
  VertexSet live_begin;           // N[round]
  VertexSet live_end;             // N̄[round]
  std::vector<AgentStep> steps;   // updating agents, ascending
  std::vector<ByzantineSend> byzantine;

  const AgentStep* step_of(Vertex i) const {
    auto it = std::lower_bound(steps.begin(), steps.end(), i,
                               [](const AgentStep& s, Vertex v) { return s.agent < v; });
    return it != steps.end() && it->agent == i ? &*it : nullptr;
  }
};

struct ExecutionTrace {
  Scenario scenario;
  double lipschitz = 0.0;
  std::vector<RoundRecord> rounds;  // rounds[t] holds x[t]; rounds[0] is the initial state

  std::size_t last_round() const { return rounds.empty() ? 0 : rounds.size() - 1; }
  VertexSet non_faulty() const { return scenario.non_faulty(); }
};

inline double spread(const std::vector<double>& x, const VertexSet& over) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Vertex v : over) {
    lo = std::min(lo, x[v]);
    hi = std::max(hi, x[v]);
  }
  return over.empty() ? 0.0 : hi - lo;
}

inline double mean(const std::vector<double>& x, const VertexSet& over) {
  double s = 0.0;
  for (Vertex v : over) s += x[v];
  return over.empty() ? 0.0 : s / static_cast<double>(over.size());
}

// ---- run -------------------------------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t kTagByzantine = 0xB1;
inline constexpr std::uint64_t kTagDelivery = 0xC2;

inline VertexSet senders_of(const std::vector<Entry>& es) {
  VertexSet s;
  for (const auto& e : es) s.push_back(e.sender);
  return normalized(s);
}

inline VertexSet crash_live(const Scenario& s, std::size_t t, bool strict) {
  VertexSet live;
  for (Vertex v = 0; v < s.size(); ++v) {
    auto it = s.crashes.find(v);
    if (it == s.crashes.end() || (strict ? it->second.round > t : it->second.round >= t)) live.push_back(v);
  }
  return live;
}

// Receivers of a crashing agent's final transmission.
inline VertexSet final_delivery(const Scenario& s, const CrashEvent& c, std::size_t t) {
  if (c.delivered) return normalized(*c.delivered);
  Rng rng{s.seed, c.agent, t, kTagDelivery};
  VertexSet d;
  for (Vertex r : s.graph.out_neighbors(c.agent))
    if (rng.coin()) d.push_back(r);
  return d;
}

inline void run_byzantine_round(const Scenario& s, double L, std::size_t t, double lambda, std::vector<double>& x,
                                RoundRecord& rec) {
  const std::size_t n = s.size();
  const OutboxContext ctx{s.constraint, L};
  std::map<Vertex, std::map<Vertex, OutgoingMessage>> outbox;
  for (const auto& [b, strat] : s.byzantine) {
    Rng rng{s.seed, b, t, kTagByzantine};
    outbox[b] = byzantine_outbox(strat, b, t, s.graph.out_neighbors(b), rng, ctx);
    for (const auto& [r, m] : outbox[b])
      if (!s.byzantine.count(r)) rec.byzantine.push_back({b, r, m.value, m.gradient});
  }

  std::vector<double> next = x;
  for (Vertex i = 0; i < n; ++i) {
    if (s.byzantine.count(i)) continue;
    AgentStep st;
    st.agent = i;
    const double own_grad = s.costs[i].gradient(x[i]);
    std::vector<Entry> values, grads;
    for (Vertex j : s.graph.in_neighbors(i)) {
      ReceivedMessage m{j, 0.0, 0.0, false};
      if (!s.byzantine.count(j)) {
        m.value = x[j];
        m.gradient = s.costs[j].gradient(x[j]);
      } else if (auto it = outbox[j].find(i); it != outbox[j].end()) {
        m.value = it->second.value;
        m.gradient = it->second.gradient;
      } else {
        m.value = x[i];
        m.gradient = own_grad;
        m.defaulted = true;
      }
      st.received.push_back(m);
      values.push_back({j, m.value});
      grads.push_back({j, m.gradient});
    }
    const auto tr = trim(values, s.f);
    st.retained = senders_of(tr.retained);
    st.trimmed_low = senders_of(tr.low);
    st.trimmed_high = senders_of(tr.high);
    double sum = x[i];
    for (const auto& e : tr.retained) sum += e.value;
    st.aggregate = sum / static_cast<double>(tr.retained.size() + 1);

    if (s.algorithm == Algorithm::A1) {
      st.gradient_used = own_grad;
    } else {
      grads.push_back({i, own_grad});
      const auto gt = trim_gradients_mid_extremes(grads, s.f);
      st.retained_gradients = senders_of(gt.retained);
      st.gradient_used = gt.g_tilde;
    }
    const double z = st.aggregate - lambda * st.gradient_used;
    next[i] = s.constraint.project(z);
    st.projection_error = next[i] - z;
    rec.steps.push_back(std::move(st));
  }
  x = std::move(next);
}

inline void run_crash_round(const Scenario& s, std::size_t t, double lambda, std::vector<double>& x,
                            RoundRecord& rec) {
  const std::size_t n = s.size();
  rec.live_begin = crash_live(s, t, false);
  rec.live_end = crash_live(s, t, true);

  // inbox[i]: senders whose transmission reaches i this round
  std::vector<VertexSet> inbox(n);
  for (Vertex j : rec.live_begin) {
    if (contains(rec.live_end, j)) {
      for (Vertex r : s.graph.out_neighbors(j)) inbox[r].push_back(j);
    } else {
      for (Vertex r : final_delivery(s, s.crashes.at(j), t)) inbox[r].push_back(j);
    }
  }

  std::vector<double> next = x;
  for (Vertex i : rec.live_end) {
    AgentStep st;
    st.agent = i;
    VertexSet R = normalized(inbox[i]);
    for (Vertex j : R) st.received.push_back({j, x[j], s.costs[j].gradient(x[j]), false});
    st.retained = R;
    const double l1 = static_cast<double>(R.size() + 1);
    double xs = x[i], gs = s.costs[i].gradient(x[i]);
    for (Vertex j : R) {
      xs += x[j];
      gs += s.costs[j].gradient(x[j]);
    }
    switch (s.algorithm) {
      case Algorithm::A3:
        st.aggregate = xs / l1;
        next[i] = st.aggregate;
        break;
      case Algorithm::A4: {
        const double di = static_cast<double>(s.graph.in_degree(i)) + 1.0;
        double acc = 0.0, self = 1.0;
        for (Vertex j : R) {
          const double a = 1.0 / std::max(di, static_cast<double>(s.graph.in_degree(j)) + 1.0);
          acc += a * x[j];
          self -= a;
        }
        st.aggregate = acc + self * x[i];
        next[i] = st.aggregate;
        break;
      }
      case Algorithm::A5: {
        st.aggregate = xs / l1;
        st.gradient_used = s.costs[i].gradient(x[i]);
        const double z = st.aggregate - lambda * st.gradient_used;
        next[i] = s.constraint.project(z);
        st.projection_error = next[i] - z;
        break;
      }
      case Algorithm::A6: {
        st.aggregate = xs / l1;
        st.gradient_used = gs / l1;
        const double z = st.aggregate - lambda * st.gradient_used;
        next[i] = s.constraint.project(z);
        st.projection_error = next[i] - z;
        break;
      }
      default:
        throw IncompatibleScenario("not a crash-model algorithm");
    }
    rec.steps.push_back(std::move(st));
  }
  x = std::move(next);
}

}  // namespace detail

inline ExecutionTrace run(const Scenario& s) {
  validate(s);
  const std::size_t n = s.size();
  const bool byz = fault_model(s.algorithm) == FaultModel::byzantine;
  if (byz)
    for (Vertex i = 0; i < n; ++i)
      if (!s.byzantine.count(i) && s.graph.in_degree(i) < 2 * s.f)
        throw TooFewValues("agent " + std::to_string(i + 1) + " has in-degree below 2f");

  ExecutionTrace trace;
  trace.scenario = s;
  trace.lipschitz = lipschitz_bound(s.costs, s.constraint);
  trace.rounds.reserve(s.rounds + 1);

  std::vector<double> x = s.initial;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto snapshot = [&](RoundRecord& r) {
    r.estimates = x;
    for (const auto& [b, _] : s.byzantine) r.estimates[b] = nan;
  };

  RoundRecord r0;
  r0.round = 0;
  if (byz) {
    r0.live_begin = r0.live_end = s.non_faulty();
  } else {
    r0.live_begin = r0.live_end = detail::crash_live(s, 1, false);
  }
  snapshot(r0);
  trace.rounds.push_back(std::move(r0));

  for (std::size_t t = 1; t <= s.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.step = s.schedule(t - 1);
    if (byz) {
      rec.live_begin = rec.live_end = trace.rounds[0].live_begin;
      detail::run_byzantine_round(s, trace.lipschitz, t, rec.step, x, rec);
    } else {
      detail::run_crash_round(s, t, rec.step, x, rec);
    }
    snapshot(rec);
    trace.rounds.push_back(std::move(rec));
  }
  return trace;
}

// ---- trace audit ---------------------------------------------------------------------------

struct TraceAudit {
  std::size_t steps_checked = 0;
  std::size_t retained_size_violations = 0;
  std::size_t projection_bound_violations = 0;
  double max_projection_ratio = 0.0;  // max |e| / (λ L)
  std::size_t feasibility_violations = 0;
  std::size_t validity_violations = 0;
  std::size_t silence_violations = 0;

  bool ok() const {
    return retained_size_violations == 0 && projection_bound_violations == 0 && feasibility_violations == 0 &&
           validity_violations == 0 && silence_violations == 0;
  }
};

inline TraceAudit audit_trace(const ExecutionTrace& tr, double slack = 1e-12) {
  const Scenario& s = tr.scenario;
  const Algorithm a = s.algorithm;
  const bool byz = fault_model(a) == FaultModel::byzantine;
  const VertexSet N = s.non_faulty();
  TraceAudit au;
  for (std::size_t t = 1; t < tr.rounds.size(); ++t) {
    const RoundRecord& rec = tr.rounds[t];
    const auto& prev = tr.rounds[t - 1].estimates;
    double m = std::numeric_limits<double>::infinity(), M = -m;
    for (Vertex v : N) {
      m = std::min(m, prev[v]);
      M = std::max(M, prev[v]);
    }
    for (const AgentStep& st : rec.steps) {
      ++au.steps_checked;
      const std::size_t d = s.graph.in_degree(st.agent);
      if (byz) {
        if (st.retained.size() != d - 2 * s.f) ++au.retained_size_violations;
        if (a == Algorithm::A2 && st.retained_gradients.size() != d + 1 - 2 * s.f) ++au.retained_size_violations;
        if (st.aggregate < m - slack || st.aggregate > M + slack) ++au.validity_violations;
      } else {
        for (const auto& msg : st.received) {
          auto it = s.crashes.find(msg.sender);
          if (it == s.crashes.end()) continue;
          const CrashEvent& c = it->second;
          if (t > c.round || (t == c.round && c.delivered && !contains(*c.delivered, st.agent)))
            ++au.silence_violations;
        }
      }
      if (uses_projection(a)) {
        const double bound = rec.step * tr.lipschitz;
        const double e = std::abs(st.projection_error);
        if (e > bound + slack) ++au.projection_bound_violations;
        if (bound > 0.0) au.max_projection_ratio = std::max(au.max_projection_ratio, e / bound);
        if (!s.constraint.contains(rec.estimates[st.agent])) ++au.feasibility_violations;
      }
    }
  }
  return au;
}

}  // namespace ftopt
