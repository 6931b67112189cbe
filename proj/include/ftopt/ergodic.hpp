#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ftopt/engine.hpp"
#include "ftopt/errors.hpp"
#include "ftopt/netgraph.hpp"
#include "ftopt/rng.hpp"

namespace ftopt {

using Matrix = Eigen::MatrixXd;

struct StochasticMatrix {
  std::size_t round = 0;
  VertexSet agents;  // label of each row/column
  Matrix values;

  std::size_t dim() const { return agents.size(); }
  std::size_t index_of(Vertex v) const {
    auto it = std::lower_bound(agents.begin(), agents.end(), v);
    if (it == agents.end() || *it != v) throw IndexOutOfRange("agent " + std::to_string(v + 1) + " not in matrix");
    return static_cast<std::size_t>(it - agents.begin());
  }
};

inline double max_row_sum_error(const Matrix& m) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) e = std::max(e, std::abs(m.row(i).sum() - 1.0));
  return e;
}

inline double max_col_sum_error(const Matrix& m) {
  double e = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) e = std::max(e, std::abs(m.col(j).sum() - 1.0));
  return e;
}

inline bool is_row_stochastic(const Matrix& m, double tol = 1e-12) {
  return (m.array() >= 0.0).all() && max_row_sum_error(m) <= tol;
}

inline void write_matrix_csv(std::ostream& out, const StochasticMatrix& m) {
  out << "# round " << m.round << '\n';
  for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? "," : "") << "a" << m.agents[j] + 1;
  out << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

// ---- crash matrices ----------------------------------------------------------------

// P[t] for round t in 1..T, indexed by all n agents. x[t] = P[t] x[t-1] for A3/A4; for A5/A6
// the product reproduces the pre-gradient aggregate.
inline StochasticMatrix build_crash_matrix(const ExecutionTrace& tr, std::size_t t) {
  const Scenario& s = tr.scenario;
  if (fault_model(s.algorithm) != FaultModel::crash) throw TraceMismatch("crash matrix needs an A3-A6 trace");
  if (t < 1 || t > tr.last_round()) throw IndexOutOfRange("round " + std::to_string(t) + " outside the trace");
  const std::size_t n = s.size();
  const RoundRecord& rec = tr.rounds[t];
  StochasticMatrix P;
  P.round = t;
  P.agents = all_vertices(n);
  P.values = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto deg1 = [&](Vertex v) { return static_cast<double>(s.graph.in_degree(v)) + 1.0; };

  std::vector<char> updated(n, 0);
  for (const AgentStep& st : rec.steps) {
    const Vertex i = st.agent;
    if (!contains(rec.live_end, i)) throw TraceMismatch("agent updated after crashing");
    updated[i] = 1;
    for (Vertex j : st.retained) {
      if (!s.graph.has_edge(j, i)) throw TraceMismatch("retained sender is not an in-neighbor");
      if (!contains(rec.live_begin, j)) throw TraceMismatch("message from an agent crashed before the round");
    }
    auto row = P.values.row(static_cast<Eigen::Index>(i));
    row.setZero();
    if (s.algorithm == Algorithm::A4) {
      double self = 1.0;
      for (Vertex j : st.retained) {
        const double a = 1.0 / std::max(deg1(i), deg1(j));
        row(static_cast<Eigen::Index>(j)) = a;
        self -= a;
      }
      row(static_cast<Eigen::Index>(i)) = self;
    } else {
      const double w = 1.0 / static_cast<double>(st.retained.size() + 1);
      row(static_cast<Eigen::Index>(i)) = w;
      for (Vertex j : st.retained) row(static_cast<Eigen::Index>(j)) = w;
    }
  }
  for (Vertex i : rec.live_end)
    if (!updated[i]) throw TraceMismatch("live agent has no recorded step");

  if (s.algorithm == Algorithm::A4) {
    // Rows of agents that do not update mirror their column so P̃ stays doubly stochastic.
    for (Vertex i = 0; i < n; ++i) {
      if (updated[i]) continue;
      auto row = P.values.row(static_cast<Eigen::Index>(i));
      row.setZero();
      double self = 1.0;
      for (const AgentStep& st : rec.steps)
        if (contains(st.retained, i)) {
          const double a = 1.0 / std::max(deg1(i), deg1(st.agent));
          row(static_cast<Eigen::Index>(st.agent)) = a;
          self -= a;
        }
      row(static_cast<Eigen::Index>(i)) = self;
    }
  }

  const Eigen::Map<const Eigen::VectorXd> prev(tr.rounds[t - 1].estimates.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd mixed = P.values * prev;
  for (const AgentStep& st : rec.steps) {
    const double got = mixed(static_cast<Eigen::Index>(st.agent));
    if (std::abs(got - st.aggregate) > 1e-9 * (1.0 + std::abs(st.aggregate)))
      throw TraceMismatch("recorded aggregate of agent " + std::to_string(st.agent + 1) + " in round " +
                          std::to_string(t) + " does not match the reconstructed row");
  }
  return P;
}

// ---- Byzantine matrices ------------------------------------------------------------------

// (θ, 1-θ) with w = θ s + (1-θ) l, s <= w <= l.
inline std::pair<double, double> bracket_coefficients(double w, double s, double l) {
  if (!(s <= w && w <= l)) throw ReconstructionFailed("value is not bracketed");
  if (l == s) return {1.0, 0.0};
  const double theta = (l - w) / (l - s);
  return {theta, 1.0 - theta};
}

struct ByzantineMatrix {
  StochasticMatrix matrix;  // M[t], rows and columns over the non-faulty agents
  Eigen::VectorXd drift;    // d[t]
  Eigen::VectorXd error;    // e[t]
  double step = 0.0;        // λ[t]
  double residual = 0.0;    // ‖x[t+1] - (M x[t] - λ d + e)‖∞
};

// M[t] for t in 0..T-1: the map from x[t] to x[t+1]. Each retained Byzantine value is written as a
// convex combination of a distinct pair of non-faulty values, one cut from each end of the sort.
inline ByzantineMatrix build_byzantine_matrix(const ExecutionTrace& tr, std::size_t t) {
  const Scenario& s = tr.scenario;
  if (fault_model(s.algorithm) != FaultModel::byzantine) throw TraceMismatch("Byzantine matrix needs an A1/A2 trace");
  if (t + 1 > tr.last_round()) throw IndexOutOfRange("round " + std::to_string(t) + " outside the trace");
  const VertexSet N = s.non_faulty();
  const RoundRecord& rec = tr.rounds[t + 1];
  const auto& x0 = tr.rounds[t].estimates;
  const auto& x1 = rec.estimates;
  const auto faulty = [&](Vertex v) { return s.byzantine.count(v) > 0; };

  ByzantineMatrix out;
  out.matrix.round = t;
  out.matrix.agents = N;
  const auto dim = static_cast<Eigen::Index>(N.size());
  out.matrix.values = Matrix::Zero(dim, dim);
  out.drift = Eigen::VectorXd::Zero(dim);
  out.error = Eigen::VectorXd::Zero(dim);
  out.step = rec.step;
  if (rec.steps.size() != N.size()) throw TraceMismatch("round does not record every non-faulty agent");

  for (const AgentStep& st : rec.steps) {
    const Vertex i = st.agent;
    const auto row = static_cast<Eigen::Index>(out.matrix.index_of(i));
    std::vector<Entry> values;
    for (const auto& m : st.received) values.push_back({m.sender, m.value});
    const auto tr_ = detail::trim(values, s.f);
    if (detail::senders_of(tr_.retained) != st.retained || detail::senders_of(tr_.low) != st.trimmed_low ||
        detail::senders_of(tr_.high) != st.trimmed_high)
      throw TraceMismatch("recorded trim sets disagree with the received values");

    const double a = 1.0 / static_cast<double>(tr_.retained.size() + 1);
    auto& M = out.matrix.values;
    M(row, row) += a;
    std::vector<Entry> low_nf, high_nf;
    for (const auto& e : tr_.low)
      if (!faulty(e.sender)) low_nf.push_back(e);
    for (const auto& e : tr_.high)
      if (!faulty(e.sender)) high_nf.push_back(e);
    std::size_t q = 0;
    for (const auto& e : tr_.retained) {
      if (!faulty(e.sender)) {
        M(row, static_cast<Eigen::Index>(out.matrix.index_of(e.sender))) += a;
        continue;
      }
      if (q >= low_nf.size() || q >= high_nf.size())
        throw ReconstructionFailed("no non-faulty bracket for a retained Byzantine value");
      const Entry& lo = low_nf[q];
      const Entry& hi = high_nf[q];
      ++q;
      const auto [cs, cl] = bracket_coefficients(e.value, lo.value, hi.value);
      M(row, static_cast<Eigen::Index>(out.matrix.index_of(lo.sender))) += a * cs;
      M(row, static_cast<Eigen::Index>(out.matrix.index_of(hi.sender))) += a * cl;
    }
    out.drift(row) = st.gradient_used;
    out.error(row) = st.projection_error;
  }

  Eigen::VectorXd xt(dim), xn(dim);
  for (std::size_t k = 0; k < N.size(); ++k) {
    xt(static_cast<Eigen::Index>(k)) = x0[N[k]];
    xn(static_cast<Eigen::Index>(k)) = x1[N[k]];
  }
  const Eigen::VectorXd pred = out.matrix.values * xt - out.step * out.drift + out.error;
  out.residual = (xn - pred).cwiseAbs().maxCoeff();
  return out;
}

// True when M >= ξ (I + A_H) entrywise on the non-faulty block, within `tol`.
inline bool dominates(const StochasticMatrix& M, const ReducedGraph& H, double xi, double tol = 1e-12) {
  for (std::size_t r = 0; r < M.dim(); ++r) {
    const Vertex i = M.agents[r];
    const auto ri = static_cast<Eigen::Index>(r);
    if (M.values(ri, ri) < xi - tol) return false;
    for (Vertex j : H.graph.in_neighbors(i))
      if (M.values(ri, static_cast<Eigen::Index>(M.index_of(j))) < xi - tol) return false;
  }
  return true;
}

// Builds a member of the reduced-graph family dominated by M, if one exists: each row keeps the
// in-neighbors whose weight reaches ξ and must drop at most f of the others.
inline std::optional<ReducedGraph> certify_reduced_graph(const StochasticMatrix& M, const Digraph& g,
                                                          const VertexSet& F, std::size_t f, double xi,
                                                          double tol = 1e-12) {
  ReducedGraph H;
  H.removed = normalized(F);
  H.vertices = set_difference(all_vertices(g.size()), H.removed);
  H.graph = Digraph(g.size());
  for (Vertex i : H.vertices) {
    const auto ri = static_cast<Eigen::Index>(M.index_of(i));
    if (M.values(ri, ri) < xi - tol) return std::nullopt;
    std::size_t dropped = 0;
    for (Vertex j : set_difference(g.in_neighbors(i), H.removed)) {
      if (M.values(ri, static_cast<Eigen::Index>(M.index_of(j))) >= xi - tol) {
        H.graph.add_edge(j, i);
      } else {
        H.removed_edges.emplace_back(j, i);
        ++dropped;
      }
    }
    if (dropped > f) return std::nullopt;
  }
  std::sort(H.removed_edges.begin(), H.removed_edges.end());
  return H;
}

// Exhaustive search over an enumerated family.
inline std::optional<ReducedGraph> find_certifying_graph(const StochasticMatrix& M, const ReducedGraphFamily& fam,
                                                         double xi, double tol = 1e-12) {
  for (const auto& H : fam.graphs)
    if (dominates(M, H, xi, tol)) return H;
  return std::nullopt;
}

// ---- products -------------------------------------------------------------------------------

class ProductChain {
 public:
  ProductChain() = default;
  // Matrices for consecutive rounds, all of one dimension.
  explicit ProductChain(std::vector<StochasticMatrix> ms) : ms_(std::move(ms)) {
    for (std::size_t k = 1; k < ms_.size(); ++k)
      if (ms_[k].round != ms_[k - 1].round + 1 || ms_[k].dim() != ms_[0].dim())
        throw std::invalid_argument("chain needs consecutive rounds of equal dimension");
  }

  bool empty() const { return ms_.empty(); }
  std::size_t first() const { return ms_.front().round; }
  std::size_t last() const { return ms_.back().round; }
  std::size_t dim() const { return ms_.empty() ? 0 : ms_.front().dim(); }
  const VertexSet& agents() const { return ms_.front().agents; }

  const StochasticMatrix& at(std::size_t t) const {
    if (ms_.empty() || t < first() || t > last()) throw IndexOutOfRange("no matrix for round " + std::to_string(t));
    return ms_[t - first()];
  }

  // M[t] M[t-1] ... M[r]; the identity when r == t+1.
  Matrix product(std::size_t t, std::size_t r) const {
    const auto bad = [&] {
      return IndexOutOfRange("product(" + std::to_string(t) + ", " + std::to_string(r) + ") outside the chain");
    };
    if (ms_.empty() || r > t + 1 || r < first()) throw bad();
    if (r == t + 1 ? r > last() + 1 : t > last()) throw bad();
    const auto d = static_cast<Eigen::Index>(dim());
    Matrix acc = Matrix::Identity(d, d);
    for (std::size_t k = r; k <= t; ++k) acc = at(k).values * acc;
    return acc;
  }

 private:
  std::vector<StochasticMatrix> ms_;
};

inline ProductChain crash_chain(const ExecutionTrace& tr) {
  std::vector<StochasticMatrix> ms;
  for (std::size_t t = 1; t <= tr.last_round(); ++t) ms.push_back(build_crash_matrix(tr, t));
  return ProductChain(std::move(ms));
}

struct ByzantineChain {
  ProductChain chain;
  double max_residual = 0.0;
};

inline ByzantineChain byzantine_chain(const ExecutionTrace& tr) {
  ByzantineChain out;
  std::vector<StochasticMatrix> ms;
  for (std::size_t t = 0; t < tr.last_round(); ++t) {
    auto b = build_byzantine_matrix(tr, t);
    out.max_residual = std::max(out.max_residual, b.residual);
    ms.push_back(std::move(b.matrix));
  }
  out.chain = ProductChain(std::move(ms));
  return out;
}

// ---- coefficients of ergodicity ----------------------------------------------------------------

struct ErgodicCoefficients {
  double delta = 0.0;
  double eta = 1.0;
};

// `live` holds matrix indices; rows and columns are both restricted to it.
inline ErgodicCoefficients ergodic_coefficients(const Matrix& m, const std::vector<std::size_t>& live) {
  if (live.empty()) throw std::invalid_argument("live set must be nonempty");
  ErgodicCoefficients c;
  c.delta = 0.0;
  c.eta = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < live.size(); ++a)
    for (std::size_t b = a; b < live.size(); ++b) {
      const auto ia = static_cast<Eigen::Index>(live[a]);
      const auto ib = static_cast<Eigen::Index>(live[b]);
      double overlap = 0.0;
      for (std::size_t k : live) {
        const auto col = static_cast<Eigen::Index>(k);
        c.delta = std::max(c.delta, std::abs(m(ia, col) - m(ib, col)));
        overlap += std::min(m(ia, col), m(ib, col));
      }
      c.eta = std::min(c.eta, overlap);
    }
  return c;
}

inline ErgodicCoefficients ergodic_coefficients(const StochasticMatrix& m, const VertexSet& live) {
  std::vector<std::size_t> idx;
  for (Vertex v : live) idx.push_back(m.index_of(v));
  return ergodic_coefficients(m.values, idx);
}

// ---- limiting weights -------------------------------------------------------------------------

struct LimitingWeights {
  std::size_t r = 0;
  std::size_t horizon = 0;
  Eigen::VectorXd pi;     // indexed like the chain's agents
  double residual = 0.0;  // max over rows in `rows`, all columns, of |Φ_ij - π_j|
};

// π(r) as the mean of the given rows of product(horizon, r).
inline LimitingWeights limiting_weights(const ProductChain& chain, std::size_t r, std::size_t horizon,
                                        const std::vector<std::size_t>& rows, double threshold = 1e-6) {
  if (rows.empty()) throw std::invalid_argument("need at least one row");
  const Matrix phi = chain.product(horizon, r);
  LimitingWeights w;
  w.r = r;
  w.horizon = horizon;
  w.pi = Eigen::VectorXd::Zero(phi.cols());
  for (std::size_t i : rows) w.pi += phi.row(static_cast<Eigen::Index>(i)).transpose();
  w.pi /= static_cast<double>(rows.size());
  for (std::size_t i : rows)
    w.residual = std::max(w.residual, (phi.row(static_cast<Eigen::Index>(i)).transpose() - w.pi).cwiseAbs().maxCoeff());
  if (w.residual > threshold)
    throw NotConverged("product rows have not merged by the horizon", w.residual);
  return w;
}

// ---- rate parameters ----------------------------------------------------------------------------

struct RateParams {
  FaultModel mode = FaultModel::byzantine;
  std::size_t n = 0;
  std::size_t f = 0;
  std::size_t phi = 0;
  // Byzantine
  double xi = 0.0;
  std::uint64_t tau = 0;
  bool tau_exact = false;
  double nu = 0.0;          // τ_b (n - φ)
  double log_xi_nu = 0.0;   // ν log ξ
  // crash
  double zeta = 0.0;

  double xi_nu() const { return std::exp(log_xi_nu); }
  double theta() const { return 1.0 - xi_nu(); }
  // θ^k without cancellation when ξ^ν is tiny.
  double theta_pow(double k) const { return std::exp(k * std::log1p(-xi_nu())); }
  double zeta_n() const { return std::pow(zeta, static_cast<double>(n)); }
};

inline RateParams byzantine_rate_params(const Digraph& g, const VertexSet& F, std::size_t f,
                                        std::uint64_t cap = kDefaultEnumerationCap) {
  const std::size_t dmax = g.max_in_degree();
  if (dmax + 1 <= 2 * f) throw InvalidParams("in-degrees too small for the fault budget");
  RateParams p;
  p.mode = FaultModel::byzantine;
  p.n = g.size();
  p.f = f;
  p.phi = normalized(F).size();
  p.xi = 1.0 / (2.0 * static_cast<double>(dmax + 1 - 2 * f));
  const TauValue tau = reduced_byzantine_tau(g, F, f, cap);
  p.tau = tau.tau;
  p.tau_exact = tau.exact;
  p.nu = static_cast<double>(tau.tau) * static_cast<double>(p.n - p.phi);
  p.log_xi_nu = p.nu * std::log(p.xi);
  return p;
}

inline RateParams crash_rate_params(const Digraph& g, std::size_t f) {
  RateParams p;
  p.mode = FaultModel::crash;
  p.n = g.size();
  p.f = f;
  p.zeta = 1.0 / static_cast<double>(g.max_in_degree() + 1);
  return p;
}

// ---- certification ----------------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  double bound = 0.0;      // the threshold in the check's own units
  double observed = 0.0;   // worst observed value
  bool pass = true;
  bool advisory = false;   // reported but not counted toward the verdict
  bool evaluated = true;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  std::string detail;
};

struct CertificationReport {
  std::vector<CheckResult> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass || c.advisory; });
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline nlohmann::json to_json(const CheckResult& c) {
  return {{"name", c.name},         {"bound", c.bound},           {"observed", c.observed},
          {"pass", c.pass},         {"advisory", c.advisory},     {"evaluated", c.evaluated},
          {"samples", c.samples},   {"violations", c.violations}, {"detail", c.detail}};
}

inline nlohmann::json to_json(const CertificationReport& r) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : r.checks) a.push_back(to_json(c));
  return {{"checks", a}, {"pass", r.all_pass()}};
}

struct CertifyOptions {
  std::size_t max_span = 100;          // largest t - r examined by the rate check
  std::size_t exhaustive_dim = 6;      // exhaustive sampling up to this dimension ...
  std::size_t exhaustive_rounds = 200; // ... and this many rounds
  std::uint64_t random_samples = 10'000;
  std::uint64_t split_samples = 200;
  std::uint64_t seed = 0;
  double tol = 1e-12;
};

namespace detail {

inline std::size_t count_columns_at_least(const Matrix& m, const std::vector<std::size_t>& rows,
                                          const std::vector<std::size_t>& cols, double floor) {
  std::size_t c = 0;
  for (std::size_t j : cols) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i : rows) lo = std::min(lo, m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    if (lo >= floor) ++c;
  }
  return c;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

// Rate bound, column lower bound of Φ(r+ν-1, r), and lower bound on π(r). Rows and columns are
// the chain's agents (all non-faulty).
inline CertificationReport certify_rate_byzantine(const ProductChain& chain, const RateParams& p, std::size_t r,
                                                  std::size_t gamma, const LimitingWeights& pi,
                                                  const CertifyOptions& opt = {}) {
  CertificationReport rep;
  const std::size_t d = chain.dim();
  const auto all = detail::iota_indices(d);
  const std::size_t t_end = std::min(chain.last(), r + opt.max_span);

  CheckResult rate{"byzantine_rate_bound"};
  rate.advisory = !p.tau_exact;
  rate.bound = 0.0;
  if (!p.tau_exact) rate.detail = "tau is a lower bound; check is advisory";
  const bool exhaustive = d <= opt.exhaustive_dim && (t_end - r) <= opt.exhaustive_rounds;
  double worst_excess = -std::numeric_limits<double>::infinity();
  auto check_entry = [&](std::size_t t, const Matrix& phi, std::size_t i, std::size_t j) {
    const double gap = std::abs(phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                pi.pi(static_cast<Eigen::Index>(j)));
    const double bound = p.theta_pow(std::ceil(static_cast<double>(t - r + 1) / p.nu));
    ++rate.samples;
    if (gap > bound + pi.residual + opt.tol) ++rate.violations;
    if (gap - bound > worst_excess) {
      worst_excess = gap - bound;
      rate.observed = gap;
      rate.bound = bound;
    }
  };
  if (exhaustive) {
    Matrix phi = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t t = r; t <= t_end; ++t) {
      phi = chain.at(t).values * phi;
      for (std::size_t i : all)
        for (std::size_t j : all) check_entry(t, phi, i, j);
    }
  } else {
    Rng rng{opt.seed, r, 0xA7};
    std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> picks;
    for (std::uint64_t k = 0; k < opt.random_samples; ++k)
      picks.push_back({r + rng.below(t_end - r + 1), {rng.below(d), rng.below(d)}});
    std::sort(picks.begin(), picks.end());
    std::size_t t = r;
    Matrix phi = chain.at(r).values;
    for (const auto& [tt, ij] : picks) {
      while (t < tt) phi = chain.at(++t).values * phi;
      check_entry(tt, phi, ij.first, ij.second);
    }
  }
  rate.pass = rate.violations == 0;
  rep.checks.push_back(rate);

  const double floor = p.xi_nu() * (1.0 - 1e-9);
  CheckResult lb{"byzantine_column_lower_bound"};
  lb.bound = static_cast<double>(gamma);
  const double span = std::ceil(p.nu);
  if (static_cast<double>(r) + span - 1.0 <= static_cast<double>(chain.last())) {
    const Matrix phi = chain.product(r + static_cast<std::size_t>(span) - 1, r);
    lb.observed = static_cast<double>(detail::count_columns_at_least(phi, all, all, floor));
    lb.samples = 1;
    lb.pass = lb.observed >= lb.bound;
    lb.violations = lb.pass ? 0 : 1;
  } else {
    lb.evaluated = false;
    lb.detail = "chain shorter than r + nu - 1";
  }
  rep.checks.push_back(lb);

  CheckResult lim{"byzantine_limiting_lower_bound"};
  lim.bound = static_cast<double>(gamma);
  std::size_t big = 0;
  for (Eigen::Index j = 0; j < pi.pi.size(); ++j)
    if (pi.pi(j) >= p.xi_nu() - pi.residual) ++big;
  lim.observed = static_cast<double>(big);
  lim.samples = 1;
  lim.pass = big >= gamma;
  lim.violations = lim.pass ? 0 : 1;
  rep.checks.push_back(lim);
  return rep;
}

struct CrashCertifyInput {
  const ProductChain* chain = nullptr;   // P[1..T]
  std::vector<VertexSet> live;           // live[r] = N[r] for r in 1..T+1; index 0 unused
  VertexSet non_faulty;                  // N
  std::size_t gamma = 0;
  std::optional<LimitingWeights> pi;     // π(r) for the lc2 check
};

inline CrashCertifyInput crash_certify_input(const ExecutionTrace& tr, const ProductChain& chain, std::size_t gamma) {
  CrashCertifyInput in;
  in.chain = &chain;
  in.live.resize(tr.last_round() + 2);
  for (std::size_t r = 1; r <= tr.last_round(); ++r) in.live[r] = tr.rounds[r].live_begin;
  in.live[tr.last_round() + 1] = tr.rounds.back().live_end;
  in.non_faulty = tr.non_faulty();
  in.gamma = gamma;
  return in;
}

inline CertificationReport certify_rate_crash(const CrashCertifyInput& in, const RateParams& p,
                                              const CertifyOptions& opt = {}) {
  const ProductChain& chain = *in.chain;
  const std::size_t T = chain.last();
  const std::size_t n = chain.dim();
  const auto live_idx = [&](std::size_t r) {
    std::vector<std::size_t> v(in.live.at(r).begin(), in.live.at(r).end());
    return v;
  };
  CertificationReport rep;
  CheckResult c1{"crash_delta_le_one_minus_eta"}, mono{"crash_monotonicity"}, p3{"crash_zero_columns"};
  c1.bound = 0.0;
  c1.observed = -std::numeric_limits<double>::infinity();
  mono.observed = -std::numeric_limits<double>::infinity();
  p3.bound = 0.0;

  const bool exhaustive = n <= opt.exhaustive_dim && T <= opt.exhaustive_rounds;
  Rng rng{opt.seed, 0xC1};
  for (std::size_t t = 1; t <= T; ++t) {
    if (in.live[t].empty()) continue;
    const auto lt = live_idx(t);
    std::vector<std::size_t> rs;
    if (T <= 50) {
      for (std::size_t r = 1; r < t; ++r) rs.push_back(r);
    } else {
      for (std::size_t r : {std::size_t{1}, (t + 1) / 2, t - 1})
        if (r >= 1 && r < t && (rs.empty() || rs.back() != r)) rs.push_back(r);
    }
    Matrix psi = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t tp = t; tp <= T; ++tp) {
      psi = chain.at(tp).values * psi;
      if (!exhaustive && rng.below(std::max<std::uint64_t>(1, T / 20)) != 0 && tp != T) continue;
      const auto ce = ergodic_coefficients(psi, lt);
      ++c1.samples;
      const double excess = ce.delta - (1.0 - ce.eta);
      c1.observed = std::max(c1.observed, excess);
      if (excess > opt.tol) ++c1.violations;

      for (std::size_t r : rs) {
        const auto ceR = ergodic_coefficients(psi, live_idx(r));
        ++mono.samples;
        const double ex = std::max(ce.delta - ceR.delta, ceR.eta - ce.eta);
        mono.observed = std::max(mono.observed, ex);
        if (ex > opt.tol) ++mono.violations;
      }

      for (std::size_t i : lt)
        for (std::size_t j = 0; j < n; ++j) {
          if (contains(in.live[t], j)) continue;
          ++p3.samples;
          const double v = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          p3.observed = std::max(p3.observed, std::abs(v));
          if (v != 0.0) ++p3.violations;
        }
    }
  }
  c1.pass = c1.violations == 0;
  mono.pass = mono.violations == 0;
  p3.pass = p3.violations == 0;
  if (c1.samples == 0) c1.observed = 0.0;
  if (mono.samples == 0) mono.observed = 0.0;
  rep.checks.push_back(c1);
  rep.checks.push_back(mono);
  rep.checks.push_back(p3);

  CheckResult c2{"crash_split_contraction"};
  c2.observed = -std::numeric_limits<double>::infinity();
  if (T >= 2) {
    for (std::uint64_t k = 0; k < opt.split_samples; ++k) {
      std::size_t a = 1 + rng.below(T), b = 1 + rng.below(T), c = 1 + rng.below(T);
      std::size_t lo3[3] = {a, b, c};
      std::sort(lo3, lo3 + 3);
      std::size_t t0 = lo3[0], t1 = lo3[1], t2 = lo3[2];
      if (t1 == t2) {
        if (t1 == 1) continue;
        --t1;
        if (t0 > t1) t0 = t1;
      }
      if (in.live[t1 + 1].empty()) continue;
      const Matrix P = chain.product(t2, t1 + 1);
      const Matrix G = chain.product(t1, t0);
      const auto li = live_idx(t1 + 1);
      const double lhs = ergodic_coefficients(Matrix(P * G), li).delta;
      const double rhs = (1.0 - ergodic_coefficients(P, li).eta) * ergodic_coefficients(G, li).delta;
      ++c2.samples;
      c2.observed = std::max(c2.observed, lhs - rhs);
      if (lhs > rhs + opt.tol) ++c2.violations;
    }
  }
  if (c2.samples == 0) c2.observed = 0.0;
  c2.pass = c2.violations == 0;
  rep.checks.push_back(c2);

  CheckResult blk{"crash_block_bound"};
  blk.observed = -std::numeric_limits<double>::infinity();
  const double zn = p.zeta_n();
  for (std::size_t k = std::max<std::size_t>(p.f, 1); k * n <= T; ++k) {
    const std::size_t r = (k - 1) * n + 1;
    if (in.live[r].empty()) continue;
    const double delta = ergodic_coefficients(chain.product(k * n, 1), live_idx(r)).delta;
    const double bound = std::pow(1.0 - zn, static_cast<double>(k - p.f));
    ++blk.samples;
    if (delta - bound > blk.observed) {
      blk.observed = delta - bound;
      blk.bound = bound;
    }
    if (delta > bound + opt.tol) ++blk.violations;
  }
  if (blk.samples == 0) {
    blk.observed = 0.0;
    blk.evaluated = false;
    blk.detail = "fewer than max(f,1) full blocks";
  } else {
    blk.observed += blk.bound;
  }
  blk.pass = blk.violations == 0;
  rep.checks.push_back(blk);

  std::vector<std::size_t> N(in.non_faulty.begin(), in.non_faulty.end());
  CheckResult lc1{"crash_column_lower_bound"};
  lc1.bound = static_cast<double>(in.gamma);
  lc1.observed = std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r + n - 1 <= T; ++r) {
    const Matrix psi = chain.product(r + n - 1, r);
    const double c = static_cast<double>(detail::count_columns_at_least(psi, N, N, zn * (1.0 - 1e-9)));
    ++lc1.samples;
    lc1.observed = std::min(lc1.observed, c);
    if (c < lc1.bound) ++lc1.violations;
  }
  if (lc1.samples == 0) {
    lc1.observed = 0.0;
    lc1.evaluated = false;
    lc1.detail = "chain shorter than n";
  }
  lc1.pass = lc1.violations == 0;
  rep.checks.push_back(lc1);

  CheckResult lc2{"crash_limiting_lower_bound"};
  lc2.bound = static_cast<double>(in.gamma);
  if (in.pi) {
    std::size_t big = 0;
    for (std::size_t j : N)
      if (in.pi->pi(static_cast<Eigen::Index>(j)) >= zn - in.pi->residual) ++big;
    lc2.observed = static_cast<double>(big);
    lc2.samples = 1;
    lc2.pass = big >= in.gamma;
    lc2.violations = lc2.pass ? 0 : 1;
  } else {
    lc2.evaluated = false;
    lc2.detail = "no limiting weights supplied";
  }
  rep.checks.push_back(lc2);
  return rep;
}

}  // namespace ftopt
