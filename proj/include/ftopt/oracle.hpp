#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftopt/engine.hpp"
#include "ftopt/errors.hpp"
#include "ftopt/netgraph.hpp"
#include "ftopt/objective.hpp"
#include "ftopt/rng.hpp"

namespace ftopt {

struct ValidFamilyParams {
  double beta = 0.0;
  std::size_t gamma = 0;
  FaultModel mode = FaultModel::byzantine;
};

struct OptimumInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool exact = true;

  double distance(double x) const { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); }
  friend bool operator==(const OptimumInterval&, const OptimumInterval&) = default;
};

inline bool membership(double x, const OptimumInterval& y, double tol) { return x >= y.lo - tol && x <= y.hi + tol; }

namespace detail {

inline void check_family(const ValidFamilyParams& p, std::size_t n_nonfaulty) {
  if (n_nonfaulty == 0) throw InvalidParams("N is empty");
  if (!(p.beta >= 0.0)) throw InvalidParams("beta must be nonnegative");
  if (p.beta * static_cast<double>(p.gamma) > 1.0 + 1e-12) throw InvalidParams("beta * gamma exceeds 1");
  if (p.gamma > n_nonfaulty) throw InvalidParams("gamma exceeds |N|");
  if (p.beta > 1.0 / static_cast<double>(n_nonfaulty) + 1e-12) throw InvalidParams("beta exceeds 1/|N|");
}

}  // namespace detail

// Exact X(β,γ) (and Y when a constraint is given) for unit-curvature quadratics. The extreme
// points of the valid polytope put β on γ agents of N and the rest on one admissible agent.
inline OptimumInterval optimum_interval(std::span<const QuadraticCost> costs, const VertexSet& N,
                                        const ValidFamilyParams& p,
                                        const std::optional<ConstraintInterval>& constraint = std::nullopt) {
  for (const auto& h : costs)
    if (h.curvature != 1.0) throw CurvatureUnsupported("exact optimum interval needs unit curvature");
  detail::check_family(p, N.size());
  for (Vertex v : N)
    if (v >= costs.size()) throw InvalidParams("agent outside the cost family");

  std::vector<double> cn;
  for (Vertex v : N) cn.push_back(costs[v].center);
  std::sort(cn.begin(), cn.end());
  double admissible_min = cn.front(), admissible_max = cn.back();
  if (p.mode == FaultModel::crash)
    for (const auto& h : costs) {
      admissible_min = std::min(admissible_min, h.center);
      admissible_max = std::max(admissible_max, h.center);
    }

  double low_sum = 0.0, high_sum = 0.0;
  for (std::size_t k = 0; k < p.gamma; ++k) {
    low_sum += cn[k];
    high_sum += cn[cn.size() - 1 - k];
  }
  const double rest = 1.0 - static_cast<double>(p.gamma) * p.beta;
  OptimumInterval y;
  y.lo = p.beta * low_sum + rest * admissible_min;
  y.hi = p.beta * high_sum + rest * admissible_max;
  if (constraint) {
    if (y.hi < constraint->lo()) {
      y.lo = y.hi = constraint->lo();
    } else if (y.lo > constraint->hi()) {
      y.lo = y.hi = constraint->hi();
    } else {
      y.lo = std::max(y.lo, constraint->lo());
      y.hi = std::min(y.hi, constraint->hi());
    }
  }
  return y;
}

inline bool is_valid_weights(std::span<const double> alpha, const ValidFamilyParams& p, const VertexSet& N,
                             double tol = 1e-9) {
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] >= 0.0)) return false;
    if (p.mode == FaultModel::byzantine && !contains(N, i) && alpha[i] != 0.0) return false;
    sum += alpha[i];
  }
  if (std::abs(sum - 1.0) > tol) return false;
  std::size_t heavy = 0;
  for (Vertex v : N)
    if (v < alpha.size() && alpha[v] >= p.beta - 1e-12) ++heavy;
  return heavy >= p.gamma;
}

// Random members of the valid family: β on a random γ-subset of N plus an exponential-weight
// split of the remainder over the admissible agents.
inline std::vector<std::vector<double>> sample_valid_weights(const ValidFamilyParams& p, const VertexSet& N,
                                                             std::size_t n, std::size_t count, std::uint64_t seed) {
  detail::check_family(p, N.size());
  const VertexSet support = p.mode == FaultModel::byzantine ? N : all_vertices(n);
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < count; ++c) {
    Rng rng{seed, c, 0x5A};
    std::vector<double> alpha(n, 0.0);
    VertexSet pool = N;
    for (std::size_t k = 0; k < p.gamma; ++k) {
      const auto pick = static_cast<std::size_t>(rng.below(pool.size()));
      alpha[pool[pick]] += p.beta;
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    const double rest = std::max(0.0, 1.0 - static_cast<double>(p.gamma) * p.beta);
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      w.push_back(-std::log1p(-rng.uniform()));
      total += w.back();
    }
    for (std::size_t k = 0; k < support.size(); ++k) alpha[support[k]] += rest * w[k] / total;
    out.push_back(std::move(alpha));
  }
  return out;
}

// ---- guarantee parameters ------------------------------------------------------------------

struct GuaranteeReport {
  Algorithm algorithm = Algorithm::A1;
  ValidFamilyParams params;
  double log_beta = 0.0;  // β can underflow for A1/A5; the log is kept exactly
  std::string beta_formula;
  bool gamma_requirement_met = true;
  std::string gamma_requirement;
  std::optional<AssumptionReport> assumption;
  bool infeasible_graph = false;
  std::optional<TauValue> tau;
};

inline GuaranteeReport guarantee_params(const Digraph& g, const VertexSet& F_in, std::size_t f, Algorithm a,
                                        std::uint64_t cap = kDefaultEnumerationCap) {
  const VertexSet F = normalized(F_in);
  if (F.size() > f) throw PreconditionError("|F| exceeds the fault budget");
  const std::size_t n = g.size();
  const VertexSet N = set_difference(all_vertices(n), F);
  if (N.empty()) throw PreconditionError("no non-faulty agent");
  const auto phi_i = [&](Vertex i) { return set_intersection(g.in_neighbors(i), F).size(); };
  const auto dn = static_cast<double>(N.size());

  GuaranteeReport rep;
  rep.algorithm = a;
  rep.params.mode = fault_model(a);
  switch (a) {
    case Algorithm::A1: {
      rep.assumption = check_assumption_byzantine(g, f, cap);
      const std::size_t dmax = g.max_in_degree();
      if (dmax + 1 <= 2 * f) throw InvalidParams("in-degrees too small for the fault budget");
      const double xi = 1.0 / (2.0 * static_cast<double>(dmax + 1 - 2 * f));
      rep.tau = reduced_byzantine_tau(g, F, f, cap);
      const double nu = static_cast<double>(rep.tau->tau) * static_cast<double>(n - F.size());
      rep.log_beta = nu * std::log(xi);
      rep.params.beta = std::exp(rep.log_beta);
      rep.params.gamma = min_source_size_byzantine(g, F, f, cap);
      rep.beta_formula = "(1/(2(d_max+1-2f)))^(tau_b (n-phi))";
      rep.gamma_requirement = "gamma >= f+1";
      rep.gamma_requirement_met = rep.params.gamma >= f + 1;
      break;
    }
    case Algorithm::A2: {
      rep.assumption = check_assumption_byzantine(g, f, cap);
      std::size_t worst = 0, least = std::numeric_limits<std::size_t>::max();
      for (Vertex i : N) {
        const std::size_t base = g.in_degree(i) + 1;
        const std::size_t cut = phi_i(i) + f;
        const std::size_t k = base > cut ? base - cut : 0;
        worst = std::max(worst, k);
        least = std::min(least, k);
      }
      if (worst == 0) throw InvalidParams("no agent keeps a gradient after trimming");
      rep.params.beta = std::min(1.0 / (2.0 * static_cast<double>(worst)), 1.0 / dn);
      rep.params.gamma = least;
      rep.log_beta = std::log(rep.params.beta);
      rep.beta_formula = "min(1/(2 max_{i in N}(d_i+1-phi_i-f)), 1/|N|)";
      rep.gamma_requirement = "gamma = min_{i in N}(d_i+1-phi_i-f)";
      break;
    }
    case Algorithm::A5: {
      rep.assumption = check_assumption_crash(g, f, cap);
      rep.log_beta = -static_cast<double>(n) * std::log(static_cast<double>(g.max_in_degree() + 1));
      rep.params.beta = std::exp(rep.log_beta);
      rep.params.gamma = rep.assumption->holds ? rep.assumption->gamma : 0;
      rep.beta_formula = "1/(d_max+1)^n";
      rep.gamma_requirement = "gamma >= 1";
      rep.gamma_requirement_met = rep.params.gamma >= 1;
      break;
    }
    case Algorithm::A6: {
      rep.assumption = check_assumption_crash(g, f, cap);
      std::size_t worst = 0, least = std::numeric_limits<std::size_t>::max();
      for (Vertex i = 0; i < n; ++i) {
        const std::size_t k = g.in_degree(i) + 1 - phi_i(i);
        worst = std::max(worst, k);
        least = std::min(least, k);
      }
      rep.params.beta = std::min(1.0 / static_cast<double>(worst), 1.0 / dn);
      rep.params.gamma = least;
      rep.log_beta = std::log(rep.params.beta);
      rep.beta_formula = "min(1/max_{i in V}(d_i+1-phi_i), 1/|N|)";
      rep.gamma_requirement = "gamma = min_{i in V}(d_i+1-phi_i)";
      break;
    }
    default:
      throw InvalidParams(to_string(a) + " is a consensus algorithm with no optimization guarantee");
  }
  rep.infeasible_graph = !rep.assumption->holds;
  return rep;
}

inline bool has_guarantee(Algorithm a) { return a != Algorithm::A3 && a != Algorithm::A4; }

// ---- JSON ------------------------------------------------------------------------------------

inline nlohmann::json to_json(const OptimumInterval& y, const ValidFamilyParams& p) {
  return {{"lo", y.lo}, {"hi", y.hi}, {"mode", to_string(p.mode)}, {"beta", p.beta}, {"gamma", p.gamma},
          {"exact", y.exact}};
}

inline nlohmann::json to_json(const GuaranteeReport& r) {
  nlohmann::json j;
  j["algorithm"] = to_string(r.algorithm);
  j["mode"] = to_string(r.params.mode);
  j["beta"] = r.params.beta;
  j["log_beta"] = r.log_beta;
  j["gamma"] = r.params.gamma;
  j["beta_formula"] = r.beta_formula;
  j["gamma_requirement"] = r.gamma_requirement;
  j["gamma_requirement_met"] = r.gamma_requirement_met;
  j["infeasible_graph"] = r.infeasible_graph;
  if (r.tau) {
    j["tau"] = r.tau->tau;
    j["tau_exact"] = r.tau->exact;
  }
  return j;
}

}  // namespace ftopt
