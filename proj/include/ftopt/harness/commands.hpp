#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftopt/engine.hpp"
#include "ftopt/ergodic.hpp"
#include "ftopt/errors.hpp"
#include "ftopt/harness/scenario_io.hpp"
#include "ftopt/harness/trace_io.hpp"
#include "ftopt/netgraph.hpp"
#include "ftopt/oracle.hpp"

namespace ftopt::harness {

inline constexpr double kMembershipTolerance = 1e-3;

// ---- summary -----------------------------------------------------------------------

inline nlohmann::json audit_to_json(const TraceAudit& a) {
  return {{"steps_checked", a.steps_checked},
          {"retained_size_violations", a.retained_size_violations},
          {"projection_bound_violations", a.projection_bound_violations},
          {"max_projection_ratio", a.max_projection_ratio},
          {"feasibility_violations", a.feasibility_violations},
          {"validity_violations", a.validity_violations},
          {"silence_violations", a.silence_violations},
          {"pass", a.ok()}};
}

// Everything here is a function of the trace, so re-reading a trace reproduces it exactly.
inline nlohmann::json summarize(const ExecutionTrace& tr, std::uint64_t cap = kDefaultEnumerationCap,
                                double tol = kMembershipTolerance) {
  const Scenario& s = tr.scenario;
  const VertexSet N = s.non_faulty();
  const auto& xT = tr.rounds.back().estimates;
  nlohmann::json j;
  j["scenario"] = s.name;
  j["algorithm"] = to_string(s.algorithm);
  j["mode"] = to_string(fault_model(s.algorithm));
  j["seed"] = s.seed;
  j["rounds"] = tr.last_round();
  j["n"] = s.size();
  j["f"] = s.f;
  j["faulty"] = vertices_to_json(s.faulty());
  j["final_spread"] = spread(xT, N);
  j["consensus_value"] = mean(xT, N);

  j["oracle"] = nullptr;
  j["membership"] = nullptr;
  j["distance"] = nullptr;
  j["guarantee"] = nullptr;
  if (has_guarantee(s.algorithm)) {
    try {
      const auto g = guarantee_params(s.graph, s.faulty(), s.f, s.algorithm, cap);
      j["guarantee"] = to_json(g);
      const auto y = optimum_interval(s.costs, N, g.params, s.constraint);
      j["oracle"] = to_json(y, g.params);
      const double x = mean(xT, N);
      j["membership"] = membership(x, y, tol);
      j["distance"] = y.distance(x);
    } catch (const Error& e) {
      j["oracle_error"] = e.what();
    }
  }
  const TraceAudit audit = audit_trace(tr);
  j["audit"] = audit_to_json(audit);
  const std::size_t checks[] = {audit.retained_size_violations, audit.projection_bound_violations,
                                audit.feasibility_violations, audit.validity_violations, audit.silence_violations};
  const auto failed = static_cast<std::size_t>(std::count_if(std::begin(checks), std::end(checks), [](auto v) { return v != 0; }));
  j["tallies"] = {{"passed", std::size(checks) - failed}, {"failed", failed}};
  return j;
}

// ---- check -----------------------------------------------------------------------------

inline nlohmann::json cmd_check(const Digraph& g, std::size_t f, FaultModel mode, const VertexSet& F = {},
                                std::uint64_t cap = kDefaultEnumerationCap) {
  const AssumptionReport rep =
      mode == FaultModel::byzantine ? check_assumption_byzantine(g, f, cap) : check_assumption_crash(g, f, cap);
  TauValue tau;
  if (mode == FaultModel::byzantine) {
    tau = reduced_byzantine_tau(g, F, f, cap);
  } else {
    tau = {count_reduced_crash(g.size(), f), true};
  }
  nlohmann::json j = to_json(rep, tau);
  j["n"] = g.size();
  j["f"] = f;
  j["faulty"] = vertices_to_json(normalized(F));
  nlohmann::json gs = nlohmann::json::array();
  for (Algorithm a : kAllAlgorithms) {
    if (fault_model(a) != mode || !has_guarantee(a)) continue;
    try {
      gs.push_back(to_json(guarantee_params(g, F, f, a, cap)));
    } catch (const Error& e) {
      gs.push_back({{"algorithm", to_string(a)}, {"error", e.what()}});
    }
  }
  j["guarantees"] = gs;
  return j;
}

// ---- run ------------------------------------------------------------------------------------

struct RunOutputs {
  std::filesystem::path trace_csv;
  std::filesystem::path trace_json;
  std::filesystem::path summary;
  nlohmann::json summary_json;
};

inline RunOutputs cmd_run(const Scenario& s, const std::filesystem::path& out_dir,
                          std::uint64_t cap = kDefaultEnumerationCap) {
  std::filesystem::create_directories(out_dir);
  const ExecutionTrace tr = run(s);
  RunOutputs o;
  o.trace_csv = out_dir / (s.name + ".trace.csv");
  o.trace_json = sidecar_path(o.trace_csv);
  o.summary = out_dir / (s.name + ".summary.json");
  write_trace(tr, o.trace_csv);
  o.summary_json = summarize(tr, cap);
  std::ofstream out(o.summary, std::ios::binary);
  out << o.summary_json.dump(2) << '\n';
  return o;
}

// ---- analyze ----------------------------------------------------------------------------------

struct AnalyzeOptions {
  std::uint64_t cap = kDefaultEnumerationCap;
  std::size_t max_span = 100;
  double pi_threshold = 1e-6;
  std::uint64_t seed = 0;
  bool dump_matrices = false;
  std::filesystem::path matrix_dir;
};

namespace detail {

inline CheckResult converged_check(const std::string& name, const std::optional<LimitingWeights>& pi,
                                   double residual, double threshold) {
  CheckResult c{name};
  c.bound = threshold;
  c.observed = pi ? pi->residual : residual;
  c.samples = 1;
  c.pass = pi.has_value();
  c.violations = c.pass ? 0 : 1;
  return c;
}

inline void dump_chain(const ProductChain& chain, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "matrices.csv", std::ios::binary);
  for (std::size_t t = chain.first(); t <= chain.last(); ++t) write_matrix_csv(out, chain.at(t));
}

}  // namespace detail

inline nlohmann::json cmd_analyze(const ExecutionTrace& tr, const AnalyzeOptions& opt = {}) {
  const Scenario& s = tr.scenario;
  if (tr.last_round() == 0) throw TraceMismatch("trace has no executed rounds");
  nlohmann::json j;
  j["scenario"] = s.name;
  j["algorithm"] = to_string(s.algorithm);
  j["mode"] = to_string(fault_model(s.algorithm));
  CertificationReport rep;
  CertifyOptions co;
  co.max_span = opt.max_span;
  co.seed = opt.seed;

  if (fault_model(s.algorithm) == FaultModel::byzantine) {
    const VertexSet F = s.faulty();
    const auto bc = byzantine_chain(tr);
    if (opt.dump_matrices) detail::dump_chain(bc.chain, opt.matrix_dir);
    const RateParams p = byzantine_rate_params(s.graph, F, s.f, opt.cap);
    const std::size_t gamma = min_source_size_byzantine(s.graph, F, s.f, opt.cap);

    CheckResult resid{"byzantine_reconstruction_residual"};
    resid.bound = 1e-9;
    resid.observed = bc.max_residual;
    resid.samples = tr.last_round();
    resid.pass = bc.max_residual <= 1e-9;
    resid.violations = resid.pass ? 0 : 1;
    rep.checks.push_back(resid);

    CheckResult cert{"byzantine_reduced_graph_certificate"};
    cert.bound = p.xi;
    for (std::size_t t = bc.chain.first(); t <= bc.chain.last(); ++t) {
      ++cert.samples;
      if (!certify_reduced_graph(bc.chain.at(t), s.graph, F, s.f, p.xi)) ++cert.violations;
    }
    cert.observed = static_cast<double>(cert.violations);
    cert.pass = cert.violations == 0;
    rep.checks.push_back(cert);

    const std::size_t last = bc.chain.last();
    const std::vector<std::size_t> rs = {0, last / 4, last / 2};
    const auto rows = ftopt::detail::iota_indices(bc.chain.dim());
    for (std::size_t r : rs) {
      std::optional<LimitingWeights> pi;
      double resid_nc = 0.0;
      try {
        pi = limiting_weights(bc.chain, r, last, rows, opt.pi_threshold);
      } catch (const NotConverged& e) {
        resid_nc = e.residual();
      }
      rep.checks.push_back(
          detail::converged_check("limiting_weights_converged_r" + std::to_string(r), pi, resid_nc, opt.pi_threshold));
      if (!pi) continue;
      auto sub = certify_rate_byzantine(bc.chain, p, r, gamma, *pi, co);
      for (auto& c : sub.checks) {
        c.name += "_r" + std::to_string(r);
        rep.checks.push_back(std::move(c));
      }
    }
    j["params"] = {{"xi", p.xi}, {"tau", p.tau}, {"tau_exact", p.tau_exact}, {"nu", p.nu},
                   {"log_xi_nu", p.log_xi_nu}, {"gamma", gamma}};
    j["reconstruction"] = {{"max_residual", bc.max_residual}, {"matrices", bc.chain.last() + 1}};
  } else {
    const ProductChain chain = crash_chain(tr);
    if (opt.dump_matrices) detail::dump_chain(chain, opt.matrix_dir);
    const RateParams p = crash_rate_params(s.graph, s.f);
    const AssumptionReport ar = check_assumption_crash(s.graph, s.f, opt.cap);
    const std::size_t gamma = ar.holds ? ar.gamma : 0;

    CheckResult stoch{"crash_row_stochastic"};
    stoch.bound = 1e-12;
    stoch.observed = 0.0;
    for (std::size_t t = chain.first(); t <= chain.last(); ++t) {
      ++stoch.samples;
      const double e = max_row_sum_error(chain.at(t).values);
      stoch.observed = std::max(stoch.observed, e);
      if (e > 1e-12 || (chain.at(t).values.array() < 0.0).any()) ++stoch.violations;
    }
    stoch.pass = stoch.violations == 0;
    rep.checks.push_back(stoch);
    if (s.algorithm == Algorithm::A4) {
      CheckResult ds{"crash_doubly_stochastic"};
      ds.bound = 1e-12;
      for (std::size_t t = chain.first(); t <= chain.last(); ++t) {
        ++ds.samples;
        const double e = max_col_sum_error(chain.at(t).values);
        ds.observed = std::max(ds.observed, e);
        if (e > 1e-12) ++ds.violations;
      }
      ds.pass = ds.violations == 0;
      rep.checks.push_back(ds);
    }

    auto in = crash_certify_input(tr, chain, gamma);
    const VertexSet N = tr.non_faulty();
    const std::vector<std::size_t> rows(N.begin(), N.end());
    double resid_nc = 0.0;
    try {
      in.pi = limiting_weights(chain, 1, chain.last(), rows, opt.pi_threshold);
    } catch (const NotConverged& e) {
      resid_nc = e.residual();
    }
    rep.checks.push_back(detail::converged_check("limiting_weights_converged_r1", in.pi, resid_nc, opt.pi_threshold));
    auto sub = certify_rate_crash(in, p, co);
    for (auto& c : sub.checks) rep.checks.push_back(std::move(c));
    j["params"] = {{"zeta", p.zeta}, {"zeta_n", p.zeta_n()}, {"gamma", gamma}, {"assumption_holds", ar.holds}};
  }
  const auto cj = to_json(rep);
  j["checks"] = cj["checks"];
  j["pass"] = cj["pass"];
  return j;
}

// ---- oracle -------------------------------------------------------------------------------------

struct OracleOverrides {
  std::optional<double> beta;
  std::optional<std::size_t> gamma;
  std::optional<FaultModel> mode;
};

inline nlohmann::json cmd_oracle(const Scenario& s, const OracleOverrides& o = {},
                                 std::uint64_t cap = kDefaultEnumerationCap) {
  ValidFamilyParams p;
  nlohmann::json j;
  if (o.beta && o.gamma) {
    p.beta = *o.beta;
    p.gamma = *o.gamma;
    p.mode = o.mode.value_or(fault_model(s.algorithm));
  } else {
    const auto g = guarantee_params(s.graph, s.faulty(), s.f, s.algorithm, cap);
    p = g.params;
    if (o.beta) p.beta = *o.beta;
    if (o.gamma) p.gamma = *o.gamma;
    if (o.mode) p.mode = *o.mode;
    j["guarantee"] = to_json(g);
  }
  const auto y = optimum_interval(s.costs, s.non_faulty(), p, s.constraint);
  j.update(to_json(y, p));
  return j;
}

// ---- sweep ------------------------------------------------------------------------------------------

struct SweepRow {
  Algorithm algorithm = Algorithm::A1;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  nlohmann::json summary;
};

inline std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec, std::size_t threads = 0,
                                       std::uint64_t cap = kDefaultEnumerationCap) {
  std::vector<SweepRow> rows;
  for (Algorithm a : spec.algorithms)
    for (std::uint64_t seed : spec.seeds) rows.push_back({a, seed, std::nullopt, {}});
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      SweepRow& row = rows[k];
      try {
        Scenario s = base;
        s.algorithm = row.algorithm;
        s.seed = row.seed;
        row.summary = summarize(run(s), cap);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string json_cell(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return "";
  const auto& v = j.at(key);
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace detail

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "algorithm,seed,status,error,final_spread,consensus_value,oracle_lo,oracle_hi,membership,distance\n";
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.seed << ',' << (r.error ? "error" : "ok") << ','
        << (r.error ? detail::csv_escape(*r.error) : "") << ',';
    const auto& s = r.summary;
    const nlohmann::json oracle = s.is_object() && s.contains("oracle") ? s.at("oracle") : nlohmann::json();
    out << detail::json_cell(s, "final_spread") << ',' << detail::json_cell(s, "consensus_value") << ','
        << detail::json_cell(oracle, "lo") << ',' << detail::json_cell(oracle, "hi") << ','
        << detail::json_cell(s, "membership") << ',' << detail::json_cell(s, "distance") << '\n';
  }
  return out.str();
}

inline nlohmann::json sweep_aggregate(const std::vector<SweepRow>& rows) {
  std::size_t ok = 0, judged = 0, member = 0;
  for (const auto& r : rows) {
    if (r.error) continue;
    ++ok;
    if (r.summary.contains("membership") && r.summary.at("membership").is_boolean()) {
      ++judged;
      if (r.summary.at("membership").get<bool>()) ++member;
    }
  }
  nlohmann::json j{{"cells", rows.size()}, {"succeeded", ok}, {"failed", rows.size() - ok}, {"judged", judged}};
  j["membership_rate"] = judged ? nlohmann::json(static_cast<double>(member) / static_cast<double>(judged)) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json cmd_sweep(const ScenarioFile& sf, const std::filesystem::path& out_dir, std::size_t threads = 0,
                                std::uint64_t cap = kDefaultEnumerationCap) {
  if (!sf.sweep) throw ParseError("scenario has no [sweep] section", 0);
  const auto rows = run_sweep(sf.scenario, *sf.sweep, threads, cap);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / (sf.scenario.name + ".sweep.csv"), std::ios::binary);
    out << sweep_csv(rows);
  }
  const auto agg = sweep_aggregate(rows);
  std::ofstream out(out_dir / (sf.scenario.name + ".sweep.json"), std::ios::binary);
  out << agg.dump(2) << '\n';
  return agg;
}

}  // namespace ftopt::harness
