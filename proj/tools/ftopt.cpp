// ftopt command line: check, run, analyze, oracle, sweep.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ftopt/harness/commands.hpp"

namespace fs = std::filesystem;
using namespace ftopt;

namespace {

constexpr int kAssertFailed = 1;
constexpr int kError = 2;

VertexSet parse_agents(const std::string& list) {
  VertexSet out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto v = std::stoull(tok);
    if (v == 0) throw InvalidParams("agents are numbered from 1");
    out.push_back(static_cast<Vertex>(v - 1));
  }
  return normalized(out);
}

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-tolerant distributed optimization simulator"};
  app.require_subcommand(1);

  std::uint64_t budget = kDefaultEnumerationCap;
  bool assert_mode = false;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto common = [&](CLI::App* sub, const std::string& out_help) {
    sub->add_option("--budget", budget, "Enumeration cap for reduced-graph families");
    sub->add_flag("--assert", assert_mode, "Exit nonzero when a check fails");
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--out", out, out_help);
  };

  // check
  auto* check = app.add_subcommand("check", "Test a graph against the fault-tolerance assumption");
  std::string graph_path, mode_name = "byzantine", faulty_list;
  std::size_t f = 0;
  check->add_option("graph", graph_path, "Edge-list file")->required()->check(CLI::ExistingFile);
  check->add_option("-f,--faults", f, "Fault budget f")->required();
  check->add_option("--mode", mode_name, "byzantine or crash");
  check->add_option("--faulty", faulty_list, "Comma-separated faulty agents (1-based) for tau and guarantees");
  common(check, "Output JSON file (default stdout)");

  // run
  auto* runc = app.add_subcommand("run", "Simulate a scenario and write trace and summary");
  std::string scenario_path;
  runc->add_option("scenario", scenario_path, "Scenario TOML file")->required()->check(CLI::ExistingFile);
  common(runc, "Output directory");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Rebuild matrices from a trace and certify the rate bounds");
  std::string trace_path, matrix_dir;
  analyze->add_option("trace", trace_path, "Trace CSV written by run")->required();
  analyze->add_option("--dump-matrices", matrix_dir, "Directory for the per-round matrix CSV");
  common(analyze, "Output JSON file (default stdout)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Compute the optimum interval for a scenario");
  std::optional<double> beta;
  std::optional<std::size_t> gamma;
  std::string oracle_mode;
  oracle->add_option("scenario", scenario_path, "Scenario TOML file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--beta", beta, "Override beta");
  oracle->add_option("--gamma", gamma, "Override gamma");
  oracle->add_option("--mode", oracle_mode, "Override family mode (byzantine or crash)");
  common(oracle, "Output JSON file (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run every algorithm/seed cell of a scenario's [sweep] grid");
  std::size_t threads = 0;
  sweep->add_option("scenario", scenario_path, "Scenario TOML file with a [sweep] table")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  common(sweep, "Output directory");

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  try {
    if (*check) {
      const Digraph g = harness::load_edge_list(graph_path);
      const auto j = harness::cmd_check(g, f, parse_fault_model(mode_name), parse_agents(faulty_list), budget);
      emit(j, out);
      if (assert_mode && !j.at("holds").get<bool>()) status = kAssertFailed;
    } else if (*runc) {
      auto sf = harness::load_scenario(scenario_path);
      if (seed) sf.scenario.seed = *seed;
      const auto o = harness::cmd_run(sf.scenario, out.empty() ? fs::path(".") : fs::path(out), budget);
      std::cout << o.summary_json.dump(2) << '\n';
      const auto& s = o.summary_json;
      if (assert_mode && (!s.at("audit").at("pass").get<bool>() ||
                          (s.at("membership").is_boolean() && !s.at("membership").get<bool>())))
        status = kAssertFailed;
    } else if (*analyze) {
      harness::AnalyzeOptions opt;
      opt.cap = budget;
      opt.seed = seed.value_or(0);
      opt.dump_matrices = !matrix_dir.empty();
      opt.matrix_dir = matrix_dir;
      const auto j = harness::cmd_analyze(harness::read_trace(trace_path), opt);
      emit(j, out);
      if (assert_mode && !j.at("pass").get<bool>()) status = kAssertFailed;
    } else if (*oracle) {
      auto sf = harness::load_scenario(scenario_path);
      harness::OracleOverrides o{beta, gamma, std::nullopt};
      if (!oracle_mode.empty()) o.mode = parse_fault_model(oracle_mode);
      emit(harness::cmd_oracle(sf.scenario, o, budget), out);
    } else if (*sweep) {
      auto sf = harness::load_scenario(scenario_path);
      if (seed && sf.sweep) sf.sweep->seeds = {*seed};
      const auto agg = harness::cmd_sweep(sf, out.empty() ? fs::path(".") : fs::path(out), threads, budget);
      std::cout << agg.dump(2) << '\n';
      if (assert_mode && agg.at("failed").get<std::size_t>() != 0) status = kAssertFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  std::cerr << "elapsed " << dt.count() << " s\n";
  return status;
}
