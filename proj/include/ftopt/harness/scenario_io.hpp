#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ftopt/engine.hpp"
#include "ftopt/errors.hpp"
#include "ftopt/netgraph.hpp"
#include "ftopt/objective.hpp"

namespace ftopt::harness {

struct SweepSpec {
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds;
};

struct ScenarioFile {
  Scenario scenario;
  std::optional<SweepSpec> sweep;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot open " + p.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Digraph load_edge_list(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open graph file " + p.string(), 0);
  return parse_edge_list(in);
}

namespace detail {

inline std::size_t line_of(const toml::node* n) { return n ? static_cast<std::size_t>(n->source().begin.line) : 0; }

[[noreturn]] inline void fail(const std::string& what, const toml::node* at) { throw ParseError(what, line_of(at)); }

inline const toml::table& table_at(const toml::table& root, std::string_view key) {
  const toml::node* n = root.get(key);
  if (!n) throw ParseError("missing section [" + std::string(key) + "]", 0);
  if (!n->is_table()) fail("[" + std::string(key) + "] must be a table", n);
  return *n->as_table();
}

inline double number(const toml::node* n, const std::string& what) {
  if (!n) throw ParseError("missing " + what, 0);
  if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
  fail(what + " must be a number", n);
}

inline std::int64_t integer(const toml::node* n, const std::string& what) {
  if (!n) throw ParseError("missing " + what, 0);
  if (n->is_integer()) return *n->value<std::int64_t>();
  fail(what + " must be an integer", n);
}

inline std::size_t count(const toml::node* n, const std::string& what) {
  const auto v = integer(n, what);
  if (v < 0) fail(what + " must be nonnegative", n);
  return static_cast<std::size_t>(v);
}

inline Vertex agent(const toml::node* n, std::size_t size, const std::string& what) {
  const auto v = integer(n, what);
  if (v < 1 || static_cast<std::size_t>(v) > size) fail(what + " out of range 1.." + std::to_string(size), n);
  return static_cast<Vertex>(v - 1);
}

inline std::string text(const toml::node* n, const std::string& what) {
  if (!n) throw ParseError("missing " + what, 0);
  if (auto v = n->value<std::string>(); v && n->is_string()) return *v;
  fail(what + " must be a string", n);
}

inline const toml::array& array(const toml::node* n, const std::string& what) {
  if (!n) throw ParseError("missing " + what, 0);
  if (!n->is_array()) fail(what + " must be an array", n);
  return *n->as_array();
}

inline std::vector<double> numbers(const toml::node* n, const std::string& what) {
  std::vector<double> out;
  for (const auto& e : array(n, what)) out.push_back(number(&e, what + " entry"));
  return out;
}

inline VertexSet agents(const toml::node* n, std::size_t size, const std::string& what) {
  VertexSet out;
  for (const auto& e : array(n, what)) out.push_back(agent(&e, size, what + " entry"));
  return normalized(out);
}

inline Digraph parse_graph(const toml::table& g, const std::filesystem::path& base) {
  if (const toml::node* file = g.get("file")) {
    auto p = std::filesystem::path(text(file, "graph.file"));
    if (p.is_relative()) p = base / p;
    return load_edge_list(p);
  }
  const toml::node* nn = g.get("n");
  const std::size_t n = count(nn, "graph.n");
  if (n == 0) fail("graph.n must be positive", nn);
  if (const toml::node* c = g.get("complete"); c && c->value<bool>().value_or(false)) return complete_graph(n);
  Digraph out(n);
  const bool undirected = g.get("undirected") && g.get("undirected")->value<bool>().value_or(false);
  for (const auto& e : array(g.get("edges"), "graph.edges")) {
    const auto& pair = array(&e, "graph.edges entry");
    if (pair.size() != 2) fail("edge must be [from, to]", &e);
    const Vertex i = agent(pair.get(0), n, "edge endpoint");
    const Vertex j = agent(pair.get(1), n, "edge endpoint");
    if (i == j) fail("self-loop", &e);
    out.add_edge(i, j);
    if (undirected) out.add_edge(j, i);
  }
  return out;
}

inline ByzantineStrategy parse_strategy(const toml::table& t, std::size_t n) {
  const std::string kind = text(t.get("strategy"), "faults.byzantine.strategy");
  ByzantineStrategy s;
  try {
    s.kind = parse_strategy_kind(kind);
  } catch (const std::invalid_argument& e) {
    fail(e.what(), t.get("strategy"));
  }
  using K = ByzantineStrategy::Kind;
  switch (s.kind) {
    case K::constant:
      s.value = number(t.get("value"), "constant value");
      if (t.get("gradient")) s.gradient = number(t.get("gradient"), "constant gradient");
      break;
    case K::uniform_random:
      s.lo = number(t.get("lo"), "uniform_random lo");
      s.hi = number(t.get("hi"), "uniform_random hi");
      if (s.lo > s.hi) fail("uniform_random needs lo <= hi", &t);
      break;
    case K::per_neighbor_split:
      if (const toml::node* v = t.get("values")) {
        for (const auto& e : array(v, "split values")) {
          const auto& pair = array(&e, "split entry");
          if (pair.size() != 2) fail("split entry must be [neighbor, value]", &e);
          s.split[agent(pair.get(0), n, "split neighbor")] = number(pair.get(1), "split value");
        }
      } else {
        s.lo = number(t.get("lo"), "per_neighbor_split lo");
        s.hi = number(t.get("hi"), "per_neighbor_split hi");
      }
      break;
    case K::push_extreme: {
      const std::string which = text(t.get("endpoint"), "push_extreme endpoint");
      if (which != "hi" && which != "lo") fail("endpoint must be \"hi\" or \"lo\"", t.get("endpoint"));
      s.high = which == "hi";
      break;
    }
    case K::silent:
      break;
  }
  return s;
}

}  // namespace detail

inline ScenarioFile parse_scenario(std::string_view doc, const std::filesystem::path& base = ".",
                                   std::string_view source_name = "scenario") {
  toml::table root;
  try {
    root = toml::parse(doc, source_name);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(e.description()), static_cast<std::size_t>(e.source().begin.line));
  }
  using namespace detail;
  ScenarioFile out;
  Scenario& s = out.scenario;
  if (const toml::node* nm = root.get("name")) s.name = text(nm, "name");

  s.graph = parse_graph(table_at(root, "graph"), base);
  const std::size_t n = s.graph.size();

  const toml::table& run = table_at(root, "run");
  try {
    s.algorithm = parse_algorithm(text(run.get("algorithm"), "run.algorithm"));
  } catch (const std::invalid_argument& e) {
    fail(e.what(), run.get("algorithm"));
  }
  s.rounds = count(run.get("rounds"), "run.rounds");
  s.seed = run.get("seed") ? static_cast<std::uint64_t>(integer(run.get("seed"), "run.seed")) : 0;
  if (run.get("initial")) {
    s.initial = numbers(run.get("initial"), "run.initial");
    if (s.initial.size() != n) fail("run.initial needs one value per agent", run.get("initial"));
  } else {
    s.initial.assign(n, 0.0);
  }

  if (const toml::node* fn = root.get("faults")) {
    if (!fn->is_table()) fail("[faults] must be a table", fn);
    const toml::table& faults = *fn->as_table();
    s.f = faults.get("f") ? count(faults.get("f"), "faults.f") : 0;
    if (const toml::node* b = faults.get("byzantine")) {
      for (const auto& e : array(b, "faults.byzantine")) {
        if (!e.is_table()) fail("faults.byzantine entries must be tables", &e);
        const toml::table& t = *e.as_table();
        const Vertex v = agent(t.get("agent"), n, "faults.byzantine.agent");
        if (s.byzantine.count(v)) fail("agent listed twice", &e);
        s.byzantine[v] = parse_strategy(t, n);
      }
    }
    if (const toml::node* c = faults.get("crash")) {
      for (const auto& e : array(c, "faults.crash")) {
        if (!e.is_table()) fail("faults.crash entries must be tables", &e);
        const toml::table& t = *e.as_table();
        CrashEvent ev;
        ev.agent = agent(t.get("agent"), n, "faults.crash.agent");
        ev.round = count(t.get("round"), "faults.crash.round");
        if (t.get("delivered")) ev.delivered = agents(t.get("delivered"), n, "faults.crash.delivered");
        if (s.crashes.count(ev.agent)) fail("agent listed twice", &e);
        s.crashes[ev.agent] = ev;
      }
    }
  }

  const toml::table& costs = table_at(root, "costs");
  if (const toml::node* ag = costs.get("agents")) {
    for (const auto& e : array(ag, "costs.agents")) {
      if (!e.is_table()) fail("costs.agents entries must be tables", &e);
      const toml::table& t = *e.as_table();
      const double c = number(t.get("center"), "cost center");
      const double a = t.get("curvature") ? number(t.get("curvature"), "cost curvature") : 1.0;
      if (!(a > 0.0)) fail("curvature must be positive", &e);
      s.costs.emplace_back(c, a);
    }
  } else {
    const auto centers = numbers(costs.get("centers"), "costs.centers");
    std::vector<double> curv(centers.size(), 1.0);
    if (costs.get("curvatures")) {
      curv = numbers(costs.get("curvatures"), "costs.curvatures");
      if (curv.size() != centers.size()) fail("costs.curvatures length differs from centers", costs.get("curvatures"));
    }
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (!(curv[i] > 0.0)) fail("curvature must be positive", costs.get("curvatures"));
      s.costs.emplace_back(centers[i], curv[i]);
    }
  }
  if (s.costs.size() != n) fail("need one cost per agent", root.get("costs"));

  if (const toml::node* cn = root.get("constraint")) {
    const toml::table& c = table_at(root, "constraint");
    const double lo = number(c.get("lo"), "constraint.lo"), hi = number(c.get("hi"), "constraint.hi");
    if (lo > hi) fail("constraint needs lo <= hi", cn);
    s.constraint = ConstraintInterval(lo, hi);
  } else if (uses_projection(s.algorithm)) {
    throw ParseError("missing section [constraint]", 0);
  }

  if (const toml::node* sn = root.get("schedule")) {
    const toml::table& sc = table_at(root, "schedule");
    const double l0 = sc.get("lambda0") ? number(sc.get("lambda0"), "schedule.lambda0") : 1.0;
    const double p = sc.get("p") ? number(sc.get("p"), "schedule.p") : 1.0;
    try {
      s.schedule = StepSchedule(l0, p);
    } catch (const std::invalid_argument& e) {
      fail(e.what(), sn);
    }
  }

  if (const toml::node* sw = root.get("sweep")) {
    const toml::table& t = table_at(root, "sweep");
    SweepSpec spec;
    if (t.get("algorithms")) {
      for (const auto& e : array(t.get("algorithms"), "sweep.algorithms")) try {
          spec.algorithms.push_back(parse_algorithm(text(&e, "sweep.algorithms entry")));
        } catch (const std::invalid_argument& ex) {
          fail(ex.what(), &e);
        }
    } else {
      spec.algorithms.push_back(s.algorithm);
    }
    if (t.get("seeds")) {
      for (const auto& e : array(t.get("seeds"), "sweep.seeds"))
        spec.seeds.push_back(static_cast<std::uint64_t>(integer(&e, "sweep.seeds entry")));
    } else {
      spec.seeds.push_back(s.seed);
    }
    if (spec.algorithms.empty() || spec.seeds.empty()) fail("sweep grid is empty", sw);
    out.sweep = spec;
  }
  return out;
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  const std::string doc = read_file(path);
  auto sf = parse_scenario(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(),
                           path.string());
  if (sf.scenario.name == "scenario") sf.scenario.name = path.stem().string();
  return sf;
}

// ---- JSON form (1-based agents), embedded in trace sidecars and summaries ----------------------

inline nlohmann::json to_json(const ByzantineStrategy& s) {
  using K = ByzantineStrategy::Kind;
  nlohmann::json j{{"strategy", to_string(s.kind)}};
  switch (s.kind) {
    case K::constant:
      j["value"] = s.value;
      j["gradient"] = s.gradient.value_or(s.value);
      break;
    case K::uniform_random:
      j["lo"] = s.lo;
      j["hi"] = s.hi;
      break;
    case K::per_neighbor_split:
      if (!s.split.empty()) {
        nlohmann::json v = nlohmann::json::array();
        for (const auto& [r, x] : s.split) v.push_back({r + 1, x});
        j["values"] = v;
      } else {
        j["lo"] = s.lo;
        j["hi"] = s.hi;
      }
      break;
    case K::push_extreme:
      j["endpoint"] = s.high ? "hi" : "lo";
      break;
    case K::silent:
      break;
  }
  return j;
}

inline ByzantineStrategy strategy_from_json(const nlohmann::json& j) {
  using K = ByzantineStrategy::Kind;
  ByzantineStrategy s;
  s.kind = parse_strategy_kind(j.at("strategy").get<std::string>());
  switch (s.kind) {
    case K::constant:
      s.value = j.at("value").get<double>();
      s.gradient = j.at("gradient").get<double>();
      break;
    case K::uniform_random:
      s.lo = j.at("lo").get<double>();
      s.hi = j.at("hi").get<double>();
      break;
    case K::per_neighbor_split:
      if (j.contains("values")) {
        for (const auto& e : j.at("values")) s.split[e.at(0).get<Vertex>() - 1] = e.at(1).get<double>();
      } else {
        s.lo = j.at("lo").get<double>();
        s.hi = j.at("hi").get<double>();
      }
      break;
    case K::push_extreme:
      s.high = j.at("endpoint").get<std::string>() == "hi";
      break;
    case K::silent:
      break;
  }
  return s;
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["n"] = s.size();
  j["edges"] = edges_to_json(s.graph.edges());
  j["f"] = s.f;
  nlohmann::json byz = nlohmann::json::array();
  for (const auto& [v, st] : s.byzantine) {
    auto e = to_json(st);
    e["agent"] = v + 1;
    byz.push_back(e);
  }
  j["byzantine"] = byz;
  nlohmann::json cr = nlohmann::json::array();
  for (const auto& [v, c] : s.crashes) {
    nlohmann::json e{{"agent", v + 1}, {"round", c.round}};
    e["delivered"] = c.delivered ? vertices_to_json(*c.delivered) : nlohmann::json(nullptr);
    cr.push_back(e);
  }
  j["crashes"] = cr;
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& h : s.costs) costs.push_back({{"center", h.center}, {"curvature", h.curvature}});
  j["costs"] = costs;
  j["constraint"] = {{"lo", s.constraint.lo()}, {"hi", s.constraint.hi()}};
  j["schedule"] = {{"lambda0", s.schedule.lambda0()}, {"p", s.schedule.exponent()}};
  j["algorithm"] = to_string(s.algorithm);
  j["rounds"] = s.rounds;
  j["seed"] = s.seed;
  j["initial"] = s.initial;
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.name = j.at("name").get<std::string>();
  const std::size_t n = j.at("n").get<std::size_t>();
  s.graph = Digraph(n);
  for (const auto& e : j.at("edges")) s.graph.add_edge(e.at(0).get<Vertex>() - 1, e.at(1).get<Vertex>() - 1);
  s.f = j.at("f").get<std::size_t>();
  for (const auto& e : j.at("byzantine")) s.byzantine[e.at("agent").get<Vertex>() - 1] = strategy_from_json(e);
  for (const auto& e : j.at("crashes")) {
    CrashEvent c;
    c.agent = e.at("agent").get<Vertex>() - 1;
    c.round = e.at("round").get<std::size_t>();
    if (!e.at("delivered").is_null()) {
      VertexSet d;
      for (const auto& v : e.at("delivered")) d.push_back(v.get<Vertex>() - 1);
      c.delivered = normalized(d);
    }
    s.crashes[c.agent] = c;
  }
  for (const auto& h : j.at("costs")) s.costs.emplace_back(h.at("center").get<double>(), h.at("curvature").get<double>());
  s.constraint = ConstraintInterval(j.at("constraint").at("lo").get<double>(), j.at("constraint").at("hi").get<double>());
  s.schedule = StepSchedule(j.at("schedule").at("lambda0").get<double>(), j.at("schedule").at("p").get<double>());
  s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  s.rounds = j.at("rounds").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.initial = j.at("initial").get<std::vector<double>>();
  return s;
}

}  // namespace ftopt::harness
