#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftopt/engine.hpp"
#include "ftopt/errors.hpp"
#include "ftopt/harness/scenario_io.hpp"

namespace ftopt::harness {

inline constexpr const char* kTraceHeader = "# ft-optsim trace v1";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

inline void write_trace_csv(std::ostream& out, const ExecutionTrace& tr) {
  out << kTraceHeader << '\n' << "round,agent,estimate,gradient_used,projection_error\n";
  for (const auto& rec : tr.rounds) {
    for (Vertex v = 0; v < tr.scenario.size(); ++v) {
      if (tr.scenario.byzantine.count(v)) continue;
      const AgentStep* st = rec.step_of(v);
      out << rec.round << ',' << v + 1 << ',' << format_double(rec.estimates[v]) << ','
          << format_double(st ? st->gradient_used : 0.0) << ',' << format_double(st ? st->projection_error : 0.0)
          << '\n';
    }
  }
}

inline nlohmann::json trace_to_json(const ExecutionTrace& tr) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rec : tr.rounds) {
    nlohmann::json r;
    r["round"] = rec.round;
    r["step"] = rec.step;
    nlohmann::json est = nlohmann::json::array();
    for (double x : rec.estimates) est.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    r["estimates"] = est;
    r["live_begin"] = vertices_to_json(rec.live_begin);
    r["live_end"] = vertices_to_json(rec.live_end);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : rec.steps) {
      nlohmann::json recv = nlohmann::json::array();
      for (const auto& m : st.received) recv.push_back({m.sender + 1, m.value, m.gradient, m.defaulted});
      steps.push_back({{"agent", st.agent + 1},
                       {"received", recv},
                       {"retained", vertices_to_json(st.retained)},
                       {"trimmed_low", vertices_to_json(st.trimmed_low)},
                       {"trimmed_high", vertices_to_json(st.trimmed_high)},
                       {"retained_gradients", vertices_to_json(st.retained_gradients)},
                       {"aggregate", st.aggregate},
                       {"gradient_used", st.gradient_used},
                       {"projection_error", st.projection_error}});
    }
    r["steps"] = steps;
    nlohmann::json byz = nlohmann::json::array();
    for (const auto& b : rec.byzantine) byz.push_back({b.sender + 1, b.receiver + 1, b.value, b.gradient});
    r["byzantine"] = byz;
    rounds.push_back(std::move(r));
  }
  return {{"format", "ft-optsim trace v1"},
          {"scenario", to_json(tr.scenario)},
          {"lipschitz", tr.lipschitz},
          {"rounds", rounds}};
}

namespace detail {

inline VertexSet vertices_from_json(const nlohmann::json& a) {
  VertexSet s;
  for (const auto& v : a) s.push_back(v.get<Vertex>() - 1);
  return s;
}

}  // namespace detail

inline ExecutionTrace trace_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "ft-optsim trace v1") throw TraceMismatch("unknown trace format");
    ExecutionTrace tr;
    tr.scenario = scenario_from_json(j.at("scenario"));
    tr.lipschitz = j.at("lipschitz").get<double>();
    for (const auto& r : j.at("rounds")) {
      RoundRecord rec;
      rec.round = r.at("round").get<std::size_t>();
      rec.step = r.at("step").get<double>();
      for (const auto& x : r.at("estimates"))
        rec.estimates.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
      rec.live_begin = detail::vertices_from_json(r.at("live_begin"));
      rec.live_end = detail::vertices_from_json(r.at("live_end"));
      for (const auto& s : r.at("steps")) {
        AgentStep st;
        st.agent = s.at("agent").get<Vertex>() - 1;
        for (const auto& m : s.at("received"))
          st.received.push_back(
              {m.at(0).get<Vertex>() - 1, m.at(1).get<double>(), m.at(2).get<double>(), m.at(3).get<bool>()});
        st.retained = detail::vertices_from_json(s.at("retained"));
        st.trimmed_low = detail::vertices_from_json(s.at("trimmed_low"));
        st.trimmed_high = detail::vertices_from_json(s.at("trimmed_high"));
        st.retained_gradients = detail::vertices_from_json(s.at("retained_gradients"));
        st.aggregate = s.at("aggregate").get<double>();
        st.gradient_used = s.at("gradient_used").get<double>();
        st.projection_error = s.at("projection_error").get<double>();
        rec.steps.push_back(std::move(st));
      }
      for (const auto& b : r.at("byzantine"))
        rec.byzantine.push_back(
            {b.at(0).get<Vertex>() - 1, b.at(1).get<Vertex>() - 1, b.at(2).get<double>(), b.at(3).get<double>()});
      if (rec.estimates.size() != tr.scenario.size()) throw TraceMismatch("estimate vector has the wrong length");
      if (rec.round != tr.rounds.size()) throw TraceMismatch("rounds are not consecutive");
      tr.rounds.push_back(std::move(rec));
    }
    if (tr.rounds.empty()) throw TraceMismatch("trace has no rounds");
    return tr;
  } catch (const nlohmann::json::exception& e) {
    throw TraceMismatch(std::string("malformed trace sidecar: ") + e.what());
  }
}

// Writes <path> (CSV) and its JSON sidecar.
inline void write_trace(const ExecutionTrace& tr, const std::filesystem::path& csv) {
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    write_trace_csv(out, tr);
  }
  std::ofstream side(sidecar_path(csv), std::ios::binary);
  if (!side) throw std::runtime_error("cannot write " + sidecar_path(csv).string());
  side << trace_to_json(tr).dump() << '\n';
}

// Loads the sidecar and checks every CSV row against it.
inline ExecutionTrace read_trace(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw TraceMismatch("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw TraceMismatch("empty trace file");
  if (line != kTraceHeader) throw TraceMismatch("missing trace version header");
  if (!std::getline(in, line) || line != "round,agent,estimate,gradient_used,projection_error")
    throw TraceMismatch("unexpected CSV columns");

  std::ifstream side(sidecar_path(csv), std::ios::binary);
  if (!side) throw TraceMismatch("missing sidecar " + sidecar_path(csv).string());
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TraceMismatch(std::string("unreadable sidecar: ") + e.what());
  }
  ExecutionTrace tr = trace_from_json(j);

  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell[5];
    for (auto& c : cell)
      if (!std::getline(ls, c, ',')) throw TraceMismatch("short CSV row");
    std::size_t t = 0;
    Vertex v = 0;
    double x = 0.0;
    try {
      t = std::stoul(cell[0]);
      v = std::stoul(cell[1]) - 1;
      x = std::stod(cell[2]);
    } catch (const std::exception&) {
      throw TraceMismatch("unparsable CSV row");
    }
    if (t >= tr.rounds.size() || v >= tr.scenario.size()) throw TraceMismatch("CSV row outside the sidecar");
    const double want = tr.rounds[t].estimates[v];
    if (!(x == want || (std::isnan(x) && std::isnan(want)))) throw TraceMismatch("CSV and sidecar disagree");
    ++rows;
  }
  if (rows != tr.rounds.size() * (tr.scenario.size() - tr.scenario.byzantine.size()))
    throw TraceMismatch("CSV row count disagrees with the sidecar");
  return tr;
}

}  // namespace ftopt::harness
