#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mutopt/optimizer.hpp"

namespace mutopt {

using json = nlohmann::ordered_json;

class InputSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputSetError("cannot read input file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

// Loads M from a directory of *.in files or from a manifest listing one file
// per line (relative to the manifest, '#' starts a comment). Entries are
// ordered lexicographically by file name; ids are the file stems.
inline InputSet load_inputs(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  InputSet set;
  set.origin = path;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".in")
        files.push_back(entry.path());
  } else if (fs::is_regular_file(path)) {
    std::istringstream manifest(detail::read_file(path));
    for (std::string line; std::getline(manifest, line);) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line.erase(0, line.find_first_not_of(" \t\r"));
      line.erase(line.find_last_not_of(" \t\r") + 1);
      if (line.empty()) continue;
      fs::path file = fs::path(line).is_absolute() ? fs::path(line)
                                                   : path.parent_path() / line;
      if (!fs::is_regular_file(file))
        throw InputSetError("manifest " + path.string() +
                            " references missing file '" + line + "'");
      files.push_back(file);
    }
  } else {
    throw InputSetError("input set '" + path.string() + "' does not exist");
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  for (const auto& file : files) {
    auto id = file.stem().string();
    for (const auto& e : set.entries)
      if (e.id == id) throw InputSetError("duplicate input id '" + id + "'");
    set.entries.push_back({id, detail::read_file(file), file});
  }
  return set;
}

inline json cost_to_json(const Cost& c) {
  if (auto* s = std::get_if<StepCount>(&c)) return s->steps;
  return std::get<Milliseconds>(c).value;
}

inline Cost cost_from_json(const json& j, CostUnit unit) {
  if (unit == CostUnit::steps) return StepCount{j.get<std::uint64_t>()};
  return Milliseconds{j.get<double>()};
}

inline json nullable(const std::string& s) {
  return s.empty() ? json(nullptr) : json(s);
}

// Unified diff between two texts that differ on individual lines only, as
// every first-order mutant does.
inline std::string make_patch(const std::string& before, const std::string& after,
                              const std::string& name) {
  auto split = [](const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
  };
  auto a = split(before), b = split(after);
  if (a == b) return {};
  std::ostringstream out;
  out << "--- a/" << name << "\n+++ b/" << name << "\n";
  if (a.size() != b.size()) {
    out << "@@ -1," << a.size() << " +1," << b.size() << " @@\n";
    for (const auto& l : a) out << "-" << l << "\n";
    for (const auto& l : b) out << "+" << l << "\n";
    return out.str();
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    out << "@@ -" << i + 1 << ",1 +" << i + 1 << ",1 @@\n";
    out << "-" << a[i] << "\n+" << b[i] << "\n";
  }
  return out.str();
}

inline json to_json(const OptimizationReport& r) {
  json j;
  j["schema"] = "mutopt-report/1";
  j["unit"] = std::string(to_string(r.unit));
  j["original_tau"] = cost_to_json(r.original_tau);
  j["final_tau"] = cost_to_json(r.final_tau);
  j["speedup"] = r.speedup();
  if (const auto* s = r.selected()) {
    j["selected"] = {{"mutant_id", s->mutant_id},
                     {"operator", std::string(to_string(s->op))},
                     {"line", s->line},
                     {"col", s->col},
                     {"original", s->original},
                     {"replacement", s->replacement}};
  } else {
    j["selected"] = nullptr;
  }
  j["confirmed"] = r.confirmed;

  json counts = json::object();
  std::map<std::string, int> kills;
  for (const auto& id : r.input_ids) kills[id] = 0;
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    auto status = std::string(to_string(v.status));
    counts[status] = counts.value(status, 0) + 1;
    if (v.status == MutantStatus::killed) ++kills[v.input_id];
    verdicts.push_back({{"mutant_id", v.mutant_id},
                        {"operator", std::string(to_string(v.op))},
                        {"line", v.line},
                        {"col", v.col},
                        {"original", v.original},
                        {"replacement", v.replacement},
                        {"status", status},
                        {"input_id", nullable(v.input_id)},
                        {"tau", v.tau ? cost_to_json(*v.tau) : json(nullptr)},
                        {"executions", v.executions},
                        {"duplicate_of", nullable(v.duplicate_of)},
                        {"diagnostic", nullable(v.diagnostic)}});
  }
  j["verdict_counts"] = counts;
  j["verdicts"] = verdicts;

  json history = json::array();
  for (const auto& h : r.tau_history)
    history.push_back({{"mutant_id", h.mutant_id}, {"tau", cost_to_json(h.tau)}});
  j["tau_history"] = history;

  json kill_map = json::object();
  for (const auto& id : r.input_ids) kill_map[id] = kills[id];
  j["inputs"] = {{"count", r.input_ids.size()},
                 {"ids", r.input_ids},
                 {"kills_by_input", kill_map}};

  j["patch"] = make_patch(r.original_source, r.selected_source,
                          r.config.source.empty() ? "source" : r.config.source);
  j["original_source"] = r.original_source;
  j["selected_source"] = r.selected_source;

  const auto& c = r.config;
  j["config"] = {{"source", c.source},
                 {"backend", c.backend},
                 {"operators", c.operators},
                 {"compile_cmd", c.compile_cmd},
                 {"run_cmd", c.run_cmd},
                 {"repetitions", c.repetitions},
                 {"warmups", c.warmups},
                 {"timeout_factor", c.timeout_factor},
                 {"step_budget_factor", c.step_budget_factor},
                 {"threshold", c.threshold},
                 {"lines", c.lines ? json::array({c.lines->first, c.lines->last})
                                   : json(nullptr)}};
  j["host"] = {{"os", r.host.os}, {"cpu", r.host.cpu}, {"timestamp", r.host.timestamp}};
  return j;
}

inline OptimizationReport report_from_json(const json& j) {
  auto opt_string = [](const json& v) {
    return v.is_null() ? std::string() : v.get<std::string>();
  };
  OptimizationReport r;
  r.unit = j.at("unit").get<std::string>() == "steps" ? CostUnit::steps
                                                      : CostUnit::ms;
  r.original_tau = cost_from_json(j.at("original_tau"), r.unit);
  r.final_tau = cost_from_json(j.at("final_tau"), r.unit);
  if (!j.at("selected").is_null())
    r.selected_id = j.at("selected").at("mutant_id").get<std::string>();
  r.confirmed = j.at("confirmed").get<bool>();
  for (const auto& jv : j.at("verdicts")) {
    MutantVerdict v;
    v.mutant_id = jv.at("mutant_id").get<std::string>();
    auto op = parse_operator_kind(jv.at("operator").get<std::string>());
    if (!op) throw std::runtime_error("report: unknown operator");
    v.op = *op;
    v.line = jv.at("line").get<int>();
    v.col = jv.at("col").get<int>();
    v.original = jv.at("original").get<std::string>();
    v.replacement = jv.at("replacement").get<std::string>();
    auto st = parse_mutant_status(jv.at("status").get<std::string>());
    if (!st) throw std::runtime_error("report: unknown status");
    v.status = *st;
    v.input_id = opt_string(jv.at("input_id"));
    if (!jv.at("tau").is_null()) v.tau = cost_from_json(jv.at("tau"), r.unit);
    v.executions = jv.at("executions").get<std::uint64_t>();
    v.duplicate_of = opt_string(jv.at("duplicate_of"));
    v.diagnostic = opt_string(jv.at("diagnostic"));
    r.verdicts.push_back(std::move(v));
  }
  for (const auto& h : j.at("tau_history"))
    r.tau_history.push_back({h.at("mutant_id").get<std::string>(),
                             cost_from_json(h.at("tau"), r.unit)});
  r.input_ids = j.at("inputs").at("ids").get<std::vector<std::string>>();
  r.original_source = j.at("original_source").get<std::string>();
  r.selected_source = j.at("selected_source").get<std::string>();

  const auto& c = j.at("config");
  r.config.source = c.at("source").get<std::string>();
  r.config.backend = c.at("backend").get<std::string>();
  r.config.operators = c.at("operators").get<std::vector<std::string>>();
  r.config.compile_cmd = c.at("compile_cmd").get<std::string>();
  r.config.run_cmd = c.at("run_cmd").get<std::string>();
  r.config.repetitions = c.at("repetitions").get<int>();
  r.config.warmups = c.at("warmups").get<int>();
  r.config.timeout_factor = c.at("timeout_factor").get<double>();
  r.config.step_budget_factor = c.at("step_budget_factor").get<double>();
  r.config.threshold = c.at("threshold").get<double>();
  if (!c.at("lines").is_null())
    r.config.lines = LineRange{c.at("lines").at(0).get<int>(),
                               c.at("lines").at(1).get<int>()};
  const auto& h = j.at("host");
  r.host = {h.at("os").get<std::string>(), h.at("cpu").get<std::string>(),
            h.at("timestamp").get<std::string>()};
  return r;
}

namespace detail {

inline std::string format_cost(const std::optional<Cost>& c) {
  if (!c) return "-";
  if (auto* s = std::get_if<StepCount>(&*c)) return std::to_string(s->steps);
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << std::get<Milliseconds>(*c).value;
  return out.str();
}

inline std::string format_ratio(double r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << r << "x";
  return out.str();
}

}  // namespace detail

// Human-readable table: one row per mutant, then the selection summary.
inline void print_summary(const OptimizationReport& r, std::ostream& out) {
  auto unit = std::string(to_string(r.unit));
  out << std::left << std::setw(10) << "mutant" << std::setw(5) << "op"
      << std::setw(9) << "site" << std::setw(12) << "change" << std::setw(23)
      << "status" << std::setw(14) << ("tau[" + unit + "]") << "speedup\n";
  for (const auto& v : r.verdicts) {
    std::string status(to_string(v.status));
    if (!v.input_id.empty()) status += "(" + v.input_id + ")";
    std::string speed = v.tau ? detail::format_ratio(as_double(r.original_tau) /
                                                     as_double(*v.tau))
                              : "-";
    out << std::setw(10) << v.mutant_id << std::setw(5) << to_string(v.op)
        << std::setw(9) << (std::to_string(v.line) + ":" + std::to_string(v.col))
        << std::setw(12) << (v.original + " -> " + v.replacement) << std::setw(23)
        << status << std::setw(14) << detail::format_cost(v.tau) << speed << "\n";
  }
  out << "original tau: " << detail::format_cost(r.original_tau) << " " << unit
      << "\n";
  if (const auto* s = r.selected()) {
    out << "selected: " << s->mutant_id << " at " << s->line << ":" << s->col
        << " (" << s->original << " -> " << s->replacement << "), tau "
        << detail::format_cost(r.final_tau) << " " << unit << ", speedup "
        << std::setprecision(17) << r.speedup() << "x\n";
  } else {
    out << "selected: none (original source kept)\n";
  }
}

// Writes the JSON report to `path` and the summary table to `summary`.
inline void write_report(const OptimizationReport& r,
                         const std::filesystem::path& path, std::ostream& summary) {
  std::ofstream f(path, std::ios::binary);
  f << to_json(r).dump(2) << "\n";
  f.flush();
  if (!f) throw std::runtime_error("cannot write report to '" + path.string() + "'");
  print_summary(r, summary);
}

}  // namespace mutopt
