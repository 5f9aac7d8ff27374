#pragma once

// Selection loop over first-order mutants: every mutant of the original
// source is compiled, checked for output equality against the original on
// each input of M (stopping at the first mismatch), and kept as the new best
// when its summed cost beats the current best.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mutopt/backend.hpp"
#include "mutopt/host.hpp"
#include "mutopt/mutation.hpp"
#include "mutopt/source.hpp"

namespace mutopt {

// Ordered input set M; order fixes both the early-abort point and the
// summation order.
struct InputSet {
  std::vector<InputSequence> entries;
  std::filesystem::path origin;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// The original program does not compile, or fails on its own inputs.
class InvalidBaseline : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MutantStatus {
  compile_error,
  killed,
  crash,
  timeout,
  equivalent_not_faster,
  equivalent_faster,
  selected,
};

inline std::string_view to_string(MutantStatus s) {
  switch (s) {
    case MutantStatus::compile_error: return "compile_error";
    case MutantStatus::killed: return "killed";
    case MutantStatus::crash: return "crash";
    case MutantStatus::timeout: return "timeout";
    case MutantStatus::equivalent_not_faster: return "equivalent_not_faster";
    case MutantStatus::equivalent_faster: return "equivalent_faster";
    case MutantStatus::selected: return "selected";
  }
  return "?";
}

inline std::optional<MutantStatus> parse_mutant_status(std::string_view s) {
  for (auto st : {MutantStatus::compile_error, MutantStatus::killed,
                  MutantStatus::crash, MutantStatus::timeout,
                  MutantStatus::equivalent_not_faster,
                  MutantStatus::equivalent_faster, MutantStatus::selected})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

inline bool is_equivalent(MutantStatus s) {
  return s == MutantStatus::equivalent_not_faster ||
         s == MutantStatus::equivalent_faster || s == MutantStatus::selected;
}

struct MutantVerdict {
  std::string mutant_id;
  OperatorKind op = OperatorKind::ROR;
  int line = 0;
  int col = 0;
  std::string original;
  std::string replacement;
  MutantStatus status = MutantStatus::compile_error;
  std::string input_id;        // killing / crashing / timed-out input
  std::optional<Cost> tau;     // equivalent mutants only
  std::uint64_t executions = 0;
  std::string duplicate_of;    // earlier mutant with identical text
  std::string diagnostic;

  friend bool operator==(const MutantVerdict&, const MutantVerdict&) = default;
};

struct TauUpdate {
  std::string mutant_id;  // "original" for the starting point
  Cost tau;

  friend bool operator==(const TauUpdate&, const TauUpdate&) = default;
};

struct OptimizerConfig {
  ExecBackendConfig backend;
  double threshold = 0.05;  // noise guard for wall-clock costs
  std::optional<LineRange> lines;
  // Reuse the original's outputs instead of re-running the current best for
  // every mutant and input.
  bool memoize_baseline = true;
};

// Echo of the run parameters, stored in the report.
struct ReportConfig {
  std::string source;
  std::string backend;
  std::vector<std::string> operators;
  std::string compile_cmd;
  std::string run_cmd;
  int repetitions = 0;
  int warmups = 0;
  double timeout_factor = 0;
  double step_budget_factor = 0;
  double threshold = 0;
  std::optional<LineRange> lines;

  friend bool operator==(const ReportConfig&, const ReportConfig&) = default;
};

struct OptimizationReport {
  CostUnit unit = CostUnit::steps;
  Cost original_tau = StepCount{0};
  Cost final_tau = StepCount{0};
  std::string original_source;
  std::string selected_source;  // S_O; equals original_source without improvement
  std::optional<std::string> selected_id;
  std::vector<MutantVerdict> verdicts;
  std::vector<TauUpdate> tau_history;
  std::vector<std::string> input_ids;
  bool confirmed = true;
  ReportConfig config;
  HostInfo host;

  const MutantVerdict* selected() const {
    if (!selected_id) return nullptr;
    for (const auto& v : verdicts)
      if (v.mutant_id == *selected_id) return &v;
    return nullptr;
  }

  double speedup() const { return as_double(original_tau) / as_double(final_tau); }

  friend bool operator==(const OptimizationReport&,
                         const OptimizationReport&) = default;
};

// Whether a candidate cost beats the current best. Step counts are exact and
// compared strictly; wall-clock costs must win by more than `threshold`.
inline bool improvement_test(const Cost& best, const Cost& candidate,
                             double threshold) {
  if (unit_of(best) != unit_of(candidate)) throw UnitMismatch();
  if (unit_of(best) == CostUnit::steps)
    return std::get<StepCount>(candidate).steps < std::get<StepCount>(best).steps;
  return std::get<Milliseconds>(candidate).value <
         (1.0 - threshold) * std::get<Milliseconds>(best).value;
}

// True iff both sources compile and produce identical normalized outputs
// with an ok verdict on every input.
inline bool confirm_equivalence(ExecBackend& backend, const SourceUnit& candidate,
                                const SourceUnit& original, const InputSet& inputs) {
  try {
    auto p = backend.compile(candidate, "confirm_candidate");
    auto q = backend.compile(original, "confirm_original");
    for (const auto& input : inputs.entries) {
      auto a = backend.run(p, input, std::nullopt);
      auto b = backend.run(q, input, std::nullopt);
      if (a.verdict != Verdict::ok || b.verdict != Verdict::ok ||
          a.output != b.output)
        return false;
    }
    return true;
  } catch (const CompileError&) {
    return false;
  }
}

namespace detail {

struct Baseline {
  Program program;
  std::vector<std::string> outputs;
  std::vector<Cost> costs;
  Cost tau;
};

inline Baseline measure_baseline(ExecBackend& backend, const SourceUnit& source,
                                 const InputSet& inputs) {
  Program program;
  try {
    program = backend.compile(source, "original");
  } catch (const CompileError& e) {
    throw InvalidBaseline(std::string("original source does not compile: ") +
                          e.what());
  }
  Baseline b{program, {}, {}, zero_cost(backend.unit())};
  for (const auto& input : inputs.entries) {
    auto r = backend.run(program, input, std::nullopt);
    if (r.verdict != Verdict::ok)
      throw InvalidBaseline("original program " + std::string(to_string(r.verdict)) +
                            " on input '" + input.id + "': " + r.diagnostic);
    b.outputs.push_back(r.output);
    b.costs.push_back(*r.cost);
    b.tau = b.tau + *r.cost;
  }
  return b;
}

}  // namespace detail

inline OptimizationReport optimize(const std::vector<MutationOperator>& ops,
                                   const SourceUnit& source,
                                   const InputSet& inputs, ExecBackend& backend,
                                   const OptimizerConfig& config = {}) {
  OptimizationReport report;
  report.unit = backend.unit();
  report.original_source = source.text;
  report.host = collect_host_info();
  for (const auto& input : inputs.entries) report.input_ids.push_back(input.id);

  const auto base = detail::measure_baseline(backend, source, inputs);
  std::vector<Cost> budgets;
  for (const auto& c : base.costs) budgets.push_back(backend.budget_for(c));

  Cost best_tau = base.tau;
  Program best_program = base.program;
  std::optional<std::size_t> best_index;
  report.original_tau = base.tau;
  report.tau_history.push_back({"original", base.tau});

  const double threshold =
      backend.unit() == CostUnit::steps ? 0.0 : config.threshold;
  std::map<std::string, std::string> seen_text;

  for (const auto& mutant : apply_all(ops, source, config.lines)) {
    MutantVerdict v;
    v.mutant_id = mutant.id;
    v.op = mutant.op;
    v.line = mutant.site.line;
    v.col = mutant.site.col;
    v.original = mutant.original;
    v.replacement = mutant.replacement;
    if (auto [it, fresh] = seen_text.try_emplace(mutant.mutated_text, mutant.id);
        !fresh)
      v.duplicate_of = it->second;

    Program program;
    try {
      program = backend.compile(tokenize(mutant.mutated_text, source.language),
                                mutant.id);
    } catch (const CompileError& e) {
      v.status = MutantStatus::compile_error;
      v.diagnostic = e.what();
      report.verdicts.push_back(std::move(v));
      continue;
    } catch (const ToolchainError& e) {
      throw ToolchainError("mutant " + mutant.id + ": " + e.what());
    }

    Cost tau = zero_cost(backend.unit());
    bool equivalent = true;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto& input = inputs.entries[i];
      std::string expected;
      if (config.memoize_baseline) {
        expected = base.outputs[i];
      } else {
        expected = backend.run(best_program, input, std::nullopt).output;
      }
      auto r = backend.run(program, input, budgets[i]);
      ++v.executions;
      if (r.verdict != Verdict::ok) {
        v.status = r.verdict == Verdict::timeout ? MutantStatus::timeout
                                                 : MutantStatus::crash;
        v.input_id = input.id;
        v.diagnostic = r.diagnostic;
        equivalent = false;
        break;
      }
      if (r.output != expected) {
        v.status = MutantStatus::killed;
        v.input_id = input.id;
        equivalent = false;
        break;
      }
      tau = tau + *r.cost;
    }

    if (equivalent) {
      v.tau = tau;
      if (improvement_test(best_tau, tau, threshold)) {
        v.status = MutantStatus::equivalent_faster;
        best_tau = tau;
        best_program = program;
        best_index = report.verdicts.size();
        report.selected_source = mutant.mutated_text;
        report.tau_history.push_back({mutant.id, tau});
      } else {
        v.status = MutantStatus::equivalent_not_faster;
      }
    }
    report.verdicts.push_back(std::move(v));
  }

  if (best_index) {
    auto candidate = tokenize(report.selected_source, source.language);
    if (confirm_equivalence(backend, candidate, source, inputs)) {
      report.verdicts[*best_index].status = MutantStatus::selected;
      report.selected_id = report.verdicts[*best_index].mutant_id;
    } else {
      report.confirmed = false;
      best_index.reset();
    }
  }
  if (!best_index) {
    report.selected_source = source.text;
    best_tau = base.tau;
  }
  report.final_tau = best_tau;

  report.config.backend = std::string(to_string(backend.kind()));
  for (const auto& op : ops)
    report.config.operators.emplace_back(to_string(op.kind));
  report.config.compile_cmd = config.backend.compile_cmd;
  report.config.run_cmd = config.backend.run_cmd;
  report.config.repetitions = config.backend.repetitions;
  report.config.warmups = config.backend.warmups;
  report.config.timeout_factor = config.backend.timeout_factor;
  report.config.step_budget_factor = config.backend.step_budget_factor;
  report.config.threshold = threshold;
  report.config.lines = config.lines;
  return report;
}

}  // namespace mutopt
