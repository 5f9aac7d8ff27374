#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mutopt/minilang.hpp"
#include "mutopt/process.hpp"
#include "mutopt/source.hpp"

namespace mutopt {

// ---------------------------------------------------------------------------
// Costs

struct StepCount {
  std::uint64_t steps = 0;
  friend auto operator<=>(const StepCount&, const StepCount&) = default;
};

struct Milliseconds {
  double value = 0.0;
  friend auto operator<=>(const Milliseconds&, const Milliseconds&) = default;
};

using Cost = std::variant<StepCount, Milliseconds>;

enum class CostUnit { steps, ms };

inline std::string_view to_string(CostUnit unit) {
  return unit == CostUnit::steps ? "steps" : "ms";
}

inline CostUnit unit_of(const Cost& c) {
  return std::holds_alternative<StepCount>(c) ? CostUnit::steps : CostUnit::ms;
}

inline Cost zero_cost(CostUnit unit) {
  if (unit == CostUnit::steps) return StepCount{0};
  return Milliseconds{0.0};
}

class UnitMismatch : public std::logic_error {
 public:
  UnitMismatch()
      : std::logic_error("cost values in different units cannot be combined") {}
};

inline Cost operator+(const Cost& a, const Cost& b) {
  if (unit_of(a) != unit_of(b)) throw UnitMismatch();
  if (auto* s = std::get_if<StepCount>(&a))
    return StepCount{s->steps + std::get<StepCount>(b).steps};
  return Milliseconds{std::get<Milliseconds>(a).value +
                      std::get<Milliseconds>(b).value};
}

inline double as_double(const Cost& c) {
  if (auto* s = std::get_if<StepCount>(&c)) return static_cast<double>(s->steps);
  return std::get<Milliseconds>(c).value;
}

// ---------------------------------------------------------------------------
// Inputs

struct InputSequence {
  std::string id;
  std::string bytes;
  std::filesystem::path path;  // empty for in-memory inputs
};

class InputFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Whitespace-separated decimal integers.
inline std::vector<Int> parse_integers(std::string_view text,
                                       std::string_view what = "input") {
  std::vector<Int> values;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(word, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != word.size())
      throw InputFormatError(std::string(what) + ": '" + word +
                             "' is not a decimal integer");
    values.push_back(static_cast<Int>(v));
  }
  return values;
}

inline InputSequence make_input(std::string id, const std::vector<Int>& values) {
  std::string bytes;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) bytes += ' ';
    bytes += std::to_string(values[i]);
  }
  bytes += '\n';
  return {std::move(id), std::move(bytes), {}};
}

// ---------------------------------------------------------------------------
// Run results

enum class Verdict { ok, timeout, crash };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::ok: return "ok";
    case Verdict::timeout: return "timeout";
    case Verdict::crash: return "crash";
  }
  return "?";
}

struct RunResult {
  std::string output;         // normalized
  std::optional<Cost> cost;   // set only when verdict == ok
  Verdict verdict = Verdict::ok;
  std::string diagnostic;
  std::optional<Cost> spent;  // cost consumed before an abort
};

// Strips trailing whitespace on every line and trailing newlines.
inline std::string normalize_output(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto nl = raw.find('\n', start);
    auto line = raw.substr(start, nl == std::string_view::npos
                                      ? std::string_view::npos
                                      : nl - start);
    auto last = line.find_last_not_of(" \t\r\f\v");
    line = last == std::string_view::npos ? std::string_view{}
                                          : line.substr(0, last + 1);
    out.append(line);
    if (nl == std::string_view::npos) break;
    out += '\n';
    start = nl + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class BackendKind { mini, external };

inline std::string_view to_string(BackendKind k) {
  return k == BackendKind::mini ? "mini" : "external";
}

struct ExecBackendConfig {
  BackendKind kind = BackendKind::mini;
  std::string compile_cmd;  // placeholders {src} {out}
  std::string run_cmd;      // placeholders {bin} {input}
  int repetitions = 5;
  int warmups = 1;
  double timeout_factor = 10.0;
  double step_budget_factor = 10.0;
  // Caps for the original program, which has no reference cost yet.
  std::uint64_t baseline_step_budget = 100'000'000'000ULL;
  double baseline_timeout_ms = 600'000.0;
  // Floor on wall-clock budgets so process start-up jitter on tiny programs
  // is not mistaken for a hang.
  double min_timeout_ms = 1000.0;
  std::filesystem::path scratch_dir;
  // Prefix for files in scratch_dir, giving <stem>.<name>.<ext>.
  std::string source_stem;

  void validate() const {
    if (repetitions < 1)
      throw std::invalid_argument("repetitions must be at least 1");
    if (warmups < 0) throw std::invalid_argument("warmups must be >= 0");
    if (!(timeout_factor > 1.0))
      throw std::invalid_argument("timeout factor must be greater than 1");
    if (!(step_budget_factor > 1.0))
      throw std::invalid_argument("step budget factor must be greater than 1");
    if (kind == BackendKind::external &&
        (compile_cmd.empty() || run_cmd.empty()))
      throw std::invalid_argument(
          "external backend requires both a compile and a run command");
  }
};

// ---------------------------------------------------------------------------
// Backends

// Result of a successful compile. A compile failure is a CompileError and
// never a Program value.
struct Program {
  std::string name;
  std::variant<std::shared_ptr<const MiniProgram>, std::filesystem::path>
      handle;
};

class ExecBackend {
 public:
  virtual ~ExecBackend() = default;

  virtual BackendKind kind() const = 0;
  virtual CostUnit unit() const = 0;

  // Throws CompileError when the source does not compile and ToolchainError
  // when the compiler cannot be started.
  virtual Program compile(const SourceUnit& source, std::string_view name) = 0;

  // `budget` unset means the baseline cap. Timeouts and crashes are verdicts.
  virtual RunResult run(const Program& program, const InputSequence& input,
                        std::optional<Cost> budget) = 0;

  // Per-input budget for a candidate whose reference cost is `baseline`.
  virtual Cost budget_for(const Cost& baseline) const = 0;

  // Number of run() calls so far.
  std::uint64_t executions() const { return executions_; }

 protected:
  std::uint64_t executions_ = 0;
};

class MiniBackend final : public ExecBackend {
 public:
  explicit MiniBackend(ExecBackendConfig config = {}) : config_(std::move(config)) {}

  BackendKind kind() const override { return BackendKind::mini; }
  CostUnit unit() const override { return CostUnit::steps; }

  Program compile(const SourceUnit& source, std::string_view name) override {
    if (source.language != LanguageTag::mini)
      throw CompileError("the mini backend only accepts MiniImp sources", 1, 1);
    return Program{std::string(name),
                   std::make_shared<const MiniProgram>(parse_mini(source))};
  }

  RunResult run(const Program& program, const InputSequence& input,
                std::optional<Cost> budget) override {
    ++executions_;
    const auto* mini =
        std::get_if<std::shared_ptr<const MiniProgram>>(&program.handle);
    if (!mini || !*mini)
      throw std::invalid_argument("program was not built by the mini backend");
    std::uint64_t limit = config_.baseline_step_budget;
    if (budget) limit = std::get<StepCount>(*budget).steps;

    auto values = parse_integers(input.bytes, input.id);
    RunResult result;
    try {
      auto eval = eval_mini(**mini, values, limit);
      result.output = normalize_output(eval.output);
      result.cost = StepCount{eval.steps};
    } catch (const BudgetExceeded& e) {
      result.verdict = Verdict::timeout;
      result.diagnostic = e.what();
      result.spent = StepCount{e.spent()};
    } catch (const MiniRuntimeError& e) {
      result.verdict = Verdict::crash;
      result.diagnostic = e.what();
    }
    return result;
  }

  Cost budget_for(const Cost& baseline) const override {
    auto steps = std::get<StepCount>(baseline).steps;
    auto scaled = std::ceil(config_.step_budget_factor * static_cast<double>(steps));
    return StepCount{std::max<std::uint64_t>(1, static_cast<std::uint64_t>(scaled))};
  }

 private:
  ExecBackendConfig config_;
};

namespace detail {

// Timed measurements are never taken concurrently.
inline std::mutex& measurement_lock() {
  static std::mutex m;
  return m;
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  auto n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

inline std::string source_extension(const SourceUnit& source) {
  return source.language == LanguageTag::mini ? ".mini" : ".c";
}

}  // namespace detail

// Compiles with `compile_cmd` and runs binaries with `run_cmd`, both executed
// without a shell. Inputs are fed on standard input.
class ExternalBackend final : public ExecBackend {
 public:
  explicit ExternalBackend(ExecBackendConfig config,
                           std::string source_extension = {})
      : config_(std::move(config)), extension_(std::move(source_extension)) {
    config_.validate();
    if (config_.scratch_dir.empty())
      throw std::invalid_argument("external backend requires a scratch directory");
    std::filesystem::create_directories(config_.scratch_dir);
  }

  BackendKind kind() const override { return BackendKind::external; }
  CostUnit unit() const override { return CostUnit::ms; }

  Program compile(const SourceUnit& source, std::string_view name) override {
    auto ext = extension_.empty() ? detail::source_extension(source) : extension_;
    auto base = config_.source_stem.empty()
                    ? std::string(name)
                    : config_.source_stem + "." + std::string(name);
    auto src = config_.scratch_dir / (base + ext);
    auto bin = config_.scratch_dir / (base + ".bin");
    {
      std::ofstream f(src, std::ios::binary);
      f << source.text;
      if (!f) throw std::runtime_error("cannot write " + src.string());
    }
    std::filesystem::remove(bin);
    auto argv = substitute(split_command(config_.compile_cmd),
                           {{"src", src.string()}, {"out", bin.string()}});
    auto res = run_process(argv, {});
    if (!res.ok()) {
      std::string diag = res.err.empty() ? res.out : res.err;
      throw CompileError("compiler failed (exit " +
                             std::to_string(res.exit_code) + "): " + diag,
                         0, 0);
    }
    return Program{std::string(name), bin};
  }

  RunResult run(const Program& program, const InputSequence& input,
                std::optional<Cost> budget) override {
    ++executions_;
    const auto* bin = std::get_if<std::filesystem::path>(&program.handle);
    if (!bin)
      throw std::invalid_argument("program was not built by the external backend");

    auto input_path = input.path;
    if (input_path.empty()) {
      input_path = config_.scratch_dir / (input.id + ".in");
      std::ofstream f(input_path, std::ios::binary);
      f << input.bytes;
    }
    auto argv = substitute(split_command(config_.run_cmd),
                           {{"bin", bin->string()}, {"input", input_path.string()}});

    double limit_ms = config_.baseline_timeout_ms;
    if (budget) limit_ms = std::get<Milliseconds>(*budget).value;
    auto timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(std::ceil(limit_ms)));

    std::lock_guard lock(detail::measurement_lock());
    RunResult result;
    std::vector<double> samples;
    std::optional<std::string> first_output;
    int total = config_.warmups + config_.repetitions;
    for (int i = 0; i < total; ++i) {
      auto res = run_process(argv, input.bytes, timeout);
      if (res.timed_out) {
        result.verdict = Verdict::timeout;
        result.diagnostic = "exceeded " + std::to_string(limit_ms) + " ms";
        result.spent = Milliseconds{res.elapsed_ms};
        return result;
      }
      if (res.signal != 0 || res.exit_code != 0) {
        result.verdict = Verdict::crash;
        result.diagnostic =
            res.signal ? "killed by signal " + std::to_string(res.signal)
                       : "exit status " + std::to_string(res.exit_code);
        return result;
      }
      auto out = normalize_output(res.out);
      if (!first_output) {
        first_output = out;
      } else if (*first_output != out) {
        result.verdict = Verdict::crash;
        result.diagnostic = "output differs between repetitions";
        return result;
      }
      if (i >= config_.warmups) samples.push_back(res.elapsed_ms);
    }
    result.output = *first_output;
    result.cost = Milliseconds{detail::median(samples)};
    return result;
  }

  Cost budget_for(const Cost& baseline) const override {
    double ms = config_.timeout_factor * std::get<Milliseconds>(baseline).value;
    return Milliseconds{std::max(ms, config_.min_timeout_ms)};
  }

 private:
  ExecBackendConfig config_;
  std::string extension_;
};

inline std::unique_ptr<ExecBackend> make_backend(
    const ExecBackendConfig& config, std::string source_extension = {}) {
  config.validate();
  if (config.kind == BackendKind::mini)
    return std::make_unique<MiniBackend>(config);
  return std::make_unique<ExternalBackend>(config, std::move(source_extension));
}

// Outcome of summing per-input costs over an input set.
struct OverallTime {
  std::optional<Cost> tau;            // set when every run was ok
  Verdict verdict = Verdict::ok;      // first non-ok verdict otherwise
  std::string failed_input;
  std::vector<RunResult> runs;        // one per executed input
};

// Sum of per-input costs; stops at the first non-ok verdict. `budgets`, when
// non-empty, holds one budget per input.
inline OverallTime overall_time(ExecBackend& backend, const Program& program,
                                const std::vector<InputSequence>& inputs,
                                const std::vector<Cost>& budgets = {}) {
  OverallTime result;
  Cost tau = zero_cost(backend.unit());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::optional<Cost> budget;
    if (!budgets.empty()) budget = budgets.at(i);
    auto run = backend.run(program, inputs[i], budget);
    if (run.verdict != Verdict::ok) {
      result.verdict = run.verdict;
      result.failed_input = inputs[i].id;
      result.runs.push_back(std::move(run));
      return result;
    }
    tau = tau + *run.cost;
    result.runs.push_back(std::move(run));
  }
  result.tau = tau;
  return result;
}

}  // namespace mutopt
