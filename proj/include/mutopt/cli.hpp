#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mutopt/backend.hpp"
#include "mutopt/mutation.hpp"
#include "mutopt/optimizer.hpp"
#include "mutopt/report.hpp"
#include "mutopt/source.hpp"

namespace mutopt::cli {

enum ExitCode : int {
  kImproved = 0,
  kUsage = 1,
  kFailure = 2,
  kNoImprovement = 3,
};

struct CliConfig {
  std::filesystem::path source_path;
  std::string backend = "mini";
  std::string compile_cmd;
  std::string run_cmd;
  std::string operators = "ror,asr,aor";
  std::filesystem::path inputs_path;
  int repetitions = 5;
  int warmups = 1;
  double timeout_factor = 10.0;
  double threshold = 0.05;
  std::string lines;  // "A:B"
  std::filesystem::path report_path;
  std::filesystem::path scratch_dir;
  std::filesystem::path write_dir;  // mutants subcommand
  bool keep_scratch = false;
  bool no_memo = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline LanguageTag language_for(const std::filesystem::path& p) {
  return p.extension() == ".mini" ? LanguageTag::mini : LanguageTag::c_like;
}

inline SourceUnit load_source(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read source file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return tokenize(ss.str(), language_for(path));
}

inline std::optional<LineRange> parse_line_range(const std::string& spec,
                                                 const SourceUnit& unit) {
  if (spec.empty()) return std::nullopt;
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw UsageError("--lines expects A:B, got '" + spec + "'");
  LineRange r;
  try {
    r.first = std::stoi(spec.substr(0, colon));
    r.last = std::stoi(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--lines expects A:B, got '" + spec + "'");
  }
  if (r.first < 1 || r.last < r.first || r.last > unit.line_count())
    throw UsageError("--lines " + spec + " is outside the file's " +
                     std::to_string(unit.line_count()) + " lines");
  return r;
}

// Unique working directory under MUTOPT_SCRATCH, --scratch, or the system
// temp directory.
inline std::filesystem::path make_scratch_dir(const std::filesystem::path& requested) {
  namespace fs = std::filesystem;
  fs::path base = requested;
  if (const char* env = std::getenv("MUTOPT_SCRATCH"); env && *env) base = env;
  if (base.empty()) base = fs::temp_directory_path();
  static std::atomic<int> counter{0};
  for (;;) {
    auto dir = base / ("mutopt-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter++));
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      return dir;
    }
  }
}

inline void validate(const CliConfig& c) {
  if (c.backend != "mini" && c.backend != "external")
    throw UsageError("--backend must be 'mini' or 'external'");
  if (c.backend == "external" && (c.compile_cmd.empty() || c.run_cmd.empty()))
    throw UsageError("the external backend needs --compile-cmd and --run-cmd");
  if (c.repetitions < 1) throw UsageError("--reps must be at least 1");
  if (c.warmups < 0) throw UsageError("--warmups must be non-negative");
  if (!(c.timeout_factor > 1.0)) throw UsageError("--timeout-factor must exceed 1");
  if (c.threshold < 0.0 || c.threshold > 0.5)
    throw UsageError("--threshold must lie in [0, 0.5]");
}

inline std::vector<MutationOperator> operators_from(const std::string& csv) {
  std::vector<MutationOperator> ops;
  try {
    ops = parse_operator_list(csv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (ops.empty()) throw UsageError("--operators must name at least one operator");
  return ops;
}

inline int list_mutants(const CliConfig& c, std::ostream& out) {
  auto unit = load_source(c.source_path);
  auto ops = operators_from(c.operators);
  auto mutants = apply_all(ops, unit, parse_line_range(c.lines, unit));
  if (!c.write_dir.empty()) std::filesystem::create_directories(c.write_dir);
  for (const auto& m : mutants) {
    out << m.id << "\t" << m.site.line << ":" << m.site.col << "\t" << m.original
        << " -> " << m.replacement << "\n";
    if (!c.write_dir.empty()) {
      std::ofstream f(c.write_dir / mutant_file_name(c.source_path, m.id),
                      std::ios::binary);
      f << m.mutated_text;
      if (!f) throw std::runtime_error("cannot write mutant " + m.id);
    }
  }
  out << "total: " << mutants.size() << "\n";
  return kImproved;
}

inline int run_optimize(const CliConfig& c, std::ostream& out, std::ostream& err) {
  validate(c);
  auto unit = load_source(c.source_path);
  auto ops = operators_from(c.operators);

  OptimizerConfig config;
  config.backend.kind = c.backend == "mini" ? BackendKind::mini : BackendKind::external;
  config.backend.compile_cmd = c.compile_cmd;
  config.backend.run_cmd = c.run_cmd;
  config.backend.repetitions = c.repetitions;
  config.backend.warmups = c.warmups;
  config.backend.timeout_factor = c.timeout_factor;
  config.backend.step_budget_factor = c.timeout_factor;
  config.threshold = c.threshold;
  config.lines = parse_line_range(c.lines, unit);
  config.memoize_baseline = !c.no_memo;

  auto inputs = load_inputs(c.inputs_path);
  if (inputs.empty())
    err << "warning: input set '" << c.inputs_path.string()
        << "' is empty; no mutant can improve on the original\n";

  std::optional<std::filesystem::path> scratch;
  if (config.backend.kind == BackendKind::external) {
    scratch = make_scratch_dir(c.scratch_dir);
    config.backend.scratch_dir = *scratch;
    config.backend.source_stem = c.source_path.stem().string();
  }
  auto backend = make_backend(config.backend, c.source_path.extension().string());
  OptimizationReport report;
  try {
    report = optimize(ops, unit, inputs, *backend, config);
  } catch (...) {
    if (scratch) err << "scratch kept at " << scratch->string() << "\n";
    throw;
  }
  report.config.source = c.source_path.string();

  if (!c.report_path.empty())
    write_report(report, c.report_path, out);
  else
    print_summary(report, out);

  if (scratch) {
    if (c.keep_scratch)
      err << "scratch kept at " << scratch->string() << "\n";
    else
      std::filesystem::remove_all(*scratch);
  }
  return report.selected_id ? kImproved : kNoImprovement;
}

// Entry point shared by the mutopt binary and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Source-code optimization using equivalent mutants", "mutopt"};
  app.require_subcommand(1);
  CliConfig c;

  auto* opt = app.add_subcommand("optimize", "search for a faster M-equivalent mutant");
  opt->add_option("--source", c.source_path, "source file to optimize")->required();
  opt->add_option("--backend", c.backend, "mini | external");
  opt->add_option("--compile-cmd", c.compile_cmd, "compile template with {src} {out}");
  opt->add_option("--run-cmd", c.run_cmd, "run template with {bin} {input}");
  opt->add_option("--inputs", c.inputs_path, "directory of *.in files or manifest")
      ->required();
  opt->add_option("--operators", c.operators, "comma-separated subset of ror,asr,aor");
  opt->add_option("--reps", c.repetitions, "timed repetitions per input");
  opt->add_option("--warmups", c.warmups, "discarded runs before timing");
  opt->add_option("--timeout-factor", c.timeout_factor,
                  "mutant budget as a multiple of the original's cost");
  opt->add_option("--threshold", c.threshold, "relative noise guard for wall-clock costs");
  opt->add_option("--lines", c.lines, "restrict mutation to lines A:B");
  opt->add_option("--report", c.report_path, "write the JSON report here");
  opt->add_option("--scratch", c.scratch_dir, "scratch directory base");
  opt->add_flag("--keep-scratch", c.keep_scratch, "keep compiled mutants");
  opt->add_flag("--no-memo", c.no_memo, "re-run the current best for every comparison");

  auto* list = app.add_subcommand("mutants", "list mutants without executing them");
  list->add_option("--source", c.source_path, "source file")->required();
  list->add_option("--operators", c.operators, "comma-separated subset of ror,asr,aor");
  list->add_option("--lines", c.lines, "restrict mutation to lines A:B");
  list->add_option("--write-dir", c.write_dir, "write <stem>.<id>.<ext> files here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*list) return list_mutants(c, out);
    return run_optimize(c, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidBaseline& e) {
    err << "invalid baseline: " << e.what() << "\n";
    return kFailure;
  } catch (const ToolchainError& e) {
    err << "toolchain error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace mutopt::cli
