#include <gtest/gtest.h>

#include <random>

#include "mutopt/optimizer.hpp"
#include "mutopt/report.hpp"
#include "support/counting_backend.hpp"
#include "support/oracles.hpp"
#include "support/random_programs.hpp"

using namespace mutopt;
using mutopt::testing::CountingBackend;
using mutopt::testing::fixture;
using mutopt::testing::read_text;

namespace {

SourceUnit mini_unit(const std::string& text) { return tokenize(text, LanguageTag::mini); }

SourceUnit mini_fixture(const char* rel) { return mini_unit(read_text(fixture(rel))); }

InputSet make_set(const std::vector<std::vector<Int>>& rows) {
  InputSet s;
  for (std::size_t k = 0; k < rows.size(); ++k)
    s.entries.push_back(make_input("in" + std::to_string(k), rows[k]));
  return s;
}

const auto kAll = parse_operator_list("ror,asr,aor");

const MutantVerdict& verdict(const OptimizationReport& r, const std::string& id) {
  for (const auto& v : r.verdicts)
    if (v.mutant_id == id) return v;
  throw std::out_of_range(id);
}

std::vector<Int> values_of(const InputSequence& in) { return parse_integers(in.bytes, in.id); }

OptimizationReport without_host(OptimizationReport r) {
  r.host = {};
  return r;
}

}  // namespace

TEST(ImprovementTest, StepsAreComparedStrictly) {
  EXPECT_TRUE(improvement_test(StepCount{1000}, StepCount{999}, 0.0));
  EXPECT_FALSE(improvement_test(StepCount{1000}, StepCount{1000}, 0.0));
  EXPECT_FALSE(improvement_test(StepCount{1000}, StepCount{1001}, 0.0));
}

TEST(ImprovementTest, WallClockNeedsToBeatNoise) {
  EXPECT_FALSE(improvement_test(Milliseconds{100}, Milliseconds{97}, 0.05));
  EXPECT_TRUE(improvement_test(Milliseconds{100}, Milliseconds{90}, 0.05));
  EXPECT_TRUE(improvement_test(Milliseconds{100}, Milliseconds{99}, 0.0));
  EXPECT_THROW(improvement_test(StepCount{1}, Milliseconds{1}, 0.0), UnitMismatch);
}

TEST(ConfirmEquivalence, ReflexiveAndDetectsDifferences) {
  MiniBackend b;
  auto m = load_inputs(fixture("m_max"));
  auto orig = mini_fixture("maxsearch.mini");
  EXPECT_TRUE(confirm_equivalence(b, orig, orig, m));

  auto text = orig.text;
  text.replace(text.find(">="), 2, "==");
  EXPECT_FALSE(confirm_equivalence(b, mini_unit(text), orig, m));
  EXPECT_FALSE(confirm_equivalence(b, mini_unit("print(;"), orig, m));
  EXPECT_TRUE(confirm_equivalence(b, mini_unit(text), orig, InputSet{}));
}

TEST(Optimize, EmptyOperatorSetKeepsOriginal) {
  MiniBackend b;
  auto src = mini_fixture("b2tob10.mini");
  auto r = optimize({}, src, load_inputs(fixture("m_scaled")), b);
  EXPECT_TRUE(r.verdicts.empty());
  EXPECT_FALSE(r.selected_id);
  EXPECT_EQ(r.selected_source, r.original_source);
  EXPECT_EQ(r.final_tau, r.original_tau);
  EXPECT_EQ(std::get<StepCount>(r.original_tau).steps, 19923110u);
  ASSERT_EQ(r.tau_history.size(), 1u);
  EXPECT_EQ(r.tau_history[0].mutant_id, "original");
}

TEST(Optimize, InvalidBaseline) {
  MiniBackend b;
  EXPECT_THROW(optimize(kAll, mini_unit("x = ;"), make_set({{1}}), b), InvalidBaseline);
  EXPECT_THROW(optimize(kAll, mini_unit("print(10 / in[0]);"), make_set({{1}, {0}}), b),
               InvalidBaseline);
}

TEST(Optimize, MaxSearchPicksStrictComparison) {
  MiniBackend b;
  auto src = mini_fixture("maxsearch.mini");
  auto m = load_inputs(fixture("m_max"));
  auto r = optimize(kAll, src, m, b);

  // Comparison site: classification follows the reference implementation.
  const std::vector<std::pair<std::string, std::function<bool(Int, Int)>>> cmps{
      {"<", std::less<Int>{}},          {"<=", std::less_equal<Int>{}},
      {">", std::greater<Int>{}},       {"==", std::equal_to<Int>{}},
      {"!=", std::not_equal_to<Int>{}}};
  int checked = 0;
  for (const auto& v : r.verdicts) {
    if (v.original != ">=") continue;
    auto it = std::find_if(cmps.begin(), cmps.end(),
                           [&](const auto& c) { return c.first == v.replacement; });
    ASSERT_NE(it, cmps.end());
    std::string first_kill;
    for (const auto& in : m.entries) {
      auto vals = values_of(in);
      if (mutopt::testing::max_search(vals, it->second) !=
          mutopt::testing::max_search(vals, std::greater_equal<Int>{})) {
        first_kill = in.id;
        break;
      }
    }
    if (first_kill.empty()) {
      EXPECT_TRUE(is_equivalent(v.status)) << v.mutant_id;
    } else {
      EXPECT_EQ(v.status, MutantStatus::killed) << v.mutant_id;
      EXPECT_EQ(v.input_id, first_kill) << v.mutant_id;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 5);

  const auto* s = r.selected();
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->original, ">=");
  EXPECT_EQ(s->replacement, ">");
  EXPECT_EQ(s->status, MutantStatus::selected);
  EXPECT_LT(std::get<StepCount>(r.final_tau).steps, std::get<StepCount>(r.original_tau).steps);

  // Loop-bound site.
  EXPECT_EQ(verdict(r, "ROR_1").status, MutantStatus::crash);   // i <= in_len
  EXPECT_EQ(verdict(r, "ROR_5").status, MutantStatus::equivalent_not_faster);  // i != in_len
  EXPECT_EQ(verdict(r, "ASR_2").status, MutantStatus::timeout);  // i *= 1
}

TEST(Optimize, ScaledBinaryToDecimalSelectsDoubling) {
  MiniBackend b;
  auto r = optimize(kAll, mini_fixture("b2tob10.mini"), load_inputs(fixture("m_scaled")), b);
  ASSERT_TRUE(r.selected_id);
  const auto* s = r.selected();
  EXPECT_EQ(s->op, OperatorKind::ASR);
  EXPECT_EQ(s->original, "+=");
  EXPECT_EQ(s->replacement, "*=");
  EXPECT_EQ(s->line, 30);
  EXPECT_EQ(std::get<StepCount>(r.original_tau).steps, 19923110u);
  EXPECT_EQ(std::get<StepCount>(r.final_tau).steps, 539u);
  EXPECT_TRUE(r.confirmed);
  EXPECT_EQ(r.verdicts.size(), 60u);
  EXPECT_EQ(verdict(r, "AOR_2").status, MutantStatus::killed);
  EXPECT_EQ(verdict(r, "AOR_2").input_id, "i0");
}

TEST(Optimize, KilledMutantsStopAtFirstFailingInput) {
  MiniBackend inner;
  CountingBackend b(inner);
  auto m = load_inputs(fixture("m_max"));
  auto r = optimize(kAll, mini_fixture("maxsearch.mini"), m, b);
  for (const auto& v : r.verdicts) {
    if (v.status == MutantStatus::compile_error) {
      EXPECT_EQ(v.executions, 0u);
      continue;
    }
    std::size_t expected = m.size();
    if (!is_equivalent(v.status)) {
      auto it = std::find(r.input_ids.begin(), r.input_ids.end(), v.input_id);
      ASSERT_NE(it, r.input_ids.end());
      expected = static_cast<std::size_t>(it - r.input_ids.begin()) + 1;
    }
    EXPECT_EQ(v.executions, expected) << v.mutant_id;
    EXPECT_EQ(b.runs_by_program[v.mutant_id], static_cast<int>(expected)) << v.mutant_id;
  }
}

TEST(Optimize, MemoizationDoesNotChangeTheReport) {
  MiniBackend b1, b2;
  auto src = mini_fixture("maxsearch.mini");
  auto m = load_inputs(fixture("m_max"));
  OptimizerConfig on, off;
  off.memoize_baseline = false;
  auto a = optimize(kAll, src, m, b1, on);
  auto c = optimize(kAll, src, m, b2, off);
  EXPECT_EQ(to_json(without_host(a)), to_json(without_host(c)));
  EXPECT_GT(b2.executions(), b1.executions());
}

TEST(Optimize, LineRangeRestrictsVerdicts) {
  MiniBackend b;
  OptimizerConfig c;
  c.lines = LineRange{30, 30};
  auto r = optimize(kAll, mini_fixture("b2tob10.mini"), load_inputs(fixture("m_scaled")), b, c);
  ASSERT_EQ(r.verdicts.size(), 4u);
  for (const auto& v : r.verdicts) EXPECT_EQ(v.line, 30);
  ASSERT_TRUE(r.selected_id);
  EXPECT_EQ(r.selected()->replacement, "*=");
}

TEST(Optimize, DuplicateMutantsAreFlagged) {
  MiniBackend b;
  auto r = optimize(parse_operator_list("ror,ror"), mini_fixture("census.mini"),
                    load_inputs(fixture("m_census")), b);
  ASSERT_EQ(r.verdicts.size(), 10u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_TRUE(r.verdicts[k].duplicate_of.empty());
    EXPECT_EQ(r.verdicts[k + 5].duplicate_of, r.verdicts[k].mutant_id);
  }
}

TEST(Optimize, FailedConfirmationRevertsToOriginal) {
  MiniBackend inner;
  CountingBackend b(inner);
  b.tamper = [](const Program& p, const InputSequence&, RunResult& r) {
    if (p.name == "confirm_candidate") r.output += "!";
  };
  auto r = optimize(kAll, mini_fixture("maxsearch.mini"), load_inputs(fixture("m_max")), b);
  EXPECT_FALSE(r.confirmed);
  EXPECT_FALSE(r.selected_id);
  EXPECT_EQ(r.selected_source, r.original_source);
  EXPECT_EQ(r.final_tau, r.original_tau);
  for (const auto& v : r.verdicts) EXPECT_NE(v.status, MutantStatus::selected);
}

// Invariants over random programs and inputs: the selected source reproduces
// the original outputs, every equivalent verdict is a true M-equivalence,
// tau only decreases, and repeated runs are identical.
TEST(OptimizeProperties, RandomPrograms) {
  mutopt::testing::RandomProgram gen(2024);
  int improved = 0;
  for (int k = 0; k < 30; ++k) {
    auto src = mini_unit(gen.generate());
    InputSet m;
    for (int j = 0; j < 3; ++j) {
      auto in = gen.input();
      m.entries.push_back(make_input("r" + std::to_string(j),
                                     std::vector<Int>(in.begin(), in.end())));
    }
    MiniBackend b;
    auto r = optimize(kAll, src, m, b);

    EXPECT_TRUE(confirm_equivalence(b, mini_unit(r.selected_source), src, m)) << src.text;
    EXPECT_LE(std::get<StepCount>(r.final_tau).steps, std::get<StepCount>(r.original_tau).steps);
    for (std::size_t h = 1; h < r.tau_history.size(); ++h)
      EXPECT_LT(std::get<StepCount>(r.tau_history[h].tau).steps,
                std::get<StepCount>(r.tau_history[h - 1].tau).steps);
    if (r.selected_id) {
      ++improved;
      EXPECT_EQ(r.tau_history.back().mutant_id, *r.selected_id);
      EXPECT_EQ(r.tau_history.back().tau, r.final_tau);
    }

    auto mutants = apply_all(kAll, src);
    ASSERT_EQ(mutants.size(), r.verdicts.size());
    for (std::size_t i = 0; i < mutants.size(); ++i) {
      const auto& v = r.verdicts[i];
      EXPECT_EQ(v.mutant_id, mutants[i].id);
      if (!is_equivalent(v.status)) continue;
      EXPECT_TRUE(confirm_equivalence(b, mini_unit(mutants[i].mutated_text), src, m))
          << v.mutant_id << "\n" << src.text;
    }

    MiniBackend again;
    EXPECT_EQ(without_host(optimize(kAll, src, m, again)), without_host(r));
  }
  EXPECT_GT(improved, 0);
}
