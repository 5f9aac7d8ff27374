#include <gtest/gtest.h>

#include <map>
#include <random>

#include "json.hpp"
#include "mutopt/minilang.hpp"
#include "mutopt/mutation.hpp"
#include "support/oracles.hpp"
#include "support/random_programs.hpp"

using namespace mutopt;
using mutopt::testing::fixture;
using mutopt::testing::read_text;

namespace {

SourceUnit load(const char* rel) {
  std::string_view name(rel);
  return tokenize(read_text(fixture(rel)),
                  name.ends_with(".mini") ? LanguageTag::mini : LanguageTag::c_like);
}

const std::vector<MutationOperator> kAll{relational_operator_replacement(),
                                         shortcut_assignment_replacement(),
                                         arithmetic_operator_replacement()};

}  // namespace

TEST(MutationOperator, CodomainsAreComplements) {
  for (const auto& op : kAll) {
    for (const auto& x : op.domain) {
      auto co = op.codomain(x);
      EXPECT_EQ(co.size(), op.domain.size() - 1);
      EXPECT_EQ(std::count(co.begin(), co.end(), x), 0);
    }
  }
  EXPECT_EQ(relational_operator_replacement().codomain(">=").size(), 5u);
  EXPECT_EQ(shortcut_assignment_replacement().codomain("+=").size(), 4u);
  EXPECT_EQ(arithmetic_operator_replacement().codomain("+").size(), 4u);
}

TEST(MutationOperator, RegistryAndListParsing) {
  EXPECT_EQ(operator_registry().size(), 3u);
  auto ops = parse_operator_list("ror, ASR,aor");
  ASSERT_EQ(ops.size(), 3u);
  EXPECT_EQ(ops[1].kind, OperatorKind::ASR);
  EXPECT_TRUE(parse_operator_list("").empty());
  EXPECT_THROW(parse_operator_list("ror,sdl"), std::invalid_argument);
}

TEST(Mutate, IncrementToDoubling) {
  auto u = tokenize("i = 1;\nwhile (i <= n) {\n    i += 2;\n}\n", LanguageTag::mini);
  auto ms = mutate(shortcut_assignment_replacement(), u);
  ASSERT_EQ(ms.size(), 4u);
  auto it = std::find_if(ms.begin(), ms.end(),
                         [](const Mutant& m) { return m.replacement == "*="; });
  ASSERT_NE(it, ms.end());
  EXPECT_NE(it->mutated_text.find("i *= 2;"), std::string::npos);
  EXPECT_EQ(it->id, "ASR_2");
  EXPECT_EQ(it->site.line, 3);
}

TEST(Mutate, MaxSearchSnippetStrictComparison) {
  auto u = load("snippets/max_search.java");
  auto ms = mutate(relational_operator_replacement(), u);
  EXPECT_EQ(ms.size(), 10u);
  auto it = std::find_if(ms.begin(), ms.end(), [](const Mutant& m) {
    return m.original == ">=" && m.replacement == ">";
  });
  ASSERT_NE(it, ms.end());
  EXPECT_NE(it->mutated_text.find("if (arr[i] > max)"), std::string::npos);
}

TEST(Mutate, NoSitesGivesEmptyList) {
  auto u = tokenize("x = in[0];\nprint(x);\n", LanguageTag::mini);
  EXPECT_TRUE(mutate(relational_operator_replacement(), u).empty());
}

TEST(Mutate, CensusFileCounts) {
  auto u = load("census.mini");
  EXPECT_EQ(mutate(relational_operator_replacement(), u).size(), 5u);
  EXPECT_EQ(mutate(shortcut_assignment_replacement(), u).size(), 4u);
  EXPECT_EQ(mutate(arithmetic_operator_replacement(), u).size(), 4u);
  EXPECT_EQ(apply_all(kAll, u).size(), 13u);
}

TEST(Mutate, DeterministicOrderAndIds) {
  auto u = tokenize("a = b < c; d = e >= f;", LanguageTag::c_like);
  auto ms = mutate(relational_operator_replacement(), u);
  std::vector<std::string> got;
  for (const auto& m : ms) got.push_back(m.id + ":" + m.original + ">" + m.replacement);
  EXPECT_EQ(got, (std::vector<std::string>{
                     "ROR_1:<><=", "ROR_2:<>>", "ROR_3:<>>=", "ROR_4:<>==", "ROR_5:<>!=",
                     "ROR_6:>=><", "ROR_7:>=><=", "ROR_8:>=>>", "ROR_9:>=>==",
                     "ROR_10:>=>!="}));
}

TEST(Mutate, LineRangeRestrictsSites) {
  auto u = load("b2tob10.mini");
  auto ms = mutate(shortcut_assignment_replacement(), u, LineRange{30, 30});
  ASSERT_EQ(ms.size(), 4u);
  for (const auto& m : ms) EXPECT_EQ(m.site.line, 30);
  // Ids match the unrestricted run.
  auto all = mutate(shortcut_assignment_replacement(), u);
  for (const auto& m : ms) {
    auto it = std::find_if(all.begin(), all.end(), [&](const Mutant& a) { return a.id == m.id; });
    ASSERT_NE(it, all.end());
    EXPECT_EQ(it->mutated_text, m.mutated_text);
  }
  EXPECT_EQ(ms[1].id, "ASR_22");
}

TEST(Mutate, ReplacementThatWouldOpenACommentIsDropped) {
  auto u = tokenize("x = a+*p;", LanguageTag::c_like);
  auto ms = mutate(arithmetic_operator_replacement(), u);
  for (const auto& m : ms) EXPECT_NE(m.replacement, "/");
  EXPECT_EQ(ms.size(), 3u);
}

TEST(ApplyAll, EmptyOperatorList) {
  EXPECT_TRUE(apply_all({}, load("b2tob10.mini")).empty());
}

TEST(ApplyAll, GoldenCensusOfFixtures) {
  auto golden = nlohmann::json::parse(read_text(fixture("golden/census.json")));
  for (const char* file : {"b2tob10.mini", "census.mini"}) {
    const auto& expected = golden[file]["mutants"];
    auto u = load(file);
    auto ms = apply_all(kAll, u);
    std::map<std::string, int> by_kind;
    for (const auto& m : ms) ++by_kind[std::string(to_string(m.op))];
    EXPECT_EQ(by_kind["ROR"], expected["ROR"].get<int>()) << file;
    EXPECT_EQ(by_kind["ASR"], expected["ASR"].get<int>()) << file;
    EXPECT_EQ(by_kind["AOR"], expected["AOR"].get<int>()) << file;
    EXPECT_EQ(static_cast<int>(ms.size()), expected["total"].get<int>()) << file;
  }
}

TEST(ApplyAll, DuplicateOperatorsGetDistinctIds) {
  auto u = load("census.mini");
  auto ms = apply_all({relational_operator_replacement(), relational_operator_replacement()}, u);
  ASSERT_EQ(ms.size(), 10u);
  std::set<std::string> ids;
  for (const auto& m : ms) ids.insert(m.id);
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_EQ(ms[0].mutated_text, ms[5].mutated_text);
  EXPECT_EQ(ms[5].id, "ROR_6");
}

TEST(MutantFile, NameCarriesStemIdAndExtension) {
  EXPECT_EQ(mutant_file_name("fixtures/b2tob10.mini", "ASR_3"), "b2tob10.ASR_3.mini");
}

// Properties over fixtures and random programs: each mutant differs from the
// original only at its site, reverts byte-for-byte, re-tokenizes, leaves
// comments and strings alone, and the count is the sum of codomain sizes
// over independently enumerated sites.
TEST(MutantProperties, HoldOverFixturesAndRandomPrograms) {
  std::vector<SourceUnit> units;
  for (const char* f : {"b2tob10.mini", "b2tob10.c", "maxsearch.mini", "census.mini",
                        "snippets/max_search.java", "snippets/power_progression.java"})
    units.push_back(load(f));
  units.push_back(tokenize("s = \"a+b>=c\"; x = y + 1; // z -= 2\n", LanguageTag::c_like));
  mutopt::testing::RandomProgram gen(7);
  for (int k = 0; k < 40; ++k) units.push_back(tokenize(gen.generate(), LanguageTag::mini));

  for (const auto& u : units) {
    auto ms = apply_all(kAll, u);

    std::size_t expected = 0;
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      const auto& t = u.tokens[i];
      if (t.kind == TokenKind::Relational) expected += 5;
      if (t.kind == TokenKind::ShortcutAssign) expected += 4;
      if (t.kind == TokenKind::Arithmetic && classify_binary_context(u.tokens, i))
        expected += 4;
    }
    EXPECT_EQ(ms.size(), expected);

    for (const auto& m : ms) {
      const auto& text = u.text;
      ASSERT_EQ(m.mutated_text.substr(0, m.site.span.begin), text.substr(0, m.site.span.begin));
      ASSERT_EQ(m.mutated_text.substr(m.mutated_span().end), text.substr(m.site.span.end));
      EXPECT_EQ(revert(m), text);
      EXPECT_NO_THROW(tokenize(m.mutated_text, u.language));
      for (const auto& t : u.tokens) {
        if (t.kind != TokenKind::Comment && t.kind != TokenKind::StringLiteral) continue;
        EXPECT_TRUE(m.site.span.end <= t.span.begin || m.site.span.begin >= t.span.end);
      }
    }
  }
}
