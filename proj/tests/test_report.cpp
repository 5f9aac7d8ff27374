#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mutopt/report.hpp"
#include "support/oracles.hpp"

using namespace mutopt;
using mutopt::testing::fixture;
using mutopt::testing::read_text;
namespace fs = std::filesystem;

namespace {

OptimizationReport maxsearch_report() {
  MiniBackend b;
  auto src = tokenize(read_text(fixture("maxsearch.mini")), LanguageTag::mini);
  auto r = optimize(parse_operator_list("ror,asr,aor"), src, load_inputs(fixture("m_max")), b);
  r.config.source = "maxsearch.mini";
  return r;
}

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("mutopt-report-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST(LoadInputs, DirectoryIsSortedByName) {
  auto m = load_inputs(fixture("m_full"));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.entries[0].id, "i0");
  EXPECT_EQ(m.entries[1].id, "i1");
  EXPECT_EQ(m.entries[2].id, "i30");
  EXPECT_EQ(parse_integers(m.entries[2].bytes, "i30").size(), 31u);
}

TEST(LoadInputs, ManifestWithCommentsAndMissingFiles) {
  auto dir = temp_dir("manifest");
  write(dir / "b.in", "2\n");
  write(dir / "a.in", "1\n");
  write(dir / "list.txt", "# inputs\nb.in\n\n  a.in  # first\n");
  auto m = load_inputs(dir / "list.txt");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.entries[0].id, "a");
  EXPECT_EQ(m.entries[1].bytes, "2\n");

  write(dir / "bad.txt", "a.in\nmissing.in\n");
  EXPECT_THROW(load_inputs(dir / "bad.txt"), InputSetError);
  write(dir / "dup.txt", "a.in\na.in\n");
  EXPECT_THROW(load_inputs(dir / "dup.txt"), InputSetError);
  EXPECT_THROW(load_inputs(dir / "nope"), InputSetError);

  fs::create_directories(dir / "empty");
  EXPECT_TRUE(load_inputs(dir / "empty").empty());
  fs::remove_all(dir);
}

TEST(Patch, SingleLineHunk) {
  EXPECT_EQ(make_patch("a\nb\nc\n", "a\nB\nc\n", "f"),
            "--- a/f\n+++ b/f\n@@ -2,1 +2,1 @@\n-b\n+B\n");
  EXPECT_EQ(make_patch("x\n", "x\n", "f"), "");
}

TEST(ReportJson, RoundTripPreservesEverything) {
  auto r = maxsearch_report();
  auto j = to_json(r);
  auto back = report_from_json(j);
  EXPECT_EQ(back, r);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  auto reparsed = report_from_json(json::parse(j.dump(2)));
  EXPECT_EQ(reparsed, r);
}

TEST(ReportJson, FieldsAreConsistent) {
  auto r = maxsearch_report();
  auto j = to_json(r);
  EXPECT_DOUBLE_EQ(j["speedup"].get<double>(),
                   j["original_tau"].get<double>() / j["final_tau"].get<double>());
  EXPECT_EQ(j["selected"]["replacement"], ">");
  EXPECT_EQ(j["selected"]["mutant_id"], *r.selected_id);

  int total = 0;
  for (const auto& [status, n] : j["verdict_counts"].items()) {
    EXPECT_TRUE(parse_mutant_status(status)) << status;
    total += n.get<int>();
  }
  EXPECT_EQ(total, static_cast<int>(j["verdicts"].size()));

  int kills = 0;
  for (const auto& [id, n] : j["inputs"]["kills_by_input"].items()) kills += n.get<int>();
  EXPECT_EQ(kills, j["verdict_counts"].value("killed", 0));
  EXPECT_EQ(j["inputs"]["ids"], (std::vector<std::string>{"a_dup", "b_ascending", "c_single"}));

  EXPECT_NE(j["patch"].get<std::string>().find("+    if (in[i] > max) {"), std::string::npos);
  EXPECT_EQ(j["config"]["backend"], "mini");
  EXPECT_EQ(j["config"]["threshold"], 0.0);
  EXPECT_TRUE(j["host"].contains("timestamp"));
}

TEST(ReportJson, NoImprovementHasNullSelection) {
  MiniBackend b;
  auto src = tokenize(read_text(fixture("no_operators.mini")), LanguageTag::mini);
  auto r = optimize(parse_operator_list("ror,asr,aor"), src, load_inputs(fixture("m_census")), b);
  auto j = to_json(r);
  EXPECT_TRUE(j["selected"].is_null());
  EXPECT_EQ(j["original_tau"], j["final_tau"]);
  EXPECT_DOUBLE_EQ(j["speedup"].get<double>(), 1.0);
  EXPECT_EQ(j["patch"], "");
  EXPECT_EQ(j["selected_source"], j["original_source"]);
}

TEST(Summary, ListsEveryMutantAndSelection) {
  auto r = maxsearch_report();
  std::ostringstream out;
  print_summary(r, out);
  auto text = out.str();
  for (const auto& v : r.verdicts) EXPECT_NE(text.find(v.mutant_id), std::string::npos);
  EXPECT_NE(text.find("selected: " + *r.selected_id), std::string::npos);
}

TEST(Summary, WriteReportCreatesFile) {
  auto dir = temp_dir("write");
  auto r = maxsearch_report();
  std::ostringstream out;
  write_report(r, dir / "r.json", out);
  EXPECT_EQ(report_from_json(json::parse(read_text(dir / "r.json"))), r);
  EXPECT_FALSE(out.str().empty());
  fs::remove_all(dir);
}
