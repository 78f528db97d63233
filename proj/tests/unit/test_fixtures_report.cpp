#include <gtest/gtest.h>

#include <functional>

#include "repacc/error.hpp"
#include "repacc/fixtures.hpp"
#include "repacc/report.hpp"
#include "repacc/text.hpp"
#include "test_util.hpp"

using namespace repacc;
using nlohmann::json;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Io;
}

const json& analysis() {
  static const json a = analyze_paper_table(load_default_paper_table());
  return a;
}

}  // namespace

TEST(PaperTable, ShapeOfShippedFixture) {
  const auto t = load_default_paper_table();
  EXPECT_EQ(t.rows.size(), 15u);
  EXPECT_EQ(t.analysis_rows().size(), 14u);
  EXPECT_EQ(t.low_baseline_rows().size(), 9u);
  for (const auto& r : t.low_baseline_rows()) EXPECT_LT(r.c5, t.low_baseline_max);
  EXPECT_EQ(t.means().size(), 14u * 4u);
  EXPECT_EQ(t.means(true).size(), 15u * 4u);
  EXPECT_EQ(t.digest().size(), 64u);
}

TEST(PaperTable, ParametricResultsMatchReferencePackages) {
  const auto& a = analysis();
  // scipy.stats.wilcoxon, exact distribution.
  EXPECT_DOUBLE_EQ(a["wilcoxon_c4a_vs_c5"]["value"].get<double>(), 11.0);
  EXPECT_NEAR(a["wilcoxon_c4a_vs_c5"]["p_value"].get<double>(), 0.0067138671875, 1e-12);
  EXPECT_DOUBLE_EQ(a["wilcoxon_c2a_vs_c5"]["value"].get<double>(), 10.0);
  EXPECT_NEAR(a["wilcoxon_c2a_vs_c5"]["p_value"].get<double>(), 0.0050048828125, 1e-12);
  // statsmodels OLS.
  EXPECT_NEAR(a["gradient"]["value"].get<double>(), -0.9595531092700592, 1e-10);
  EXPECT_NEAR(a["level"]["value"].get<double>(), 0.040446890729940545, 1e-10);
  EXPECT_NEAR(a["level"]["extra"]["r2"].get<double>(), 0.007865530122323383, 1e-10);
  EXPECT_NEAR(a["slope_identity_gap"].get<double>(), 0.0, 1e-12);
  const auto& c = a["composition_regression"]["coefficients"];
  EXPECT_NEAR(c[0]["estimate"].get<double>(), 1.95630424, 1e-8);
  EXPECT_NEAR(c[1]["estimate"].get<double>(), -0.87948812, 1e-8);
  EXPECT_NEAR(c[2]["estimate"].get<double>(), 2.32401419, 1e-8);
  EXPECT_NEAR(c[1]["se"].get<double>(), 0.11167503, 1e-8);
  EXPECT_NEAR(c[1]["ci"][0].get<double>(), -1.1252832, 1e-7);
  EXPECT_NEAR(c[1]["ci"][1].get<double>(), -0.63369303, 1e-7);
  EXPECT_NEAR(a["composition_regression"]["adj_r2"].get<double>(), 0.8668989147977282, 1e-10);
  EXPECT_EQ(a["low_baseline"]["n"], 9);
  EXPECT_NEAR(a["low_baseline"]["mean_delta_c4a"].get<double>(), 0.8911111111111109, 1e-12);
  EXPECT_TRUE(a["low_baseline"]["all_positive"].get<bool>());
  EXPECT_NEAR(a["fixture"]["max_published_delta_gap"].get<double>(), 0.01, 1e-9);
}

TEST(PaperTable, ResamplingIsSeededAndThreadInvariant) {
  HeadlineOptions o;
  o.iterations = 2000;
  const auto t = load_default_paper_table();
  const auto one = analyze_paper_table(t, o);
  o.threads = 4;
  const auto four = analyze_paper_table(t, o);
  EXPECT_EQ(one["bootstrap"], four["bootstrap"]);
  EXPECT_EQ(one["permutation_shuffle_delta"], four["permutation_shuffle_delta"]);
  EXPECT_EQ(one["permutation_shuffle_level"], four["permutation_shuffle_level"]);
  o.bootstrap_seed += 1;
  EXPECT_NE(analyze_paper_table(t, o)["bootstrap"]["ci"], one["bootstrap"]["ci"]);

  const auto& a = analysis();
  const double lo = a["bootstrap"]["ci"][0], hi = a["bootstrap"]["ci"][1];
  EXPECT_LT(lo, a["gradient"]["value"].get<double>());
  EXPECT_GT(hi, a["gradient"]["value"].get<double>());
  EXPECT_LT(hi, 0.0);
  EXPECT_NEAR(a["permutation_shuffle_level"]["extra"]["null_mean"].get<double>(), -1.0, 0.02);
  EXPECT_NEAR(a["permutation_shuffle_delta"]["extra"]["null_mean"].get<double>(), 0.0, 0.02);
}

TEST(PaperTable, MalformedFileIsRejected) {
  testutil::TempDir dir("fixture");
  io::write_json(dir.path() / "t.json", json{{"version", "x"}, {"rows", json::array({{{"label", "no id"}}})}});
  EXPECT_THROW(load_paper_table(dir.path() / "t.json"), std::exception);
}

TEST(Report, EveryFixtureKeyResolves) {
  const auto doc = results_document({"stats --fixture", "cfg", {{"fixture", "abc"}}}, analysis());
  const auto md = render_markdown("Fixture", doc, paper_table_sections());
  EXPECT_EQ(md.rfind("# Fixture\n", 0), 0u);
  EXPECT_NE(md.find("| W, C4a vs C5 | 11.0 | `/wilcoxon_c4a_vs_c5/value` |"), std::string::npos);
  EXPECT_NE(md.find("- input `fixture`: `abc`"), std::string::npos);
  EXPECT_NE(md.find("| all positive | yes |"), std::string::npos);

  auto sections = paper_table_sections();
  sections[0].lines.push_back({"missing", "/not_there/value", 3});
  EXPECT_EQ(code_of([&] { render_markdown("Fixture", doc, sections); }), Errc::MissingAsset);
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(format_number(json(0.0067138671875), 4), "0.0067");
  EXPECT_EQ(format_number(json(-0.00083), 3), "-8.30e-04");
  EXPECT_EQ(format_number(json(0.0), 3), "0.000");
  EXPECT_EQ(format_number(json(9), 3), "9");
  EXPECT_EQ(format_number(json::array({-1.2475, -0.7357}), 2), "[-1.25, -0.74]");
  EXPECT_EQ(format_number(json(true), 0), "yes");
}

TEST(Report, WriteProducesPair) {
  testutil::TempDir dir("report");
  write_report(dir.path(), "r", json{{"a", 1}}, "# r\n");
  EXPECT_EQ(io::read_file(dir.path() / "r.md"), "# r\n");
  EXPECT_EQ(io::read_json(dir.path() / "r.json")["a"], 1);
}
