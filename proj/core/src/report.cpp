#include "repacc/report.hpp"

#include <cmath>
#include <cstdio>

#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

json Provenance::to_json() const {
  return {{"command", command}, {"config_digest", config_digest}, {"input_digests", input_digests}};
}

json results_document(const Provenance& prov, const json& results) {
  return {{"provenance", prov.to_json()}, {"results", results}};
}

std::string format_number(const json& v, int precision) {
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    char buf[64];
    if (d != 0.0 && std::abs(d) < std::pow(10.0, -precision))
      std::snprintf(buf, sizeof buf, "%.2e", d);
    else
      std::snprintf(buf, sizeof buf, "%.*f", precision, d);
    return buf;
  }
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i], precision);
    return s + "]";
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string render_markdown(const std::string& title, const json& document, const std::vector<ReportSection>& sections) {
  std::string md = "# " + title + "\n\n";
  const auto& prov = document.at("provenance");
  md += "- command: `" + prov.at("command").get<std::string>() + "`\n";
  md += "- config digest: `" + prov.at("config_digest").get<std::string>() + "`\n";
  for (const auto& [k, v] : prov.at("input_digests").items()) md += "- input `" + k + "`: `" + v.get<std::string>() + "`\n";
  const auto& results = document.at("results");
  for (const auto& s : sections) {
    md += "\n## " + s.title + "\n\n| quantity | value | key |\n|---|---|---|\n";
    for (const auto& l : s.lines) {
      const json::json_pointer ptr(l.pointer);
      if (!results.contains(ptr)) fail(Errc::MissingAsset, "report key " + l.pointer + " is absent from results");
      md += "| " + l.label + " | " + format_number(results.at(ptr), l.precision) + " | `" + l.pointer + "` |\n";
    }
  }
  return md;
}

void write_report(const std::filesystem::path& dir, const std::string& stem, const json& document,
                  const std::string& markdown) {
  io::write_json(dir / (stem + ".json"), document);
  io::write_file(dir / (stem + ".md"), markdown);
}

std::vector<ReportSection> paper_table_sections() {
  return {
      {"Paired tests",
       {{"W, C4a vs C5", "/wilcoxon_c4a_vs_c5/value", 1},
        {"p, C4a vs C5", "/wilcoxon_c4a_vs_c5/p_value", 4},
        {"W, C2a vs C5", "/wilcoxon_c2a_vs_c5/value", 1},
        {"p, C2a vs C5", "/wilcoxon_c2a_vs_c5/p_value", 4}}},
      {"Gradient",
       {{"slope of delta on C5", "/gradient/value", 3},
        {"slope 95% CI", "/gradient/ci", 3},
        {"R^2", "/gradient/extra/r2", 3},
        {"level slope (C4a on C5)", "/level/value", 3},
        {"level R^2", "/level/extra/r2", 4},
        {"identity gap", "/slope_identity_gap", 3}}},
      {"Low-baseline subjects",
       {{"n", "/low_baseline/n", 0},
        {"mean delta", "/low_baseline/mean_delta_c4a", 3},
        {"all positive", "/low_baseline/all_positive", 0}}},
      {"Resampling",
       {{"bootstrap 95% CI", "/bootstrap/ci", 3},
        {"bootstrap share of slopes below 0", "/bootstrap/extra/fraction_below_zero", 4},
        {"shuffle-delta null mean", "/permutation_shuffle_delta/extra/null_mean", 3},
        {"shuffle-delta null SD", "/permutation_shuffle_delta/extra/null_sd", 3},
        {"shuffle-delta p", "/permutation_shuffle_delta/p_value", 4},
        {"shuffle-level null mean", "/permutation_shuffle_level/extra/null_mean", 3}}},
      {"Composition regression",
       {{"baseline partial", "/composition_regression/coefficients/1/estimate", 3},
        {"baseline partial CI", "/composition_regression/coefficients/1/ci", 3},
        {"literal-fraction coefficient", "/composition_regression/coefficients/2/estimate", 3},
        {"adjusted R^2", "/composition_regression/adj_r2", 3}}},
  };
}

std::vector<ReportSection> run_sections(const json& results) {
  std::vector<ReportSection> out;
  ReportSection means{"Subject x condition panel means", {}};
  const auto& ms = results.at("means");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto label = ms[i].at("subject_id").get<std::string>() + " " + ms[i].at("condition").get<std::string>();
    means.lines.push_back({label, "/means/" + std::to_string(i) + "/panel_mean", 3});
  }
  out.push_back(std::move(means));
  if (results.contains("deltas")) {
    ReportSection tests{"Paired tests", {}};
    for (const auto& [k, v] : results["deltas"].items()) {
      if (!v.contains("wilcoxon")) continue;
      tests.lines.push_back({k + " W", "/deltas/" + k + "/wilcoxon/value", 1});
      tests.lines.push_back({k + " p", "/deltas/" + k + "/wilcoxon/p_value", 4});
    }
    if (!tests.lines.empty()) out.push_back(std::move(tests));
  }
  if (results.contains("agreement") && results["agreement"].contains("alpha")) {
    out.push_back({"Agreement", {{"Krippendorff alpha (ordinal)", "/agreement/alpha/value", 3}}});
  }
  if (results.contains("hedging")) {
    ReportSection h{"Hedging (broad)", {}};
    for (const auto& [k, _] : results["hedging"].items()) h.lines.push_back({k, "/hedging/" + k + "/broad", 3});
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace repacc
