#include "repacc/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/stats/regression.hpp"
#include "repacc/stats/resampling.hpp"
#include "repacc/stats/wilcoxon.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::vector<PaperTableRow> PaperTable::analysis_rows() const {
  std::vector<PaperTableRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const PaperTableRow& r) { return !r.control; });
  return out;
}

std::vector<PaperTableRow> PaperTable::low_baseline_rows() const {
  auto out = analysis_rows();
  out.erase(std::remove_if(out.begin(), out.end(), [&](const PaperTableRow& r) { return r.c5 > low_baseline_max; }),
            out.end());
  return out;
}

std::vector<stats::SubjectConditionMean> PaperTable::means(bool include_control) const {
  std::vector<stats::SubjectConditionMean> out;
  for (const auto& r : rows) {
    if (r.control && !include_control) continue;
    for (const auto& [cond, v] : {std::pair{"C5", r.c5}, {"C4", r.c4}, {"C2a", r.c2a}, {"C4a", r.c4a}})
      out.push_back({r.subject_id, cond, {}, v, questions_per_subject, 0});
  }
  return out;
}

std::string PaperTable::digest() const {
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({r.subject_id, r.c5, r.c4, r.c2a, r.c4a, r.literal_count ? json(*r.literal_count) : json(nullptr)});
  return sha256_hex(canonical_json(j));
}

PaperTable load_paper_table(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  PaperTable t;
  t.version = j.value("version", "");
  t.questions_per_subject = j.value("questions_per_subject", std::size_t{39});
  t.low_baseline_max = j.value("low_baseline_max", 2.0);
  for (const auto& r : j.at("rows")) {
    PaperTableRow row;
    row.subject_id = r.at("subject_id");
    row.label = r.value("label", row.subject_id);
    row.c5 = r.at("c5");
    row.c4 = r.at("c4");
    row.c2a = r.at("c2a");
    row.c4a = r.at("c4a");
    row.published_delta_spec = r.value("published_delta_spec", row.c2a - row.c5);
    row.published_delta_c4a = r.value("published_delta_c4a", row.c4a - row.c5);
    row.anchor_crossed = r.value("anchor_crossed", "");
    if (r.contains("literal_count") && !r["literal_count"].is_null()) row.literal_count = r["literal_count"].get<int>();
    row.control = r.value("control", false);
    t.rows.push_back(std::move(row));
  }
  if (t.analysis_rows().size() < 3) fail(Errc::Parse, p.string() + ": too few analysis rows");
  return t;
}

PaperTable load_default_paper_table() { return load_paper_table(io::data_dir() / "fixtures" / "paper_table_d1.json"); }

json analyze_paper_table(const PaperTable& table, const HeadlineOptions& opts) {
  const auto rows = table.analysis_rows();
  std::vector<double> c5, c4a, d_c4a, d_spec, literal;
  double max_gap = 0.0;
  for (const auto& r : rows) {
    c5.push_back(r.c5);
    c4a.push_back(r.c4a);
    d_c4a.push_back(r.c4a - r.c5);
    d_spec.push_back(r.c2a - r.c5);
    max_gap = std::max({max_gap, std::abs(d_c4a.back() - r.published_delta_c4a),
                        std::abs(d_spec.back() - r.published_delta_spec)});
    if (r.literal_count) literal.push_back(static_cast<double>(*r.literal_count) / static_cast<double>(table.questions_per_subject));
  }

  json out;
  out["fixture"] = {{"version", table.version}, {"digest", table.digest()}, {"n", rows.size()},
                    {"max_published_delta_gap", max_gap}};

  const auto means = table.means();
  const auto w_c4a = stats::wilcoxon_signed_rank(stats::delta(means, "C4a", "C5"));
  const auto w_c2a = stats::wilcoxon_signed_rank(stats::delta(means, "C2a", "C5"));
  out["wilcoxon_c4a_vs_c5"] = w_c4a.to_json();
  out["wilcoxon_c2a_vs_c5"] = w_c2a.to_json();

  const auto grad = stats::linear_regression(c5, d_c4a);
  const auto level = stats::linear_regression(c5, c4a);
  out["gradient"] = grad.result().to_json();
  out["level"] = level.result().to_json();
  out["slope_identity_gap"] = grad.slope - (level.slope - 1.0);

  std::vector<double> low;
  for (const auto& r : table.low_baseline_rows()) low.push_back(r.c4a - r.c5);
  double low_sum = 0.0;
  for (double d : low) low_sum += d;
  out["low_baseline"] = {{"n", low.size()},
                         {"mean_delta_c4a", low.empty() ? 0.0 : low_sum / static_cast<double>(low.size())},
                         {"all_positive", std::all_of(low.begin(), low.end(), [](double d) { return d > 0.0; })}};

  stats::ResampleOptions ro{opts.iterations, opts.bootstrap_seed, 8, opts.threads};
  const auto boot = stats::bootstrap_slope(c5, d_c4a, ro);
  out["bootstrap"] = boot.result.to_json();
  ro.seed = opts.permutation_seed;
  out["permutation_shuffle_delta"] =
      stats::permutation_slope(c5, c4a, stats::PermutationScheme::ShuffleDelta, ro).result.to_json();
  out["permutation_shuffle_level"] =
      stats::permutation_slope(c5, c4a, stats::PermutationScheme::ShuffleLevel, ro).result.to_json();

  if (literal.size() == rows.size())
    out["composition_regression"] = stats::multiple_regression(d_c4a, {c5, literal}, {"baseline", "literal_fraction"}).to_json();
  return out;
}

}  // namespace repacc
