#include "repacc/commands.hpp"

#include <algorithm>

#include "repacc/battery.hpp"
#include "repacc/corpus.hpp"
#include "repacc/digest.hpp"
#include "repacc/factstore.hpp"
#include "repacc/judging.hpp"
#include "repacc/report.hpp"
#include "repacc/specdoc.hpp"
#include "repacc/stats.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ChecksumMismatch: return kExitChecksumMismatch;
    case Errc::ProviderFailure: return kExitProviderExhaustion;
    default: return kExitPrecondition;
  }
}

SubjectManifest CommandContext::manifest() const { return SubjectManifest::load(config_dir / config.subjects); }

std::unique_ptr<ModelProvider> CommandContext::provider(const std::string& role) const {
  if (!config.providers.contains(role)) fail(Errc::MissingAsset, "config binds no " + role + " provider");
  return make_provider(config.providers[role], config_dir);
}

std::vector<std::unique_ptr<ModelProvider>> CommandContext::judges() const {
  std::vector<std::unique_ptr<ModelProvider>> out;
  for (const auto& spec : config.providers.value("judges", json::array())) out.push_back(make_provider(spec, config_dir));
  if (out.empty()) fail(Errc::MissingAsset, "config binds no judges");
  return out;
}

CommandContext load_context(const fs::path& workspace, const fs::path& config_path) {
  return {Workspace(workspace), RunConfig::load(config_path), config_path.parent_path(), nullptr};
}

namespace {

void note(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << '\n';
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  }
}

void require(const fs::path& p) {
  if (!fs::exists(p)) fail(Errc::MissingUpstream, p.string() + " is missing");
}

struct SubjectFiles {
  Corpus corpus;
  CorpusSplit split;
  Corpus training;
  Corpus heldout;
};

SubjectFiles load_subject(const Workspace& ws, const std::string& id) {
  const auto dir = ws.subject_dir(id);
  require(dir / "corpus.json");
  require(dir / "split.json");
  SubjectFiles f{Corpus::from_json(io::read_json(dir / "corpus.json")), CorpusSplit::from_json(io::read_json(dir / "split.json")),
                 {}, {}};
  f.training = training_part(f.corpus, f.split);
  f.heldout = heldout_part(f.corpus, f.split);
  return f;
}

std::vector<std::string> pick(const std::vector<std::string>& requested, const std::vector<std::string>& fallback) {
  return requested.empty() ? fallback : requested;
}

}  // namespace

json cmd_pipeline(const CommandContext& ctx, const std::string& subject_id) {
  const auto manifest = ctx.manifest();
  const auto& entry = manifest.find(subject_id);
  if (entry.corpus.empty() || !fs::exists(entry.corpus))
    fail(Errc::MissingUpstream, "stage import: corpus file for " + subject_id + " not found");
  auto generator = ctx.provider("generator");
  const auto policy = ctx.config.retry_policy();
  const auto dir = ctx.workspace.subject_dir(subject_id);

  ImportOptions iopt;
  iopt.title = entry.title;
  iopt.source_ref = entry.source_ref;
  iopt.single_chapter_fallback = entry.single_chapter_fallback;
  const auto corpus = stage("import", [&] { return import_corpus(io::read_file(entry.corpus), subject_id, iopt); });
  const auto split = stage("split", [&] { return split_corpus(corpus, entry.split_ratio); });
  const auto training = training_part(corpus, split);

  const auto vocab = Vocabulary::load_default();
  FactStore store(vocab);
  ExtractionOptions eopt;
  eopt.subject_name = entry.name;
  const auto extraction = stage("extract", [&] {
    auto r = extract_facts(training, *generator, vocab, eopt, nullptr, policy);
    for (const auto& [id, text] : r.passages) store.add_passage(id, text);
    for (const auto& op : r.ops) {
      try {
        store.apply(op);
      } catch (const Error& e) {
        r.rejected.push_back({"apply", e.code(), e.what()});
      }
    }
    return r;
  });
  note(ctx, subject_id + ": " + std::to_string(store.active_size()) + " facts");

  json index_json = nullptr;
  if (ctx.config.providers.contains("embedder")) {
    auto embedder = ctx.provider("embedder");
    index_json = stage("embed", [&] { return build_passage_index(extraction.passages, *embedder).to_json(); });
  }

  const auto facts = store.active_facts();
  AuthorOptions aopt;
  aopt.subject_name = entry.name;
  const auto layers = stage("author", [&] { return author_layers(facts, *generator, aopt, policy); });
  const auto brief =
      stage("compose", [&] { return compose_brief(layers, identity_fact_sample(facts), *generator, aopt, policy); });
  const SubjectNames names{entry.name, entry.aliases};
  const auto spec = assemble_spec(subject_id, layers, brief, false, names);
  const auto spec_anon = assemble_spec(subject_id, layers, brief, true, names);

  for (const auto& [pattern, ids] : layers.provenance) {
    std::vector<std::string> known;
    for (const auto& id : ids)
      if (store.find(id)) known.push_back(id);
    if (!known.empty()) store.link(pattern, known);
  }

  io::write_json(dir / "corpus.json", corpus.to_json());
  io::write_json(dir / "split.json", split.to_json());
  store.save(dir / "facts");
  if (!index_json.is_null()) io::write_json(dir / "passage_index.json", index_json);
  spec.save(dir / "spec");
  spec_anon.save(dir / "spec_anon");
  json rejected = json::array();
  for (const auto& r : extraction.rejected)
    rejected.push_back({{"batch", r.batch}, {"code", std::string(errc_name(r.code))}, {"detail", r.detail}});

  json summary = {{"subject_id", subject_id},
                  {"chapters", corpus.chapters.size()},
                  {"words", corpus.word_count},
                  {"training", split.training},
                  {"heldout", split.heldout},
                  {"split_digest", split.split_digest},
                  {"facts", store.active_size()},
                  {"journal_length", store.journal_size()},
                  {"extraction_rejections", rejected},
                  {"author_warnings", layers.warnings},
                  {"spec", spec.manifest()},
                  {"spec_anonymized", spec_anon.manifest()}};
  io::write_json(dir / "pipeline.json", summary);
  return summary;
}

json cmd_battery(const CommandContext& ctx, const std::string& subject_id) {
  const auto manifest = ctx.manifest();
  const auto& entry = manifest.find(subject_id);
  const auto files = load_subject(ctx.workspace, subject_id);
  auto generator = ctx.provider("generator");
  BatteryConfig bc;
  bc.subject_id = subject_id;
  bc.subject_name = entry.name;
  bc.batches = ctx.config.battery.batches;
  bc.per_batch = ctx.config.battery.per_batch;
  bc.window_chars = ctx.config.battery.window_chars;
  GenerationLog log;
  const auto raw = generate_battery(files.heldout.chapters, *generator, bc, &log, ctx.config.retry_policy());
  const auto capped = dedup_and_cap(raw, CategoryTargets::load_default());
  FreezeOptions fo;
  fo.override_leaks = ctx.config.battery.override_leaks;
  fo.n_gram = ctx.config.battery.leak_n;
  const auto frozen = freeze(capped, files.heldout.chapters, fo);
  const auto dir = ctx.workspace.subject_dir(subject_id);
  io::write_json(dir / "battery.json", frozen.to_json());
  json windows = json::array();
  for (const auto& w : log.windows)
    windows.push_back({{"batch", w.batch}, {"begin", w.begin}, {"end", w.end}, {"quota", w.quota}});
  io::write_json(dir / "battery_generation.json",
                 {{"raw_questions", raw.questions().size()}, {"windows", windows}, {"dropped", log.dropped}});
  return {{"subject_id", subject_id},
          {"questions", frozen.questions().size()},
          {"raw_questions", raw.questions().size()},
          {"checksum", frozen.checksum()},
          {"category_counts", frozen.category_counts()},
          {"leak_violations", frozen.leak_violations()}};
}

namespace {

struct LoadedSubject {
  SubjectEntry entry;
  SubjectFiles files;
  SpecDocument spec;
  SpecDocument spec_anon;
  std::vector<Fact> facts;
  Battery battery;
};

LoadedSubject load_for_run(const CommandContext& ctx, const SubjectEntry& entry) {
  const auto dir = ctx.workspace.subject_dir(entry.id);
  LoadedSubject s{entry, load_subject(ctx.workspace, entry.id), {}, {}, {}, {}};
  require(dir / "spec");
  require(dir / "spec_anon");
  require(dir / "facts");
  require(dir / "battery.json");
  s.spec = SpecDocument::load(dir / "spec");
  s.spec_anon = SpecDocument::load(dir / "spec_anon");
  s.facts = FactStore::load(dir / "facts", Vocabulary::load_default()).active_facts();
  s.battery = load_battery(dir / "battery.json", &s.files.heldout.chapters);
  return s;
}

}  // namespace

RunLedger cmd_run(const CommandContext& ctx, const RunRequest& req) {
  ctx.workspace.lock_config(ctx.config);
  const auto manifest = ctx.manifest();
  const auto subject_ids = pick(req.subjects, manifest.ids());
  std::vector<ConditionId> conditions;
  for (const auto& c : pick(req.conditions, ctx.config.conditions)) conditions.push_back(ConditionId::parse(c));

  std::vector<LoadedSubject> loaded;
  for (const auto& id : subject_ids) loaded.push_back(load_for_run(ctx, manifest.find(id)));

  const auto run_dir = ctx.workspace.run_dir(ctx.config.run_id);
  auto needs = [&](ConditionId::Base b) {
    return std::any_of(conditions.begin(), conditions.end(), [&](const ConditionId& c) { return c.base == b; });
  };
  std::optional<DerangementMap> v1, v2;
  if (needs(ConditionId::Base::C2cV2)) {
    v2 = derange(subject_ids, DerangementScheme::V2Random, ctx.config.seed_derangement);
    io::write_json(run_dir / "derangement_v2.json", v2->to_json());
  }
  if (needs(ConditionId::Base::C2cV1)) {
    const auto table = load_fixed_table(io::data_dir() / "wrong_spec_v1.json");
    v1 = derange(subject_ids, DerangementScheme::V1Fixed, std::nullopt, &table);
    io::write_json(run_dir / "derangement_v1.json", v1->to_json());
  }

  std::map<std::string, const SpecDocument*> anon;
  for (const auto& s : loaded) anon[s.entry.id] = &s.spec_anon;

  std::vector<SubjectAssets> assets(loaded.size());
  std::vector<SubjectRun> runs;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const auto& s = loaded[i];
    auto& a = assets[i];
    a.subject_id = s.entry.id;
    a.subject_name = s.entry.name;
    a.heldout_chapter_ids.insert(s.files.split.heldout.begin(), s.files.split.heldout.end());
    a.spec = &s.spec;
    a.facts = s.facts;
    a.training = &s.files.training;
    for (const auto& [sys, path] : s.entry.retrieval) a.retrieval[sys] = RetrievalLog::load(path);
    a.specs_by_subject = anon;
    a.derangement_v1 = v1 ? &*v1 : nullptr;
    a.derangement_v2 = v2 ? &*v2 : nullptr;
    runs.push_back({&a, &s.battery});
  }

  auto responder = ctx.provider("responder");
  responder->set_params(kStudyParams);
  MatrixOptions mo;
  mo.run.budget_tokens = ctx.config.context_budget;
  mo.run.policy = ctx.config.retry_policy();
  mo.run.workers = ctx.config.workers;
  mo.resume = req.resume;
  mo.cell_limit = req.cell_limit;
  CallLedger calls;
  auto ledger = run_matrix(ctx.workspace.runs_root(), ctx.config.run_id, runs, conditions, *responder, mo, &calls);
  note(ctx, "cells completed " + std::to_string(ledger.count(CellStatus::Completed)) + ", skipped " +
                std::to_string(ledger.count(CellStatus::Skipped)) + ", excluded " +
                std::to_string(ledger.count(CellStatus::Excluded)) + ", pending " +
                std::to_string(ledger.count(CellStatus::Pending)));
  return ledger;
}

json cmd_judge(const CommandContext& ctx, const RunRequest& req) {
  ctx.workspace.lock_config(ctx.config);
  const auto manifest = ctx.manifest();
  const auto run_dir = ctx.workspace.run_dir(ctx.config.run_id);
  const auto subject_ids = pick(req.subjects, manifest.ids());
  const auto conditions = pick(req.conditions, ctx.config.conditions);
  auto owned = ctx.judges();
  std::vector<ModelProvider*> judges;
  for (auto& j : owned) judges.push_back(j.get());
  PanelDef panel = ctx.config.panel;
  if (panel.primary.empty())
    for (auto* j : judges) panel.primary.push_back(j->id());

  PanelOptions po;
  po.policy = ctx.config.retry_policy();
  po.workers = ctx.config.workers;
  ScoreCube cube;
  cube.panel = panel;
  std::size_t judged = 0, reused = 0, absent = 0;
  for (const auto& sid : subject_ids) {
    const auto battery = load_battery(ctx.workspace.subject_dir(sid) / "battery.json");
    for (const auto& cond : conditions) {
      const auto cell = cell_path(ctx.workspace.runs_root(), ctx.config.run_id, sid, cond);
      require(cell);
      const auto file = load_cell(cell);
      if (file.excluded) continue;
      if (file.manifest.at("battery_checksum") != battery.checksum())
        fail(Errc::ChecksumMismatch, cell.string() + " was answered against a different battery");
      const auto jpath = judgment_path(run_dir, sid, cond);
      std::vector<Judgment> js;
      if (fs::exists(jpath)) {
        js = load_judgments(jpath, battery.checksum());
        for (const auto& q : battery.questions()) cube.set_tier(sid, q.qid, q.tier);
        ++reused;
      } else {
        auto res = run_panel(judge_items(battery, file.records), judges, panel, po);
        js = std::move(res.judgments);
        save_judgments(jpath, battery.checksum(), js);
        cube.merge(res.cube);
        ++judged;
      }
      for (const auto& g : js) {
        cube.set({g.subject_id, g.condition, g.qid}, g.judge_id, g.score);
        if (!g.score) ++absent;
      }
    }
  }
  io::write_json(run_dir / "cube.json", cube.to_json());
  return {{"cells_judged", judged}, {"cells_reused", reused}, {"absent_judgments", absent}, {"scores", cube.size()}};
}

namespace {

const std::vector<std::pair<std::string, std::string>> kDeltaPairs = {
    {"C4a", "C5"}, {"C2a", "C5"}, {"C4", "C5"},       {"C4a", "C4"}, {"C9", "C5"},
    {"C8", "C5"},  {"C9", "C8"},  {"C2a", "C2c_v2"}, {"C2a", "C2c_v1"}};

}  // namespace

json cmd_stats(const CommandContext& ctx, const ReportFormats& formats) {
  const auto run_dir = ctx.workspace.run_dir(ctx.config.run_id);
  const auto lock = run_dir / "config.lock.json";
  require(lock);
  if (io::read_json(lock).at("digest") != ctx.config.digest())
    fail(Errc::InvalidArgument, "config differs from the run's lock; declare a new run_id");
  require(run_dir / "cube.json");
  const auto cube_text = io::read_file(run_dir / "cube.json");
  const auto cube = ScoreCube::from_json(json::parse(cube_text));

  json results;
  const auto means = stats::aggregate(cube);
  results["means"] = json::array();
  for (const auto& m : means) results["means"].push_back(m.to_json());

  results["deltas"] = json::object();
  for (const auto& [a, b] : kDeltaPairs) {
    const auto series = stats::delta(means, a, b);
    if (series.pairs.empty()) continue;
    json d = series.to_json();
    try {
      d["wilcoxon"] = stats::wilcoxon_signed_rank(series).to_json();
    } catch (const Error& e) {
      d["wilcoxon_unavailable"] = e.what();
    }
    results["deltas"][a + "_minus_" + b] = d;
  }

  const auto conds = cube.conditions();
  if (conds.count("C5") && conds.count("C4a")) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& s : cube.subjects()) {
      auto p = stats::paired_question_means(cube, s, "C5", "C4a");
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    if (!pairs.empty()) {
      results["transitions_c5_to_c4a"] = stats::anchor_transitions(pairs).to_json();
      results["improvement_c5_to_c4a"] = stats::improvement_rates(pairs).to_json();
    }
    const auto series = stats::delta(means, "C4a", "C5");
    if (series.pairs.size() >= 3) {
      std::vector<double> x;
      for (const auto& [s, _] : series.pairs) x.push_back(stats::find_mean(means, s, "C5")->panel_mean);
      try {
        results["gradient"] = stats::linear_regression(x, series.values()).result().to_json();
      } catch (const Error& e) {
        results["gradient_unavailable"] = e.what();
      }
    }
  }

  results["agreement"] = json::object();
  if (cube.panel.primary.size() >= 2) {
    try {
      results["agreement"]["alpha"] =
          stats::krippendorff_alpha_ordinal(stats::rating_matrix(cube, cube.panel.primary)).to_json();
    } catch (const Error& e) {
      results["agreement"]["alpha_unavailable"] = e.what();
    }
  }

  // Response-side audits read the stored cells.
  const auto patterns = stats::RefusalPatterns::load_default();
  results["hedging"] = json::object();
  std::vector<stats::LengthScoreItem> lengths;
  std::map<std::string, std::string> input_digests = {{"cube", sha256_hex(cube_text)}};
  for (const auto& cond : conds) {
    std::vector<std::string> texts;
    for (const auto& sid : cube.subjects()) {
      const auto path = cell_path(ctx.workspace.runs_root(), ctx.config.run_id, sid, cond);
      if (!fs::exists(path)) continue;
      const auto file = load_cell(path);
      input_digests["cell:" + sid + "/" + cond] = sha256_hex(io::read_file(path));
      const auto qmeans = stats::question_panel_means(cube, sid, cond);
      for (const auto& r : file.records) {
        if (!r.call.ok()) continue;
        texts.push_back(r.response_text);
        if (auto it = qmeans.find(r.qid); it != qmeans.end()) lengths.push_back({cond, r.response_text, it->second});
      }
    }
    if (texts.empty()) continue;
    results["hedging"][cond] = {{"broad", stats::hedging_rate(texts, patterns, stats::RefusalMode::Broad)},
                                {"strict", stats::hedging_rate(texts, patterns, stats::RefusalMode::Strict)},
                                {"n", texts.size()},
                                {"patterns_version", patterns.version}};
  }
  results["length_score"] = json::object();
  std::map<std::string, std::vector<stats::LengthScoreItem>> by_group;
  for (auto& it : lengths) by_group[it.group].push_back(it);
  for (const auto& [g, items] : by_group) {
    try {
      results["length_score"][g] = stats::length_score_correlation(items).at(g).to_json();
    } catch (const Error& e) {
      results["length_score"][g] = {{"unavailable", e.what()}};
    }
  }

  const Provenance prov{"stats --run-id " + ctx.config.run_id, ctx.config.digest(), input_digests};
  const auto doc = results_document(prov, results);
  if (formats.json) io::write_json(run_dir / "results.json", doc);
  if (formats.markdown)
    io::write_file(run_dir / "report.md", render_markdown("Run " + ctx.config.run_id, doc, run_sections(results)));
  return doc;
}

fs::path resolve_fixture(const std::string& name_or_path) {
  if (name_or_path == "paper-table-d1") return io::data_dir() / "fixtures" / "paper_table_d1.json";
  return name_or_path;
}

json cmd_stats_fixture(const fs::path& fixture, const fs::path& out_dir, const HeadlineOptions& opts,
                       const ReportFormats& formats) {
  require(fixture);
  const auto table = load_paper_table(fixture);
  const auto results = analyze_paper_table(table, opts);
  const json options = {{"iterations", opts.iterations},
                        {"bootstrap_seed", opts.bootstrap_seed},
                        {"permutation_seed", opts.permutation_seed}};
  const Provenance prov{"stats --fixture " + fixture.filename().string(), sha256_hex(canonical_json(options)),
                        {{"fixture", sha256_hex(io::read_file(fixture))}}};
  const auto doc = results_document(prov, results);
  if (formats.json) io::write_json(out_dir / "fixture_results.json", doc);
  if (formats.markdown)
    io::write_file(out_dir / "fixture_report.md", render_markdown("Per-subject table analysis", doc, paper_table_sections()));
  return doc;
}

json cmd_calibrate(const CommandContext& ctx) {
  const auto fixtures = load_default_calibration_fixtures();
  json out = json::array();
  for (auto& judge : ctx.judges()) {
    const auto rep = calibration_diagnostic(*judge, fixtures, ctx.config.calibration_repetitions, ctx.config.calibration,
                                            ctx.config.retry_policy());
    out.push_back(rep.to_json());
  }
  io::write_json(ctx.workspace.run_dir(ctx.config.run_id) / "calibration.json", out);
  return out;
}

}  // namespace repacc
