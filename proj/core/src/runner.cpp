#include "repacc/runner.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/prompts.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::string ConditionId::code() const {
  switch (base) {
    case Base::C5: return "C5";
    case Base::C2a: return "C2a";
    case Base::C2cV1: return "C2c_v1";
    case Base::C2cV2: return "C2c_v2";
    case Base::C4: return "C4";
    case Base::C4a: return "C4a";
    case Base::C8: return "C8";
    case Base::C9: return "C9";
    case Base::C1: return "C1_" + system + (native ? "_fullpipeline" : "");
    case Base::C3: return "C3_" + system + (native ? "_fullpipeline" : "");
  }
  return "?";
}

ConditionId ConditionId::parse(const std::string& code) {
  static const std::map<std::string, Base> fixed = {{"C5", Base::C5},      {"C2a", Base::C2a}, {"C2c_v1", Base::C2cV1},
                                                    {"C2c_v2", Base::C2cV2}, {"C4", Base::C4},   {"C4a", Base::C4a},
                                                    {"C8", Base::C8},      {"C9", Base::C9}};
  if (auto it = fixed.find(code); it != fixed.end()) return {it->second, {}, false};
  if ((code.rfind("C1_", 0) == 0 || code.rfind("C3_", 0) == 0) && code.size() > 3) {
    ConditionId c{code[1] == '1' ? Base::C1 : Base::C3, code.substr(3), false};
    const std::string suffix = "_fullpipeline";
    if (c.system.size() > suffix.size() && c.system.compare(c.system.size() - suffix.size(), suffix.size(), suffix) == 0) {
      c.native = true;
      c.system.resize(c.system.size() - suffix.size());
    }
    return c;
  }
  fail(Errc::InvalidArgument, "unknown condition code " + code);
}

bool ConditionId::uses_spec() const { return base == Base::C2a || base == Base::C4a || base == Base::C9 || base == Base::C3; }
bool ConditionId::uses_wrong_spec() const { return base == Base::C2cV1 || base == Base::C2cV2; }
bool ConditionId::uses_facts() const { return base == Base::C4 || base == Base::C4a; }
bool ConditionId::uses_corpus() const { return base == Base::C8 || base == Base::C9; }
bool ConditionId::uses_retrieval() const { return base == Base::C1 || base == Base::C3; }

std::string segment_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::Facts: return "facts";
    case SegmentKind::Corpus: return "corpus";
    case SegmentKind::Retrieval: return "retrieval";
    case SegmentKind::Spec: return "spec";
    case SegmentKind::WrongSpec: return "wrong_spec";
  }
  return "?";
}

std::string ContextBlock::render() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "\n\n";
    out += parts[i].text;
  }
  return out;
}

json ContextBlock::describe() const {
  json segs = json::array();
  for (const auto& p : parts) segs.push_back({{"kind", segment_name(p.kind)}, {"provenance", p.provenance}});
  return {{"segments", segs}, {"char_count", char_count}, {"token_estimate", token_estimate}};
}

RetrievalLog RetrievalLog::from_json(const json& j) {
  RetrievalLog log;
  log.system_id = j.at("system_id");
  for (const auto& e : j.at("entries")) log.by_qid[e.at("qid")] = e.at("facts").get<std::vector<std::string>>();
  return log;
}

RetrievalLog RetrievalLog::load(const std::filesystem::path& p) { return from_json(io::read_json(p)); }

json RetrievalLog::to_json() const {
  json entries = json::array();
  for (const auto& [qid, facts] : by_qid) entries.push_back({{"qid", qid}, {"facts", facts}});
  return {{"system_id", system_id}, {"entries", entries}};
}

namespace {

const std::string kSpecHeader = "## Behavioral specification\n";

std::string chapter_of(const std::string& message_id) {
  auto p = message_id.rfind("-p");
  return p == std::string::npos ? message_id : message_id.substr(0, p);
}

std::string tag_for(const std::string& chapter, const SubjectAssets& a) {
  return (a.heldout_chapter_ids.count(chapter) ? "heldout:" : "training:") + chapter;
}

std::size_t qid_number(const std::string& qid) {
  try {
    return std::stoul(qid.substr(1));
  } catch (...) {
    return 0;
  }
}

}  // namespace

ContextBlock assemble_context(const ConditionId& c, const SubjectAssets& a, const std::string& qid,
                              std::size_t budget_tokens) {
  ContextBlock block;
  if (c.uses_facts()) {
    if (a.facts.empty()) fail(Errc::MissingAsset, a.subject_id + ": no facts for " + c.code());
    Segment s{SegmentKind::Facts, "## Behavioral facts", {}};
    std::set<std::string> tags;
    for (const auto& f : a.facts) {
      s.text += "\n- " + f.predicate + ": " + f.object;
      for (const auto& m : f.source_message_ids) tags.insert(tag_for(chapter_of(m), a));
    }
    s.provenance.assign(tags.begin(), tags.end());
    block.parts.push_back(std::move(s));
  }
  if (c.uses_corpus()) {
    if (!a.training) fail(Errc::MissingAsset, a.subject_id + ": no training corpus for " + c.code());
    Segment s{SegmentKind::Corpus, "## Source text\n" + joined_text(*a.training), {}};
    for (const auto& ch : a.training->chapters) s.provenance.push_back(tag_for(ch.id, a));
    block.parts.push_back(std::move(s));
  }
  if (c.uses_retrieval()) {
    const std::string key = c.system + (c.native ? "_fullpipeline" : "");
    auto it = a.retrieval.find(key);
    if (it == a.retrieval.end()) fail(Errc::MissingAsset, a.subject_id + ": no retrieval log for " + key);
    auto q = it->second.by_qid.find(qid);
    if (q == it->second.by_qid.end()) fail(Errc::MissingAsset, a.subject_id + ": retrieval log " + key + " lacks " + qid);
    Segment s{SegmentKind::Retrieval, "## Retrieved memories", {"retrieval:" + key}};
    for (const auto& t : q->second) s.text += "\n- " + t;
    block.parts.push_back(std::move(s));
  }
  if (c.uses_spec()) {
    if (!a.spec) fail(Errc::MissingAsset, a.subject_id + ": no spec for " + c.code());
    block.parts.push_back({SegmentKind::Spec, kSpecHeader + a.spec->served(), {"spec:" + a.spec->subject_id}});
  }
  if (c.uses_wrong_spec()) {
    const DerangementMap* map = c.base == ConditionId::Base::C2cV1 ? a.derangement_v1 : a.derangement_v2;
    if (!map) fail(Errc::MissingAsset, a.subject_id + ": no derangement map for " + c.code());
    auto assigned = map->pairs.find(a.subject_id);
    if (assigned == map->pairs.end()) fail(Errc::MissingAsset, a.subject_id + " is absent from the derangement map");
    auto sp = a.specs_by_subject.find(assigned->second);
    if (sp == a.specs_by_subject.end() || !sp->second)
      fail(Errc::MissingAsset, "spec of " + assigned->second + " is unavailable for " + c.code());
    if (!sp->second->anonymized) fail(Errc::MissingAsset, "wrong-spec control needs the anonymized spec of " + assigned->second);
    block.parts.push_back({SegmentKind::WrongSpec, kSpecHeader + sp->second->served(), {"spec:" + assigned->second}});
  }

  for (const auto& p : block.parts)
    for (const auto& t : p.provenance)
      if (t.rfind("heldout:", 0) == 0)
        fail(Errc::InvalidArgument, a.subject_id + ": " + segment_name(p.kind) + " segment carries held-out provenance " + t);

  const auto rendered = block.render();
  block.char_count = rendered.size();
  block.token_estimate = estimate_tokens(rendered);
  if (block.token_estimate > budget_tokens)
    fail(Errc::ContextBudgetExceeded, a.subject_id + " " + c.code() + ": required " + std::to_string(block.token_estimate) +
                                          " tokens, available " + std::to_string(budget_tokens));
  return block;
}

std::string build_user_prompt(const ContextBlock& ctx, const std::string& stem) {
  if (ctx.empty()) return "Question: " + stem;
  return ctx.render() + "\n\nQuestion: " + stem;
}

json ResponseRecord::to_json() const {
  return {{"subject_id", subject_id},     {"qid", qid},   {"condition", condition}, {"response_text", response_text},
          {"call", call.to_json()},       {"battery_checksum", battery_checksum}, {"context_digest", context_digest}};
}

ResponseRecord ResponseRecord::from_json(const json& j) {
  ResponseRecord r;
  r.subject_id = j.at("subject_id");
  r.qid = j.at("qid");
  r.condition = j.at("condition");
  r.response_text = j.at("response_text");
  r.call = CallRecord::from_json(j.at("call"));
  r.battery_checksum = j.at("battery_checksum");
  r.context_digest = j.value("context_digest", "");
  return r;
}

ConditionRun run_condition(const Battery& battery, const ConditionId& condition, const SubjectAssets& assets,
                           ModelProvider& provider, const RunOptions& opts, CallLedger* ledger) {
  if (!battery.frozen()) fail(Errc::InvalidArgument, "run_condition needs a frozen battery");
  if (!(provider.params() == kStudyParams))
    fail(Errc::InvalidArgument, "response provider must be pinned to temperature 0 and 1024 output tokens");

  auto questions = battery.behavioral();
  std::stable_sort(questions.begin(), questions.end(),
                   [](const Question& x, const Question& y) { return qid_number(x.qid) < qid_number(y.qid); });

  ConditionRun run;
  std::vector<ContextBlock> ctx(questions.size());
  if (condition.uses_retrieval()) {
    for (std::size_t i = 0; i < questions.size(); ++i)
      ctx[i] = assemble_context(condition, assets, questions[i].qid, opts.budget_tokens);
  } else {
    auto shared = assemble_context(condition, assets, {}, opts.budget_tokens);
    std::fill(ctx.begin(), ctx.end(), shared);
  }

  const auto system = response_system_prompt(assets.subject_name.empty() ? assets.subject_id : assets.subject_name);
  run.records.resize(questions.size());
  std::vector<std::string> digests(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    auto rendered = ctx[i].render();
    digests[i] = sha256_hex(rendered);
    if (!run.contexts.count(digests[i])) {
      run.contexts[digests[i]] = std::move(rendered);
      run.context_meta[digests[i]] = ctx[i].describe();
    }
  }

  auto work = [&](std::size_t i) {
    const auto& q = questions[i];
    auto g = generate(provider, system, build_user_prompt(ctx[i], q.stem), opts.policy, ledger);
    run.records[i] = {assets.subject_id, q.qid, condition.code(), g.text, g.record, battery.checksum(), digests[i]};
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, questions.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) work(i);
      });
    for (auto& t : pool) t.join();
  }
  return run;
}

std::string cell_status_name(CellStatus s) {
  switch (s) {
    case CellStatus::Completed: return "completed";
    case CellStatus::Skipped: return "skipped";
    case CellStatus::Excluded: return "excluded";
    case CellStatus::Pending: return "pending";
  }
  return "?";
}

std::size_t RunLedger::count(CellStatus s) const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [s](const CellResult& c) { return c.status == s; }));
}

json RunLedger::to_json() const {
  json cs = json::array();
  for (const auto& c : cells)
    cs.push_back({{"subject_id", c.subject_id},
                  {"condition", c.condition},
                  {"status", cell_status_name(c.status)},
                  {"reason", c.reason},
                  {"ok", c.ok},
                  {"failed", c.failed}});
  return {{"run_id", run_id}, {"cells", cs}};
}

std::filesystem::path cell_path(const std::filesystem::path& root, const std::string& run_id,
                                const std::string& subject_id, const std::string& condition) {
  return root / run_id / subject_id / (condition + ".json");
}

CellFile load_cell(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  CellFile c;
  c.manifest = j.at("manifest");
  for (const auto& r : j.at("records")) c.records.push_back(ResponseRecord::from_json(r));
  c.contexts = j.value("contexts", std::map<std::string, std::string>{});
  if (j.contains("context_meta"))
    for (auto& [k, v] : j["context_meta"].items()) c.context_meta[k] = v;
  c.excluded = j.value("excluded", false);
  return c;
}

namespace {

json asset_digests(const SubjectAssets& a) {
  json d = json::object();
  if (a.spec) d["spec"] = sha256_hex(a.spec->served());
  if (!a.facts.empty()) {
    json fs = json::array();
    for (const auto& f : a.facts) fs.push_back(f.to_json());
    d["facts"] = sha256_hex(canonical_json(fs));
  }
  if (a.training) d["corpus"] = sha256_hex(joined_text(*a.training));
  for (const auto& [k, log] : a.retrieval) d["retrieval:" + k] = sha256_hex(canonical_json(log.to_json()));
  return d;
}

}  // namespace

RunLedger run_matrix(const std::filesystem::path& root, const std::string& run_id,
                     const std::vector<SubjectRun>& subjects, const std::vector<ConditionId>& conditions,
                     ModelProvider& provider, const MatrixOptions& opts, CallLedger* ledger) {
  RunLedger out;
  out.run_id = run_id;
  std::size_t executed = 0;
  for (const auto& s : subjects) {
    if (!s.assets || !s.battery) fail(Errc::MissingAsset, "subject run lacks assets or battery");
    for (const auto& c : conditions) {
      CellResult cell{s.assets->subject_id, c.code(), CellStatus::Pending, {}, 0, 0};
      const auto path = cell_path(root, run_id, cell.subject_id, cell.condition);
      if (opts.resume && std::filesystem::exists(path)) {
        auto existing = io::read_json(path);
        if (existing.at("manifest").at("battery_checksum") != s.battery->checksum())
          fail(Errc::ChecksumMismatch, path.string() + " was built against a different battery");
        cell.status = existing.value("excluded", false) ? CellStatus::Excluded : CellStatus::Skipped;
        cell.reason = existing.value("excluded_reason", "");
        for (const auto& r : existing.at("records")) (r.at("call").at("outcome") == "failed" ? cell.failed : cell.ok)++;
        out.cells.push_back(cell);
        continue;
      }
      if (opts.cell_limit && executed >= *opts.cell_limit) {
        out.cells.push_back(cell);
        continue;
      }
      ++executed;

      json manifest = {{"run_id", run_id},
                       {"subject_id", cell.subject_id},
                       {"condition", cell.condition},
                       {"battery_checksum", s.battery->checksum()},
                       {"provider_id", provider.id()},
                       {"params", {{"temperature", provider.params().temperature},
                                   {"max_output_tokens", provider.params().max_output_tokens}}},
                       {"system_prompt_sha256",
                        sha256_hex(response_system_prompt(s.assets->subject_name.empty() ? s.assets->subject_id
                                                                                         : s.assets->subject_name))},
                       {"asset_digests", asset_digests(*s.assets)}};
      json doc = {{"manifest", manifest}, {"records", json::array()}, {"contexts", json::object()},
                  {"context_meta", json::object()}, {"excluded", false}, {"excluded_reason", ""}};
      try {
        auto run = run_condition(*s.battery, c, *s.assets, provider, opts.run, ledger);
        for (const auto& r : run.records) {
          doc["records"].push_back(r.to_json());
          (r.call.ok() ? cell.ok : cell.failed)++;
        }
        doc["contexts"] = run.contexts;
        doc["context_meta"] = run.context_meta;
        cell.status = CellStatus::Completed;
      } catch (const Error& e) {
        if (e.code() != Errc::ContextBudgetExceeded) throw;
        doc["excluded"] = true;
        doc["excluded_reason"] = e.what();
        cell.status = CellStatus::Excluded;
        cell.reason = e.what();
      }
      io::write_json(path, doc);
      out.cells.push_back(cell);
    }
  }
  io::write_json(root / run_id / "ledger.json", out.to_json());
  return out;
}

IsolationReport isolation_scan(const std::filesystem::path& run_dir,
                               const std::map<std::string, std::vector<Chapter>>& heldout_by_subject, std::size_t n) {
  IsolationReport rep;
  std::vector<std::filesystem::path> files;
  for (const auto& subject_dir : std::filesystem::directory_iterator(run_dir)) {
    if (!subject_dir.is_directory()) continue;
    for (const auto& f : std::filesystem::directory_iterator(subject_dir.path()))
      if (f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    auto j = io::read_json(p);
    if (!j.contains("manifest") || !j.contains("contexts")) continue;
    const std::string subject = j["manifest"].at("subject_id");
    auto held = heldout_by_subject.find(subject);
    const json metas = j.value("context_meta", json::object());
    for (const auto& [digest, meta] : metas.items())
      for (const auto& seg : meta.at("segments"))
        for (const auto& tag : seg.at("provenance"))
          if (tag.get<std::string>().rfind("heldout:", 0) == 0) ++rep.heldout_tagged_segments;
    for (auto& [digest, ctx] : j["contexts"].items()) {
      ++rep.contexts_scanned;
      if (held == heldout_by_subject.end()) continue;
      auto leaks = leakage_scan({{subject + "/" + j["manifest"].at("condition").get<std::string>(), ctx.get<std::string>()}},
                                held->second, n);
      for (auto& m : leaks.matches) rep.overlaps.push_back(m);
    }
  }
  return rep;
}

}  // namespace repacc
