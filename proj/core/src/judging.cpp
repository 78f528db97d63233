#include "repacc/judging.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::string build_judge_prompt(const std::string& heldout_span, const std::string& response_text,
                               const JudgeSubjectContext* context) {
  if (heldout_span.empty()) fail(Errc::InvalidArgument, "judge prompt needs a held-out span");
  if (response_text.empty()) fail(Errc::InvalidArgument, "judge prompt needs a response");
  std::string out;
  if (context) {
    out += "Subject: " + context->name;
    if (!context->source_title.empty()) out += " (" + context->source_title + ")";
    out += "\n\n";
  }
  out += "You are evaluating whether a response about a person PREDICTED what actually happened.\n\n";
  out += "=== HELD-OUT GROUND TRUTH ===\n";
  out += heldout_span;
  out += "\n\n=== RESPONSE ===\n";
  out += text::utf8_prefix(response_text, kJudgeResponseLimit);
  out +=
      "\n\nRate 1-5:\n"
      "5=Predicts specific outcome\n"
      "4=General direction correct\n"
      "3=Right domain wrong outcome\n"
      "2=Wrong prediction\n"
      "1=Refuses or off-base\n\n"
      "Respond with ONLY a single digit (1-5).";
  return out;
}

json Judgment::to_json() const {
  json j = {{"subject_id", subject_id}, {"qid", qid},   {"condition", condition}, {"judge_id", judge_id},
            {"raw", raw},               {"calls", calls}, {"call", call.to_json()}};
  j["score"] = score ? json(*score) : json(nullptr);
  return j;
}

Judgment Judgment::from_json(const json& j) {
  Judgment g;
  g.subject_id = j.at("subject_id");
  g.qid = j.at("qid");
  g.condition = j.at("condition");
  g.judge_id = j.at("judge_id");
  if (!j.at("score").is_null()) g.score = j["score"].get<int>();
  g.raw = j.value("raw", "");
  g.calls = j.value("calls", 0);
  if (j.contains("call")) g.call = CallRecord::from_json(j["call"]);
  return g;
}

json PanelDef::to_json() const { return {{"primary", primary}, {"sensitivity", sensitivity}}; }

PanelDef PanelDef::from_json(const json& j) {
  PanelDef p;
  p.primary = j.at("primary").get<std::vector<std::string>>();
  p.sensitivity = j.value("sensitivity", std::vector<std::string>{});
  if (p.primary.empty()) fail(Errc::InvalidArgument, "primary panel needs at least one judge");
  return p;
}

void ScoreCube::set(const CubeKey& k, const std::string& judge_id, std::optional<int> score) {
  if (score && (*score < 1 || *score > 5)) fail(Errc::OutOfRangeScore, "score " + std::to_string(*score));
  cells_[k][judge_id] = score;
}

std::optional<int> ScoreCube::get(const CubeKey& k, const std::string& judge_id) const {
  auto c = cells_.find(k);
  if (c == cells_.end()) return std::nullopt;
  auto s = c->second.find(judge_id);
  return s == c->second.end() ? std::nullopt : s->second;
}

bool ScoreCube::attempted(const CubeKey& k, const std::string& judge_id) const {
  auto c = cells_.find(k);
  return c != cells_.end() && c->second.count(judge_id) > 0;
}

void ScoreCube::set_tier(const std::string& subject_id, const std::string& qid, Tier t) {
  tiers_[{subject_id, qid}] = t;
}

Tier ScoreCube::tier(const std::string& subject_id, const std::string& qid) const {
  auto it = tiers_.find({subject_id, qid});
  return it == tiers_.end() ? Tier::BehavioralPrediction : it->second;
}

std::size_t ScoreCube::effective_panel(const CubeKey& k, const std::vector<std::string>& judges) const {
  std::size_t n = 0;
  for (const auto& j : judges)
    if (get(k, j)) ++n;
  return n;
}

std::vector<CubeKey> ScoreCube::absences(const std::vector<std::string>& judges) const {
  std::vector<CubeKey> out;
  for (const auto& [k, _] : cells_)
    if (effective_panel(k, judges) < judges.size()) out.push_back(k);
  return out;
}

std::set<std::string> ScoreCube::subjects() const {
  std::set<std::string> s;
  for (const auto& [k, _] : cells_) s.insert(k.subject_id);
  return s;
}

std::set<std::string> ScoreCube::conditions() const {
  std::set<std::string> s;
  for (const auto& [k, _] : cells_) s.insert(k.condition);
  return s;
}

std::size_t ScoreCube::size() const {
  std::size_t n = 0;
  for (const auto& [_, m] : cells_) n += m.size();
  return n;
}

void ScoreCube::merge(const ScoreCube& other) {
  for (const auto& [k, m] : other.cells_)
    for (const auto& [judge, s] : m) cells_[k][judge] = s;
  for (const auto& [k, t] : other.tiers_) tiers_[k] = t;
}

json ScoreCube::to_json() const {
  json entries = json::array();
  for (const auto& [k, m] : cells_) {
    json scores = json::object();
    for (const auto& [judge, s] : m) scores[judge] = s ? json(*s) : json(nullptr);
    entries.push_back({{"subject_id", k.subject_id},
                       {"condition", k.condition},
                       {"qid", k.qid},
                       {"tier", tier_name(tier(k.subject_id, k.qid))},
                       {"scores", scores}});
  }
  return {{"panel", panel.to_json()}, {"entries", entries}};
}

ScoreCube ScoreCube::from_json(const json& j) {
  ScoreCube c;
  c.panel = PanelDef::from_json(j.at("panel"));
  for (const auto& e : j.at("entries")) {
    CubeKey k{e.at("subject_id"), e.at("condition"), e.at("qid")};
    if (e.contains("tier")) c.set_tier(k.subject_id, k.qid, tier_from_name(e["tier"]));
    for (auto& [judge, s] : e.at("scores").items())
      c.set(k, judge, s.is_null() ? std::nullopt : std::optional<int>(s.get<int>()));
  }
  return c;
}

std::vector<JudgeItem> judge_items(const Battery& battery, const std::vector<ResponseRecord>& records) {
  std::vector<JudgeItem> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.battery_checksum != battery.checksum())
      fail(Errc::ChecksumMismatch, r.subject_id + " " + r.condition + " " + r.qid + " was answered against battery " +
                                       r.battery_checksum);
    const auto& q = battery.question(r.qid);
    out.push_back({r.subject_id, r.qid, r.condition, q.tier, q.heldout_span, r.response_text});
  }
  return out;
}

namespace {

Judgment judge_once(ModelProvider& judge, const JudgeItem& item, const PanelOptions& opts, CallLedger* ledger) {
  Judgment g{item.subject_id, item.qid, item.condition, judge.id(), std::nullopt, {}, 0, {}};
  if (item.response_text.empty()) {
    g.raw = "response unavailable";
    return g;
  }
  auto ctx = opts.subject_context.find(item.subject_id);
  const auto prompt =
      build_judge_prompt(item.heldout_span, item.response_text, ctx == opts.subject_context.end() ? nullptr : &ctx->second);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto gen = generate(judge, "", prompt, opts.policy, ledger, Capability::Judge);
    ++g.calls;
    g.call = gen.record;
    g.raw = gen.text;
    if (!gen.record.ok()) break;
    try {
      g.score = parse_judge_digit(gen.text, opts.lenient_parse);
      break;
    } catch (const Error&) {
    }
  }
  return g;
}

}  // namespace

PanelResult run_panel(const std::vector<JudgeItem>& items, const std::vector<ModelProvider*>& judges,
                      const PanelDef& panel, const PanelOptions& opts, CallLedger* ledger) {
  if (panel.primary.empty()) fail(Errc::InvalidArgument, "primary panel needs at least one judge");
  std::set<std::string> ids;
  for (auto* j : judges) {
    if (!j) fail(Errc::InvalidArgument, "null judge");
    if (!ids.insert(j->id()).second) fail(Errc::InvalidArgument, "duplicate judge " + j->id());
    j->check_credentials();
  }
  for (const auto& p : panel.primary)
    if (!ids.count(p)) fail(Errc::InvalidArgument, "panel judge " + p + " has no provider");

  const std::size_t total = items.size() * judges.size();
  std::vector<Judgment> out(total);
  auto work = [&](std::size_t t) { out[t] = judge_once(*judges[t % judges.size()], items[t / judges.size()], opts, ledger); };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, total));
  if (workers == 1) {
    for (std::size_t t = 0; t < total; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < total; t = next++) work(t);
      });
    for (auto& th : pool) th.join();
  }

  PanelResult res;
  res.cube.panel = panel;
  for (const auto& item : items) res.cube.set_tier(item.subject_id, item.qid, item.tier);
  for (const auto& g : out) res.cube.set({g.subject_id, g.condition, g.qid}, g.judge_id, g.score);
  res.judgments = std::move(out);
  return res;
}

std::filesystem::path judgment_path(const std::filesystem::path& run_dir, const std::string& subject_id,
                                    const std::string& condition) {
  return run_dir / "judgments" / subject_id / (condition + ".json");
}

void save_judgments(const std::filesystem::path& path, const std::string& battery_checksum,
                    const std::vector<Judgment>& judgments) {
  json by_judge = json::object();
  for (const auto& g : judgments) {
    if (!by_judge.contains(g.judge_id)) by_judge[g.judge_id] = json::array();
    by_judge[g.judge_id].push_back(g.to_json());
  }
  io::write_json(path, {{"battery_checksum", battery_checksum}, {"by_judge", by_judge}});
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path, const std::string& expected_checksum) {
  if (!std::filesystem::exists(path)) fail(Errc::MissingUpstream, path.string());
  auto j = io::read_json(path);
  if (j.at("battery_checksum") != expected_checksum)
    fail(Errc::ChecksumMismatch, path.string() + " was judged against a different battery");
  std::vector<Judgment> out;
  for (auto& [_, list] : j.at("by_judge").items())
    for (const auto& g : list) out.push_back(Judgment::from_json(g));
  return out;
}

std::vector<CalibrationFixture> load_calibration_fixtures(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  std::vector<CalibrationFixture> out;
  for (const auto& f : j.at("fixtures")) {
    CalibrationFixture c{f.at("id"), f.at("ground_truth"), f.at("paraphrase"), f.at("first_sentence"), {}};
    c.padded = f.contains("padded") ? f["padded"].get<std::string>()
                                    : c.ground_truth + "\n\n" + j.at("padding").get<std::string>();
    if (c.ground_truth.empty() || c.paraphrase.empty() || c.first_sentence.empty())
      fail(Errc::Parse, p.string() + ": fixture " + c.id + " has an empty field");
    out.push_back(std::move(c));
  }
  if (out.empty()) fail(Errc::Parse, p.string() + ": no calibration fixtures");
  return out;
}

std::vector<CalibrationFixture> load_default_calibration_fixtures() {
  return load_calibration_fixtures(io::data_dir() / "calibration_fixtures.json");
}

CalibrationThresholds CalibrationThresholds::from_json(const json& j) {
  CalibrationThresholds t;
  t.verbatim_min = j.value("verbatim_min", t.verbatim_min);
  t.paraphrase_min = j.value("paraphrase_min", t.paraphrase_min);
  t.short_max = j.value("short_max", t.short_max);
  t.long_min = j.value("long_min", t.long_min);
  return t;
}

json CalibrationThresholds::to_json() const {
  return {{"verbatim_min", verbatim_min}, {"paraphrase_min", paraphrase_min}, {"short_max", short_max}, {"long_min", long_min}};
}

std::string calibration_kind_name(CalibrationKind k) {
  switch (k) {
    case CalibrationKind::Verbatim: return "verbatim";
    case CalibrationKind::Paraphrased: return "paraphrased";
    case CalibrationKind::ShortCorrect: return "short_correct";
    case CalibrationKind::LongCorrect: return "long_correct";
  }
  return "?";
}

const std::string& calibration_response(const CalibrationFixture& f, CalibrationKind k) {
  switch (k) {
    case CalibrationKind::Verbatim: return f.ground_truth;
    case CalibrationKind::Paraphrased: return f.paraphrase;
    case CalibrationKind::ShortCorrect: return f.first_sentence;
    case CalibrationKind::LongCorrect: return f.padded;
  }
  return f.ground_truth;
}

json CalibrationReport::to_json() const {
  json tests = json::object();
  for (const auto* t : {&verbatim, &paraphrased, &short_correct, &long_correct})
    tests[calibration_kind_name(t->kind)] = {
        {"mean", t->mean}, {"pass", t->pass}, {"scores", t->scores}, {"invalid", t->invalid}};
  return {{"judge_id", judge_id},
          {"repetitions", repetitions},
          {"thresholds", thresholds.to_json()},
          {"tests", tests},
          {"all_pass", all_pass()}};
}

CalibrationReport calibration_diagnostic(ModelProvider& judge, const std::vector<CalibrationFixture>& fixtures,
                                         std::size_t repetitions, const CalibrationThresholds& thresholds,
                                         const RetryPolicy& policy) {
  if (fixtures.empty()) fail(Errc::InvalidArgument, "calibration needs fixtures");
  if (repetitions == 0) fail(Errc::InvalidArgument, "calibration needs at least one repetition");
  CalibrationReport rep;
  rep.judge_id = judge.id();
  rep.repetitions = repetitions;
  rep.thresholds = thresholds;
  for (auto* t : {&rep.verbatim, &rep.paraphrased, &rep.short_correct, &rep.long_correct}) {
    for (std::size_t r = 0; r < repetitions; ++r) {
      const auto& f = fixtures[r % fixtures.size()];
      const auto prompt = build_judge_prompt(f.ground_truth, calibration_response(f, t->kind));
      std::optional<int> score;
      for (int attempt = 0; attempt < 2 && !score; ++attempt) {
        auto gen = generate(judge, "", prompt, policy, nullptr, Capability::Judge);
        if (!gen.record.ok())
          fail(Errc::ProviderFailure, judge.id() + " failed during " + calibration_kind_name(t->kind) + ": " + gen.record.error);
        try {
          score = parse_judge_digit(gen.text);
        } catch (const Error&) {
        }
      }
      if (score)
        t->scores.push_back(*score);
      else
        ++t->invalid;
    }
    if (t->scores.empty())
      fail(Errc::ProviderFailure, judge.id() + " produced no valid score for " + calibration_kind_name(t->kind));
    t->mean = std::accumulate(t->scores.begin(), t->scores.end(), 0.0) / static_cast<double>(t->scores.size());
  }
  rep.verbatim.pass = rep.verbatim.mean >= thresholds.verbatim_min;
  rep.paraphrased.pass = rep.paraphrased.mean >= thresholds.paraphrase_min;
  rep.short_correct.pass = rep.short_correct.mean <= thresholds.short_max;
  rep.long_correct.pass = rep.long_correct.mean >= thresholds.long_min;
  return rep;
}

std::vector<int> scripted_scores(double mean, std::size_t n) {
  if (n == 0) return {};
  if (mean < 1.0 || mean > 5.0) fail(Errc::OutOfRangeScore, "scripted mean " + std::to_string(mean));
  const long total = std::lround(mean * static_cast<double>(n));
  const long base = total / static_cast<long>(n);
  const long extra = total % static_cast<long>(n);
  std::vector<int> out(n, static_cast<int>(base));
  for (long i = 0; i < extra; ++i) out[static_cast<std::size_t>(i)] += 1;
  return out;
}

json scripted_judge_table(const std::string& judge_id, const std::vector<CalibrationFixture>& fixtures,
                          std::size_t repetitions, double verbatim, double paraphrased, double short_correct,
                          double long_correct) {
  if (fixtures.empty()) fail(Errc::InvalidArgument, "scripted judge needs fixtures");
  json rules = json::array();
  const std::pair<CalibrationKind, double> tests[] = {{CalibrationKind::Verbatim, verbatim},
                                                      {CalibrationKind::Paraphrased, paraphrased},
                                                      {CalibrationKind::ShortCorrect, short_correct},
                                                      {CalibrationKind::LongCorrect, long_correct}};
  for (const auto& [kind, mean] : tests) {
    const auto seq = scripted_scores(mean, repetitions);
    for (std::size_t i = 0; i < fixtures.size() && i < repetitions; ++i) {
      json responses = json::array();
      for (std::size_t r = i; r < repetitions; r += fixtures.size()) responses.push_back(std::to_string(seq[r]));
      rules.push_back({{"contains", build_judge_prompt(fixtures[i].ground_truth, calibration_response(fixtures[i], kind))},
                       {"responses", responses}});
    }
  }
  return {{"id", judge_id}, {"capabilities", {"judge"}}, {"rules", rules}, {"offline", false}};
}

}  // namespace repacc
