#include "repacc/battery.hpp"

#include <algorithm>
#include <set>

#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::string tier_name(Tier t) {
  switch (t) {
    case Tier::BehavioralPrediction: return "behavioral_prediction";
    case Tier::Recall: return "recall";
    case Tier::AdversarialAbstention: return "adversarial_abstention";
  }
  return "?";
}

Tier tier_from_name(const std::string& s) {
  if (s == "behavioral_prediction") return Tier::BehavioralPrediction;
  if (s == "recall") return Tier::Recall;
  if (s == "adversarial_abstention") return Tier::AdversarialAbstention;
  fail(Errc::Parse, "unknown tier " + s);
}

json Question::to_json() const {
  return {{"qid", qid},
          {"subject_id", subject_id},
          {"tier", tier_name(tier)},
          {"category", category},
          {"stem", stem},
          {"heldout_span", heldout_span},
          {"window_ref", {{"chapter_id", window_ref.chapter_id}, {"begin", window_ref.begin}, {"end", window_ref.end}}}};
}

Question Question::from_json(const json& j) {
  Question q;
  q.qid = j.at("qid");
  q.subject_id = j.at("subject_id");
  q.tier = tier_from_name(j.at("tier"));
  q.category = j.at("category");
  q.stem = j.at("stem");
  q.heldout_span = j.at("heldout_span");
  const auto& w = j.at("window_ref");
  q.window_ref = {w.at("chapter_id"), w.at("begin"), w.at("end")};
  return q;
}

Battery::Battery(std::string subject_id, std::string generator_provider_id)
    : subject_id_(std::move(subject_id)), generator_(std::move(generator_provider_id)) {}

std::vector<Question> Battery::behavioral() const {
  std::vector<Question> out;
  for (const auto& q : questions_)
    if (q.tier == Tier::BehavioralPrediction) out.push_back(q);
  return out;
}

const Question& Battery::question(const std::string& qid) const {
  for (const auto& q : questions_)
    if (q.qid == qid) return q;
  fail(Errc::UnknownId, "no question " + qid);
}

void Battery::require_mutable() const {
  if (frozen_) fail(Errc::AlreadyFrozen, "battery for " + subject_id_ + " is frozen (" + checksum_ + ")");
}

void Battery::add(Question q) {
  require_mutable();
  questions_.push_back(std::move(q));
}

void Battery::set_questions(std::vector<Question> qs) {
  require_mutable();
  questions_ = std::move(qs);
}

std::map<std::string, std::size_t> Battery::category_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& q : questions_)
    if (q.tier == Tier::BehavioralPrediction) ++out[q.category];
  return out;
}

json Battery::content_json() const {
  json qs = json::array();
  for (const auto& q : questions_) qs.push_back(q.to_json());
  return {{"subject_id", subject_id_},
          {"generator_provider_id", generator_},
          {"questions", qs},
          {"leak_violations", leak_violations_}};
}

std::string Battery::compute_checksum(DigestAlgo algo) const { return digest_hex(algo, canonical_json(content_json())); }

json Battery::to_json() const {
  json j = content_json();
  j["frozen"] = frozen_;
  j["checksum"] = checksum_;
  j["checksum_algo"] = std::string(digest_name(algo_));
  j["category_counts"] = category_counts();
  return j;
}

Battery Battery::from_json(const json& j) {
  Battery b(j.at("subject_id"), j.value("generator_provider_id", ""));
  for (const auto& q : j.at("questions")) b.questions_.push_back(Question::from_json(q));
  b.leak_violations_ = j.value("leak_violations", json::array());
  b.algo_ = digest_from_name(j.value("checksum_algo", "md5"));
  b.checksum_ = j.value("checksum", "");
  b.frozen_ = j.value("frozen", false);
  return b;
}

namespace {

struct Concat {
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // per chapter [begin, end)
};

Concat concatenate(const std::vector<Chapter>& chapters) {
  Concat c;
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    if (i) c.text += "\n\n";
    std::size_t b = c.text.size();
    c.text += chapters[i].text;
    c.ranges.emplace_back(b, c.text.size());
  }
  return c;
}

std::size_t char_floor(const std::string& s, std::size_t pos) {
  pos = std::min(pos, s.size());
  while (pos > 0 && pos < s.size() && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  return pos;
}

json parse_object(const std::string& raw) {
  auto a = raw.find('{');
  auto b = raw.rfind('}');
  if (a == std::string::npos || b == std::string::npos || b < a) fail(Errc::Parse, "no JSON object in output");
  return json::parse(raw.substr(a, b - a + 1));
}

}  // namespace

std::vector<TextWindow> plan_windows(std::size_t text_chars, const BatteryConfig& cfg) {
  if (cfg.window_chars == 0 || cfg.batches == 0) fail(Errc::InvalidArgument, "window size and batch count must be positive");
  if (text_chars < cfg.window_chars) fail(Errc::InvalidArgument, "held-out text is shorter than one window");
  const std::size_t k = text_chars / cfg.window_chars;
  const std::size_t slack = text_chars - k * cfg.window_chars;
  std::vector<TextWindow> out;
  for (std::size_t b = 0; b < cfg.batches; ++b) {
    const std::size_t offset = b * slack / cfg.batches;
    for (std::size_t w = 0; w < k; ++w) {
      std::size_t quota = cfg.per_batch / k + (w < cfg.per_batch % k ? 1 : 0);
      std::size_t begin = offset + w * cfg.window_chars;
      out.push_back({b, begin, begin + cfg.window_chars, quota});
    }
  }
  return out;
}

Battery generate_battery(const std::vector<Chapter>& heldout, ModelProvider& provider, const BatteryConfig& cfg,
                         GenerationLog* log, const RetryPolicy& policy, CallLedger* ledger) {
  if (heldout.empty()) fail(Errc::InvalidArgument, "no held-out chapters");
  const PromptPack pack = cfg.pack ? *cfg.pack : PromptPack::load_default();
  const auto concat = concatenate(heldout);
  const auto windows = plan_windows(concat.text.size(), cfg);
  GenerationLog local;
  GenerationLog& lg = log ? *log : local;
  lg.windows = windows;

  std::vector<Question> accepted;
  const auto cats = text::join(kCategories, ", ");
  for (const auto& w : windows) {
    if (w.quota == 0) continue;
    const std::size_t begin = char_floor(concat.text, w.begin);
    const std::size_t end = char_floor(concat.text, w.end);
    const std::string window = concat.text.substr(begin, end - begin);
    auto prompt = render(pack.get("battery"), {{"subject", cfg.subject_name},
                                               {"count", std::to_string(w.quota)},
                                               {"categories", cats},
                                               {"batch", std::to_string(w.batch + 1)},
                                               {"batches", std::to_string(cfg.batches)},
                                               {"window", window}});
    auto raw = generate_or_throw(provider, "", prompt, policy, ledger);
    json parsed;
    try {
      parsed = parse_object(raw);
    } catch (const std::exception& e) {
      lg.dropped.push_back("batch " + std::to_string(w.batch + 1) + " window@" + std::to_string(begin) +
                           ": unparseable output");
      continue;
    }
    for (const auto& item : parsed.value("questions", json::array())) {
      auto drop = [&](const std::string& why) {
        lg.dropped.push_back("batch " + std::to_string(w.batch + 1) + " window@" + std::to_string(begin) + ": " + why);
      };
      if (!item.is_object() || !item.contains("stem") || !item.contains("span") || !item.contains("category")) {
        drop("missing stem, span or category");
        continue;
      }
      Question q;
      q.subject_id = cfg.subject_id;
      q.stem = text::trim(item["stem"].get<std::string>());
      q.heldout_span = item["span"].get<std::string>();
      q.category = item["category"].get<std::string>();
      try {
        q.tier = tier_from_name(item.value("tier", "behavioral_prediction"));
      } catch (const Error&) {
        drop("unknown tier");
        continue;
      }
      if (std::find(kCategories.begin(), kCategories.end(), q.category) == kCategories.end()) {
        drop("unknown category " + q.category);
        continue;
      }
      if (q.stem.empty() || text::trim(q.heldout_span).empty()) {
        drop("empty stem or span");
        continue;
      }
      auto pos = window.find(q.heldout_span);
      if (pos == std::string::npos) {
        drop("span not found verbatim in window");
        continue;
      }
      const std::size_t abs = begin + pos;
      const std::size_t abs_end = abs + q.heldout_span.size();
      bool placed = false;
      for (std::size_t c = 0; c < concat.ranges.size(); ++c) {
        auto [cb, ce] = concat.ranges[c];
        if (abs >= cb && abs_end <= ce) {
          q.window_ref = {heldout[c].id, abs - cb, abs_end - cb};
          placed = true;
          break;
        }
      }
      if (!placed) {
        drop("span crosses a chapter boundary");
        continue;
      }
      accepted.push_back(std::move(q));
    }
  }
  if (accepted.empty()) fail(Errc::NoValidQuestions, "generator produced no valid questions");
  for (std::size_t i = 0; i < accepted.size(); ++i) accepted[i].qid = "Q" + std::to_string(i + 1);
  Battery b(cfg.subject_id, provider.id());
  b.set_questions(std::move(accepted));
  return b;
}

CategoryTargets CategoryTargets::load(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  CategoryTargets t;
  t.caps = j.at("caps").get<std::map<std::string, std::size_t>>();
  for (const auto& [cat, cap] : t.caps)
    if (std::find(kCategories.begin(), kCategories.end(), cat) == kCategories.end())
      fail(Errc::Parse, "unknown category in targets: " + cat);
  if (j.contains("total") && !j["total"].is_null()) t.total = j["total"].get<std::size_t>();
  return t;
}

CategoryTargets CategoryTargets::load_default() { return load(io::data_dir() / "category_targets.json"); }

Battery dedup_and_cap(const Battery& raw, const CategoryTargets& targets) {
  if (raw.frozen()) fail(Errc::AlreadyFrozen, "dedup_and_cap needs an unfrozen battery");
  std::set<std::string> seen;
  std::map<std::string, std::size_t> per_cat;
  std::size_t behavioral = 0;
  std::vector<Question> kept;
  for (const auto& q : raw.questions()) {
    if (!seen.insert(text::ascii_lower(text::trim(q.stem))).second) continue;
    if (q.tier == Tier::BehavioralPrediction) {
      auto cap = targets.caps.find(q.category);
      if (cap != targets.caps.end() && per_cat[q.category] >= cap->second) continue;
      if (targets.total && behavioral >= *targets.total) continue;
      ++per_cat[q.category];
      ++behavioral;
    }
    kept.push_back(q);
  }
  Battery out(raw.subject_id(), raw.generator_provider_id());
  out.set_questions(std::move(kept));
  return out;
}

LeakReport leakage_audit(const Battery& battery, const std::vector<Chapter>& heldout, std::size_t n) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& q : battery.questions()) items.emplace_back(q.qid, q.stem);
  return leakage_scan(items, heldout, n);
}

Battery freeze(const Battery& battery, const std::vector<Chapter>& heldout, const FreezeOptions& opts) {
  if (battery.frozen()) fail(Errc::AlreadyFrozen, "battery is already frozen");
  auto report = leakage_audit(battery, heldout, opts.n_gram);
  Battery out = battery;
  if (!report.clean()) {
    if (!opts.override_leaks)
      fail(Errc::LeakageBlock, "question stems share >=" + std::to_string(opts.n_gram) +
                                   "-token runs with held-out text: " + text::join(report.leaking_question_ids, ", "));
    out.leak_violations_ = report.to_json()["matches"];
  }
  out.algo_ = opts.algo;
  out.checksum_ = out.compute_checksum(opts.algo);
  out.frozen_ = true;
  return out;
}

void verify_spans(const Battery& battery, const std::vector<Chapter>& heldout) {
  for (const auto& q : battery.questions()) {
    auto it = std::find_if(heldout.begin(), heldout.end(), [&](const Chapter& c) { return c.id == q.window_ref.chapter_id; });
    if (it == heldout.end()) fail(Errc::ChecksumMismatch, q.qid + ": chapter " + q.window_ref.chapter_id + " not held out");
    const auto& r = q.window_ref;
    if (r.end > it->text.size() || r.begin > r.end || it->text.compare(r.begin, r.end - r.begin, q.heldout_span) != 0)
      fail(Errc::ChecksumMismatch, q.qid + ": held-out span no longer matches the corpus");
  }
}

Battery load_battery(const std::filesystem::path& p, const std::vector<Chapter>* heldout) {
  auto b = Battery::from_json(io::read_json(p));
  if (!b.frozen()) fail(Errc::MissingUpstream, p.string() + " is not frozen");
  if (b.compute_checksum(b.checksum_algo()) != b.checksum())
    fail(Errc::ChecksumMismatch, p.string() + ": battery checksum does not match its content");
  if (heldout) verify_spans(b, *heldout);
  return b;
}

}  // namespace repacc
