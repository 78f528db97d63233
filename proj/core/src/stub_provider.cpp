#include "repacc/stub_provider.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "repacc/error.hpp"
#include "repacc/prompts.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string between(const std::string& s, std::string_view open, std::string_view close) {
  auto a = s.find(open);
  if (a == std::string::npos) return {};
  a += open.size();
  auto b = close.empty() ? std::string::npos : s.find(close, a);
  return s.substr(a, b == std::string::npos ? std::string::npos : b - a);
}

std::string line_value(const std::string& s, std::string_view key) {
  auto a = s.find(key);
  if (a == std::string::npos) return {};
  a += key.size();
  auto b = s.find('\n', a);
  return text::trim(s.substr(a, b == std::string::npos ? std::string::npos : b - a));
}

std::set<std::string> content_tokens(std::string_view s) {
  std::set<std::string> out;
  for (auto& t : text::ngram_tokens(s))
    if (text::utf8_length(t) >= 4) out.insert(t);
  return out;
}

// Sentences as exact substrings; never spans a line break.
std::vector<std::string> sentences(const std::string& s) {
  std::vector<std::string> out;
  for (auto& line : text::split_lines(s)) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if ((c == '.' || c == '?' || c == '!') && (i + 1 == line.size() || line[i + 1] == ' ')) {
        auto sent = text::trim(line.substr(start, i + 1 - start));
        if (!sent.empty()) out.push_back(sent);
        start = i + 1;
      }
    }
    auto rest = text::trim(line.substr(std::min(start, line.size())));
    if (!rest.empty()) out.push_back(rest);
  }
  return out;
}

struct FactLine {
  std::string id, predicate, object;
};

std::vector<FactLine> fact_lines(const std::string& block) {
  std::vector<FactLine> out;
  for (auto& line : text::split_lines(block)) {
    auto p1 = line.find(" | ");
    if (p1 == std::string::npos) continue;
    auto p2 = line.find(" | ", p1 + 3);
    if (p2 == std::string::npos) continue;
    out.push_back({text::trim(line.substr(0, p1)), line.substr(p1 + 3, p2 - p1 - 3), text::trim(line.substr(p2 + 3))});
  }
  return out;
}

std::string readable(std::string predicate) {
  std::replace(predicate.begin(), predicate.end(), '_', ' ');
  return predicate;
}

}  // namespace

StubProvider::StubProvider(const json& table)
    : ModelProvider(table.at("id").get<std::string>(),
                    [&] {
                      std::set<Capability> caps;
                      if (table.contains("capabilities")) {
                        for (auto& c : table["capabilities"]) caps.insert(capability_from_name(c.get<std::string>()));
                      } else {
                        caps = {Capability::Generate, Capability::Judge, Capability::Embed};
                      }
                      return caps;
                    }(),
                    table.value("permits", 4)),
      table_(table) {
  for (const auto& r : table.value("rules", json::array())) {
    Rule rule;
    const auto& c = r.at("contains");
    if (c.is_array())
      rule.contains = c.get<std::vector<std::string>>();
    else
      rule.contains = {c.get<std::string>()};
    if (r.contains("response")) rule.responses = {r["response"].get<std::string>()};
    if (r.contains("responses")) rule.responses = r["responses"].get<std::vector<std::string>>();
    rule.fail = r.value("fail", "");
    if (rule.responses.empty() && rule.fail.empty())
      fail(Errc::InvalidArgument, "stub rule needs response, responses or fail");
    rules_.push_back(std::move(rule));
  }
  fail_first_ = table.value("fail_first", 0);
  fail_always_ = table.value("fail_always", false);
  offline_enabled_ = table.value("offline", true);
  if (table.contains("judge")) {
    judge_bias_ = table["judge"].value("bias", 0.0);
    judge_gain_ = table["judge"].value("gain", 1.0);
  }
  if (table.contains("embed")) {
    const auto& e = table["embed"];
    embed_mode_ = e.value("mode", "hash");
    embed_dims_ = e.value("dims", 256);
    if (e.contains("basis"))
      for (auto& [k, v] : e["basis"].items()) basis_[k] = v.get<std::vector<double>>();
  }
}

StubProvider StubProvider::from_file(const std::filesystem::path& p) { return StubProvider(io::read_json(p)); }

std::string StubProvider::complete(const CompletionRequest& req) {
  const std::size_t idx = calls_.fetch_add(1);
  if (fail_always_) throw TransientProviderError(503, id() + ": service unavailable");
  if (idx < fail_first_) throw TransientProviderError(429, id() + ": rate limited");

  const std::string whole = req.system + "\n" + req.user;
  {
    std::lock_guard lock(mu_);
    for (auto& rule : rules_) {
      bool hit = std::all_of(rule.contains.begin(), rule.contains.end(),
                             [&](const std::string& s) { return whole.find(s) != std::string::npos; });
      if (!hit) continue;
      if (rule.fail == "transient") throw TransientProviderError(429, id() + ": scripted transient failure");
      if (!rule.fail.empty()) fail(Errc::ProviderFailure, id() + ": scripted failure");
      return rule.responses[rule.next++ % rule.responses.size()];
    }
  }
  if (!offline_enabled_) fail(Errc::ProviderFailure, id() + ": no stub rule matched");
  return offline(req);
}

std::string StubProvider::offline(const CompletionRequest& req) const {
  const auto& u = req.user;
  if (u.rfind("You are evaluating whether a response", 0) == 0) return offline_judge(u);
  if (u.rfind(kTaskExtract, 0) == 0) return offline_extract(u);
  if (u.rfind(kTaskLayer, 0) == 0) return offline_layer(u);
  if (u.rfind(kTaskCompose, 0) == 0) return offline_compose(u);
  if (u.rfind(kTaskBattery, 0) == 0) return offline_battery(u);
  if (req.system.rfind("You are predicting how", 0) == 0) return offline_response(req.system, u);
  return "ok";
}

std::string StubProvider::offline_judge(const std::string& prompt) const {
  auto held = between(prompt, "=== HELD-OUT GROUND TRUTH ===\n", "\n\n=== RESPONSE ===\n");
  auto resp = between(prompt, "\n\n=== RESPONSE ===\n", "\n\nRate 1-5:");
  if (resp.find(kStubRefusal) != std::string::npos) return "1";
  auto h = content_tokens(held);
  auto r = content_tokens(resp);
  double overlap = 0;
  if (!h.empty()) {
    std::size_t shared = 0;
    for (auto& t : h) shared += r.count(t);
    overlap = static_cast<double>(shared) / static_cast<double>(h.size());
  }
  double raw = 1.0 + 4.0 * judge_gain_ * overlap + judge_bias_;
  long score = std::clamp(std::lround(raw), 1L, 5L);
  return std::to_string(score);
}

std::string StubProvider::offline_response(const std::string& system, const std::string& user) const {
  auto subject = between(system, "predicting how ", " would respond");
  if (user.rfind("Question: ", 0) == 0)
    return std::string(kStubRefusal) + subject + " would respond to this question.";
  auto qpos = user.rfind("\n\nQuestion: ");
  std::string context = user.substr(0, qpos);
  std::string question = qpos == std::string::npos ? std::string() : user.substr(qpos + 12);
  auto qt = content_tokens(question);

  std::vector<std::string> cands;
  for (auto& s : sentences(context)) {
    if (s.rfind("#", 0) == 0 || s.rfind("```", 0) == 0 || s.rfind("===", 0) == 0) continue;
    if (text::word_count(s) < 4) continue;
    cands.push_back(s);
  }
  if (cands.empty()) return std::string(kStubRefusal) + subject + " would respond to this question.";
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, index)
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::size_t sc = 0;
    for (auto& t : content_tokens(cands[i])) sc += qt.count(t);
    scored.emplace_back(sc, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  std::vector<std::size_t> pick;
  for (std::size_t k = 0; k < std::min<std::size_t>(2, scored.size()); ++k) pick.push_back(scored[k].second);
  std::sort(pick.begin(), pick.end());
  std::string out = "Drawing on their demonstrated patterns:";
  for (auto i : pick) out += " " + cands[i];
  return out;
}

std::string StubProvider::offline_extract(const std::string& prompt) const {
  auto subject = line_value(prompt, "Subject: ");
  std::vector<std::string> vocab;
  {
    std::stringstream ss(line_value(prompt, "PREDICATES: "));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = text::trim(item);
      if (!t.empty()) vocab.push_back(t);
    }
  }
  if (vocab.empty()) return R"({"facts": []})";
  json facts = json::array();
  auto passages = between(prompt, "PASSAGES:\n", "");
  for (auto& line : text::split_lines(passages)) {
    if (line.size() < 3 || line[0] != '[') continue;
    auto close = line.find("] ");
    if (close == std::string::npos) continue;
    auto pid = line.substr(1, close - 1);
    auto body = line.substr(close + 2);
    auto toks = text::ngram_tokens(body);
    if (toks.size() < 5) continue;
    toks.resize(std::min<std::size_t>(toks.size(), 8));
    facts.push_back({{"op", "ADD"},
                     {"subject", subject},
                     {"predicate", vocab[fnv1a(body) % vocab.size()]},
                     {"object", text::join(toks, " ")},
                     {"source_message_ids", {pid}}});
  }
  return json{{"facts", facts}}.dump();
}

std::string StubProvider::offline_layer(const std::string& prompt) const {
  auto layer = line_value(prompt, kTaskLayer);
  auto subject = line_value(prompt, "Subject: ");
  auto facts = fact_lines(between(prompt, "FACTS:\n", ""));
  if (facts.empty()) return "No facts supplied.";
  std::ostringstream out;
  if (layer == "anchors" || layer == "predictions") {
    const bool anchors = layer == "anchors";
    const std::size_t n = std::min<std::size_t>(anchors ? 3 : 2, facts.size());
    std::ostringstream prov;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = anchors ? facts[i] : facts[facts.size() - 1 - i];
      if (anchors) {
        out << "## A" << i + 1 << ": " << f.object << "\n" << subject << " " << readable(f.predicate) << " "
            << f.object << ".\n\n";
        prov << "A" << i + 1 << ": " << f.id << "\n";
      } else {
        out << "## P" << i + 1 << ": When " << f.object << " is at stake\n" << subject << " will likely "
            << readable(f.predicate) << " " << f.object << ".\n\n";
        prov << "P" << i + 1 << ": " << f.id << "\n";
      }
    }
    out << "```provenance\n" << prov.str() << "```\n";
  } else {
    out << "## Core patterns\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(12, facts.size()); ++i)
      out << "- " << subject << " " << readable(facts[i].predicate) << " " << facts[i].object << ".\n";
  }
  return out.str();
}

std::string StubProvider::offline_compose(const std::string& prompt) const {
  auto subject = line_value(prompt, "Subject: ");
  auto ident = fact_lines(between(prompt, "IDENTITY FACTS:\n", ""));
  std::ostringstream out;
  out << subject << " acts from a small set of settled commitments.";
  for (std::size_t i = 0; i < ident.size(); ++i)
    out << (i == 0 ? " " : " They also ") << (i == 0 ? subject + " " : std::string()) << readable(ident[i].predicate)
        << " " << ident[i].object << ".";
  out << "\n";
  return out.str();
}

std::string StubProvider::offline_battery(const std::string& prompt) const {
  std::size_t count = 0;
  try {
    count = std::stoul(line_value(prompt, "COUNT: "));
  } catch (...) {
    return R"({"questions": []})";
  }
  std::vector<std::string> cats;
  {
    std::stringstream ss(line_value(prompt, "CATEGORIES: "));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = text::trim(item);
      if (!t.empty()) cats.push_back(t);
    }
  }
  auto a = prompt.find(kWindowOpen);
  auto b = prompt.rfind(kWindowClose);
  if (a == std::string::npos || b == std::string::npos || cats.empty()) return R"({"questions": []})";
  auto window = prompt.substr(a + kWindowOpen.size(), b - a - kWindowOpen.size());

  std::vector<std::string> usable;
  for (auto& s : sentences(window)) {
    if (text::word_count(s) < 8) continue;
    if (s.rfind("CHAPTER", 0) == 0 || s.rfind("Chapter", 0) == 0) continue;
    usable.push_back(s);
  }
  std::size_t batch = 1;
  try {
    batch = std::stoul(line_value(prompt, "BATCH: "));
  } catch (...) {
  }
  json qs = json::array();
  const std::size_t m = usable.size();
  for (std::size_t k = 0; k < std::min(count, m); ++k) {
    const auto& span = usable[(k * m / count + batch - 1) % m];
    std::vector<std::string> toks;
    for (auto& t : content_tokens(span))
      if (text::utf8_length(t) >= 5) toks.push_back(t);
    std::stable_sort(toks.begin(), toks.end(), [](auto& x, auto& y) { return x.size() > y.size(); });
    toks.resize(std::min<std::size_t>(3, toks.size()));
    std::string topic = toks.empty() ? std::string("this") : text::join(toks, ", ");
    qs.push_back({{"stem", "When a situation turns on " + topic + ", how does the subject act?"},
                  {"category", cats[(k + fnv1a(span)) % cats.size()]},
                  {"span", span}});
  }
  return json{{"questions", qs}}.dump();
}

std::vector<EmbeddingVector> StubProvider::embed_texts(const std::vector<std::string>& texts) {
  calls_.fetch_add(1);
  if (fail_always_) throw TransientProviderError(503, id() + ": service unavailable");
  std::vector<EmbeddingVector> out;
  for (const auto& t : texts) {
    EmbeddingVector v;
    if (embed_mode_ == "basis") {
      std::size_t dims = basis_.empty() ? 1 : basis_.begin()->second.size();
      v.values.assign(dims, 0.0);
      for (auto& tok : text::ngram_tokens(t)) {
        auto it = basis_.find(tok);
        if (it == basis_.end()) continue;
        for (std::size_t i = 0; i < dims && i < it->second.size(); ++i) v.values[i] += it->second[i];
      }
    } else if (embed_mode_ == "text") {
      v.values.resize(embed_dims_);
      std::uint64_t state = fnv1a(t);
      for (auto& x : v.values) x = static_cast<double>(splitmix(state) >> 11) / 9007199254740992.0 * 2.0 - 1.0;
    } else {
      v.values.assign(embed_dims_, 0.0);
      for (auto& tok : text::ngram_tokens(t)) {
        auto h = fnv1a(tok);
        v.values[h % embed_dims_] += (h >> 63) ? -1.0 : 1.0;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace repacc
