#include "repacc/specdoc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <random>
#include <regex>
#include <set>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::string layer_name(LayerKind k) {
  switch (k) {
    case LayerKind::Anchors: return "anchors";
    case LayerKind::Core: return "core";
    case LayerKind::Predictions: return "predictions";
  }
  return "?";
}

namespace {

LayerKind layer_from_name(const std::string& s) {
  if (s == "anchors") return LayerKind::Anchors;
  if (s == "core") return LayerKind::Core;
  if (s == "predictions") return LayerKind::Predictions;
  fail(Errc::Parse, "unknown layer " + s);
}

std::string fact_listing(const std::vector<Fact>& facts) {
  std::string out;
  for (const auto& f : facts) out += f.fact_id + " | " + f.predicate + " | " + f.object + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80 || c == '_'; }

bool sentence_start(const std::string& text, std::size_t pos) {
  while (pos > 0 && (text[pos - 1] == ' ' || text[pos - 1] == '\t')) --pos;
  if (pos == 0) return true;
  const char c = text[pos - 1];
  return c == '.' || c == '!' || c == '?' || c == '\n';
}

std::string scrub(const std::string& text, const std::string& needle) {
  if (needle.empty()) return text;
  const auto lower_text = text::ascii_lower(text);
  const auto lower_needle = text::ascii_lower(needle);
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto pos = lower_text.find(lower_needle, i);
    if (pos == std::string::npos) break;
    const auto end = pos + lower_needle.size();
    const bool left_ok = pos == 0 || !word_byte(static_cast<unsigned char>(text[pos - 1]));
    const bool right_ok = end >= text.size() || !word_byte(static_cast<unsigned char>(text[end]));
    if (left_ok && right_ok) {
      out.append(text, i, pos - i);
      std::string referent(kNeutralReferent);
      if (sentence_start(text, pos)) referent[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(referent[0])));
      out += referent;
      i = end;
    } else {
      out.append(text, i, pos + 1 - i);
      i = pos + 1;
    }
  }
  out.append(text, std::min(i, text.size()), std::string::npos);
  return out;
}

}  // namespace

const SpecLayer* AuthoredLayers::find(LayerKind k) const {
  for (const auto& l : layers)
    if (l.kind == k) return &l;
  return nullptr;
}

const SpecLayer& AuthoredLayers::get(LayerKind k) const {
  if (auto* l = find(k)) return *l;
  fail(Errc::MissingAsset, "layer " + layer_name(k) + " is missing");
}

std::vector<std::string> parse_item_ids(const std::string& text, char prefix) {
  static const std::regex heading(R"(^#{1,6}\s*([AP][0-9]+)\b)");
  std::vector<std::string> ids;
  for (const auto& line : text::split_lines(text)) {
    std::smatch m;
    if (std::regex_search(line, m, heading) && m[1].str()[0] == prefix) ids.push_back(m[1].str());
  }
  return ids;
}

std::optional<std::map<std::string, std::vector<std::string>>> take_provenance(std::string& text) {
  const std::string open = "```provenance";
  auto a = text.find(open);
  if (a == std::string::npos) return std::nullopt;
  auto body_start = text.find('\n', a);
  if (body_start == std::string::npos) return std::nullopt;
  auto b = text.find("```", body_start);
  if (b == std::string::npos) return std::nullopt;
  std::map<std::string, std::vector<std::string>> prov;
  for (const auto& line : text::split_lines(text.substr(body_start + 1, b - body_start - 1))) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    auto item = text::trim(line.substr(0, colon));
    std::vector<std::string> ids;
    std::string rest = line.substr(colon + 1);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    for (auto& t : text::split_whitespace(rest)) ids.push_back(t);
    if (!item.empty()) prov[item] = ids;
  }
  auto end = b + 3;
  text = text::trim(text.substr(0, a) + text.substr(std::min(end, text.size())));
  return prov;
}

AuthoredLayers author_layers(const std::vector<Fact>& facts, ModelProvider& provider, const AuthorOptions& opts,
                             const RetryPolicy& policy, CallLedger* ledger) {
  if (facts.empty()) fail(Errc::InvalidArgument, "cannot author layers from an empty fact set");
  const PromptPack pack = opts.pack ? *opts.pack : PromptPack::load_default();
  const auto listing = fact_listing(facts);
  const std::string subject = opts.subject_name.empty() ? facts.front().subject_id : opts.subject_name;

  const std::vector<LayerKind> kinds = {LayerKind::Anchors, LayerKind::Core, LayerKind::Predictions};
  auto prompt_for = [&](LayerKind k) {
    return render(pack.get("layer_" + layer_name(k)),
                  {{"domain_guard", pack.domain_guard}, {"subject", subject}, {"facts", listing}});
  };

  std::vector<std::string> raw(kinds.size());
  if (opts.parallel) {
    std::vector<std::future<std::string>> futs;
    for (auto k : kinds)
      futs.push_back(std::async(std::launch::async, [&, k] {
        return generate_or_throw(provider, "", prompt_for(k), policy, ledger);
      }));
    for (std::size_t i = 0; i < kinds.size(); ++i) raw[i] = futs[i].get();
  } else {
    for (std::size_t i = 0; i < kinds.size(); ++i) raw[i] = generate_or_throw(provider, "", prompt_for(kinds[i]), policy, ledger);
  }

  AuthoredLayers out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    SpecLayer layer{kinds[i], text::trim(raw[i]), {}};
    if (kinds[i] != LayerKind::Core) {
      const char prefix = kinds[i] == LayerKind::Anchors ? 'A' : 'P';
      auto prov = take_provenance(layer.text);
      layer.item_ids = parse_item_ids(layer.text, prefix);
      if (layer.item_ids.empty())
        fail(Errc::UnparseableLayer, layer_name(kinds[i]) + " layer has no " + std::string(1, prefix) + "<n> headings");
      std::set<std::string> uniq(layer.item_ids.begin(), layer.item_ids.end());
      if (uniq.size() != layer.item_ids.size())
        fail(Errc::UnparseableLayer, layer_name(kinds[i]) + " layer repeats an item id");
      if (!prov) {
        out.warnings.push_back(layer_name(kinds[i]) + ": no provenance block; provenance left empty");
      } else {
        for (auto& [item, ids] : *prov) {
          if (!uniq.count(item)) {
            out.warnings.push_back(layer_name(kinds[i]) + ": provenance for unknown item " + item);
            continue;
          }
          out.provenance[item] = ids;
        }
      }
    }
    out.layers.push_back(std::move(layer));
  }
  return out;
}

std::vector<Fact> identity_fact_sample(const std::vector<Fact>& facts, std::size_t limit) {
  std::vector<Fact> ident;
  for (const auto& f : facts)
    if (f.active() && f.tier == "identity") ident.push_back(f);
  auto num = [](const std::string& id) { return std::stoul(id.substr(id.rfind('-') + 1)); };
  std::stable_sort(ident.begin(), ident.end(), [&](auto& a, auto& b) { return num(a.fact_id) < num(b.fact_id); });
  if (ident.size() > limit) ident.resize(limit);
  return ident;
}

std::string compose_brief(const AuthoredLayers& layers, const std::vector<Fact>& identity_sample,
                          ModelProvider& provider, const AuthorOptions& opts, const RetryPolicy& policy,
                          CallLedger* ledger) {
  const auto& a = layers.get(LayerKind::Anchors);
  const auto& c = layers.get(LayerKind::Core);
  const auto& p = layers.get(LayerKind::Predictions);
  const PromptPack pack = opts.pack ? *opts.pack : PromptPack::load_default();
  const std::string subject = opts.subject_name;
  auto prompt = render(pack.get("compose"), {{"domain_guard", pack.domain_guard},
                                             {"subject", subject},
                                             {"layers", a.text + "\n\n" + c.text + "\n\n" + p.text},
                                             {"identity_facts", fact_listing(identity_sample)}});
  return text::trim(generate_or_throw(provider, "", prompt, policy, ledger));
}

std::string anonymize(const std::string& text, const SubjectNames& names) {
  std::vector<std::string> needles;
  auto add = [&](const std::string& s) {
    auto t = text::trim(s);
    if (!t.empty()) needles.push_back(t);
  };
  std::vector<std::string> full = names.aliases;
  full.push_back(names.name);
  for (const auto& n : full) {
    add(n);
    for (const auto& tok : text::split_whitespace(n)) {
      const auto first = static_cast<unsigned char>(tok[0]);
      if (text::utf8_length(tok) >= 3 && (std::isupper(first) || first >= 0x80)) add(tok);
    }
  }
  std::sort(needles.begin(), needles.end(), [](auto& x, auto& y) { return x.size() != y.size() ? x.size() > y.size() : x < y; });
  needles.erase(std::unique(needles.begin(), needles.end()), needles.end());
  std::string out = text;
  for (const auto& n : needles) out = scrub(out, n);
  return out;
}

std::size_t estimate_tokens(const std::string& text) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(text::word_count(text)) * 1.4));
}

std::string SpecDocument::served() const {
  std::string out;
  for (const auto kind : {LayerKind::Anchors, LayerKind::Core, LayerKind::Predictions}) {
    for (const auto& l : layers)
      if (l.kind == kind) out += l.text + "\n\n";
  }
  return out + brief;
}

json SpecDocument::manifest() const {
  json files = json::object();
  json items = json::object();
  for (const auto& l : layers) {
    files[layer_name(l.kind) + ".md"] = sha256_hex(l.text);
    items[layer_name(l.kind)] = l.item_ids;
  }
  files["brief.md"] = sha256_hex(brief);
  return {{"subject_id", subject_id},
          {"anonymized", anonymized},
          {"char_count", char_count},
          {"token_estimate", token_estimate},
          {"served_sha256", sha256_hex(served())},
          {"files", files},
          {"item_ids", items},
          {"provenance", provenance},
          {"identity_sample", identity_sample}};
}

void SpecDocument::save(const std::filesystem::path& dir) const {
  for (const auto& l : layers) io::write_file(dir / (layer_name(l.kind) + ".md"), l.text + "\n");
  io::write_file(dir / "brief.md", brief + "\n");
  io::write_json(dir / "manifest.json", manifest());
}

SpecDocument SpecDocument::load(const std::filesystem::path& dir) {
  auto m = io::read_json(dir / "manifest.json");
  SpecDocument d;
  d.subject_id = m.at("subject_id");
  d.anonymized = m.at("anonymized");
  d.provenance = m.at("provenance").get<std::map<std::string, std::vector<std::string>>>();
  d.identity_sample = m.value("identity_sample", std::vector<std::string>{});
  auto strip_nl = [](std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  for (const auto* name : {"anchors", "core", "predictions"}) {
    SpecLayer l;
    l.kind = layer_from_name(name);
    l.text = strip_nl(io::read_file(dir / (std::string(name) + ".md")));
    l.item_ids = m.at("item_ids").at(name).get<std::vector<std::string>>();
    if (sha256_hex(l.text) != m.at("files").at(std::string(name) + ".md"))
      fail(Errc::ChecksumMismatch, dir.string() + "/" + name + ".md changed since assembly");
    d.layers.push_back(std::move(l));
  }
  d.brief = strip_nl(io::read_file(dir / "brief.md"));
  if (sha256_hex(d.brief) != m.at("files").at("brief.md"))
    fail(Errc::ChecksumMismatch, dir.string() + "/brief.md changed since assembly");
  d.char_count = d.served().size();
  d.token_estimate = estimate_tokens(d.served());
  return d;
}

SpecDocument assemble_spec(const std::string& subject_id, const AuthoredLayers& layers, const std::string& brief,
                           bool anonymize_names, const SubjectNames& names) {
  SpecDocument d;
  d.subject_id = subject_id;
  for (const auto kind : {LayerKind::Anchors, LayerKind::Core, LayerKind::Predictions}) {
    SpecLayer l = layers.get(kind);
    if (anonymize_names) l.text = anonymize(l.text, names);
    d.layers.push_back(std::move(l));
  }
  d.brief = anonymize_names ? anonymize(brief, names) : brief;
  d.anonymized = anonymize_names;
  d.provenance = layers.provenance;
  d.char_count = d.served().size();
  d.token_estimate = estimate_tokens(d.served());
  return d;
}

json DerangementMap::to_json() const {
  json j = {{"scheme", scheme == DerangementScheme::V1Fixed ? "v1_fixed" : "v2_random"}, {"pairs", pairs}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

DerangementMap derange(const std::vector<std::string>& subjects, DerangementScheme scheme,
                       std::optional<std::uint64_t> seed, const std::map<std::string, std::string>* fixed_table) {
  std::set<std::string> uniq(subjects.begin(), subjects.end());
  if (uniq.size() != subjects.size()) fail(Errc::InvalidArgument, "duplicate subject ids");
  if (subjects.size() < 2) fail(Errc::TooFewSubjects, "a derangement needs at least two subjects");
  DerangementMap out;
  out.scheme = scheme;

  if (scheme == DerangementScheme::V1Fixed) {
    if (!fixed_table) fail(Errc::MissingAsset, "v1 derangement needs a fixed table");
    std::set<std::string> assigned;
    for (const auto& s : subjects) {
      auto it = fixed_table->find(s);
      if (it == fixed_table->end()) fail(Errc::MissingAsset, "fixed table has no entry for " + s);
      if (it->second == s) fail(Errc::FixedPointInTable, s + " is assigned its own spec");
      if (!assigned.insert(it->second).second) fail(Errc::InvalidArgument, it->second + " is assigned twice");
      out.pairs[s] = it->second;
    }
    return out;
  }

  if (!seed) fail(Errc::InvalidArgument, "v2 derangement needs a seed");
  out.seed = seed;
  std::vector<std::string> sorted(uniq.begin(), uniq.end());
  std::mt19937_64 rng(*seed);
  std::vector<std::string> perm;
  for (;;) {
    perm = sorted;
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[bounded(rng, i + 1)]);
    bool fixed = false;
    for (std::size_t i = 0; i < perm.size() && !fixed; ++i) fixed = perm[i] == sorted[i];
    if (!fixed) break;
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) out.pairs[sorted[i]] = perm[i];
  return out;
}

std::map<std::string, std::string> load_fixed_table(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  return j.at("pairs").get<std::map<std::string, std::string>>();
}

}  // namespace repacc
