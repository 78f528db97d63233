#include <algorithm>
#include <set>

#include "repacc/error.hpp"
#include "repacc/factstore.hpp"
#include "repacc/prompts.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::vector<std::pair<std::string, std::string>> corpus_passages(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& ch : corpus.chapters) {
    std::size_t k = 0;
    std::size_t start = 0;
    const auto& t = ch.text;
    while (start <= t.size()) {
      auto end = t.find("\n\n", start);
      auto para = text::trim(t.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (!para.empty()) {
        std::replace(para.begin(), para.end(), '\n', ' ');
        out.emplace_back(ch.id + "-p" + std::to_string(++k), para);
      }
      if (end == std::string::npos) break;
      start = end + 2;
    }
  }
  return out;
}

namespace {

json parse_object(const std::string& raw) {
  auto a = raw.find('{');
  auto b = raw.rfind('}');
  if (a == std::string::npos || b == std::string::npos || b < a) fail(Errc::MalformedExtraction, "no JSON object");
  try {
    return json::parse(raw.substr(a, b - a + 1));
  } catch (const json::exception& e) {
    fail(Errc::MalformedExtraction, e.what());
  }
}

std::string fold(const std::string& subject, const std::string& predicate, const std::string& object) {
  return text::ascii_lower(text::trim(subject)) + '\x1f' + predicate + '\x1f' + text::ascii_lower(text::trim(object));
}

}  // namespace

ExtractionResult extract_facts(const Corpus& training, ModelProvider& provider, const Vocabulary& vocab,
                               const ExtractionOptions& opts, const FactStore* existing, const RetryPolicy& policy,
                               CallLedger* ledger) {
  const PromptPack pack = opts.pack ? *opts.pack : PromptPack::load_default();
  const auto& tmpl = pack.get("extract");
  const std::string subject_name = opts.subject_name.empty() ? training.subject_id : opts.subject_name;

  ExtractionResult result;
  result.passages = corpus_passages(training);

  std::set<std::string> seen;
  std::string known;
  if (existing) {
    std::size_t listed = 0;
    for (const auto& f : existing->active_facts()) {
      seen.insert(fold(f.subject_id, f.predicate, f.object));
      if (listed++ < opts.known_fact_limit) known += f.fact_id + " | " + f.predicate + " | " + f.object + "\n";
    }
  }
  if (known.empty()) known = "(none)\n";
  known.pop_back();

  const std::size_t per = std::max<std::size_t>(1, opts.passages_per_batch);
  for (std::size_t b = 0; b < result.passages.size(); b += per) {
    std::vector<std::string> batch_ids;
    std::string lines;
    for (std::size_t i = b; i < std::min(b + per, result.passages.size()); ++i) {
      batch_ids.push_back(result.passages[i].first);
      lines += "[" + result.passages[i].first + "] " + result.passages[i].second + "\n";
    }
    lines.pop_back();
    const std::string batch_name = batch_ids.front() + ".." + batch_ids.back();

    auto prompt = render(tmpl, {{"subject", subject_name},
                                {"vocabulary", text::join(vocab.names(), ", ")},
                                {"known_facts", known},
                                {"passages", lines}});
    auto raw = generate_or_throw(provider, "", prompt, policy, ledger);

    json parsed;
    try {
      parsed = parse_object(raw);
      if (!parsed.contains("facts") || !parsed["facts"].is_array())
        fail(Errc::MalformedExtraction, "missing facts array");
    } catch (const Error& e) {
      result.rejected.push_back({batch_name, e.code(), e.what()});
      continue;
    }

    for (const auto& item : parsed["facts"]) {
      try {
        if (!item.is_object()) fail(Errc::MalformedExtraction, "fact entry is not an object");
        auto kind = audn_from_name(item.value("op", "ADD"));
        if (kind == AudnKind::Noop) {
          result.ops.push_back(AudnOp::noop(item.value("rationale", "provider NOOP")));
          continue;
        }
        if (kind == AudnKind::Delete) {
          result.ops.push_back(AudnOp::remove(item.at("target").get<std::string>(), item.value("rationale", "")));
          continue;
        }
        Fact f;
        f.subject_id = training.subject_id;
        f.predicate = text::trim(item.at("predicate").get<std::string>());
        f.object = text::trim(item.at("object").get<std::string>());
        if (f.object.empty()) fail(Errc::MalformedExtraction, "empty object");
        if (!vocab.contains(f.predicate)) fail(Errc::PredicateNotInVocabulary, f.predicate);
        f.tier = vocab.group_of(f.predicate);
        for (const auto& id : item.value("source_message_ids", std::vector<std::string>{}))
          if (std::find(batch_ids.begin(), batch_ids.end(), id) != batch_ids.end()) f.source_message_ids.push_back(id);
        if (f.source_message_ids.empty()) f.source_message_ids = batch_ids;

        if (kind == AudnKind::Update) {
          result.ops.push_back(AudnOp::update(item.at("target").get<std::string>(), f, item.value("rationale", "")));
          continue;
        }
        auto key = fold(f.subject_id, f.predicate, f.object);
        if (!seen.insert(key).second) {
          result.ops.push_back(AudnOp::noop("duplicate of " + f.predicate + " " + f.object));
          continue;
        }
        result.ops.push_back(AudnOp::add(std::move(f), item.value("rationale", "")));
      } catch (const Error& e) {
        result.rejected.push_back({batch_name, e.code(), e.what()});
      } catch (const json::exception& e) {
        result.rejected.push_back({batch_name, Errc::MalformedExtraction, e.what()});
      }
    }
  }
  return result;
}

json PassageIndex::to_json() const {
  json vs = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) vs.push_back({{"id", ids[i]}, {"vector", vectors[i].values}});
  return {{"provider_id", provider_id}, {"entries", vs}};
}

std::vector<std::pair<std::string, double>> PassageIndex::search(const EmbeddingVector& query, std::size_t k) const {
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t i = 0; i < ids.size(); ++i) scored.emplace_back(ids[i], cosine(query, vectors[i]));
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.second > b.second; });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

PassageIndex build_passage_index(const std::vector<std::pair<std::string, std::string>>& passages,
                                 ModelProvider& embedder, std::size_t batch) {
  PassageIndex idx;
  idx.provider_id = embedder.id();
  batch = std::max<std::size_t>(1, batch);
  for (std::size_t b = 0; b < passages.size(); b += batch) {
    std::vector<std::string> texts;
    for (std::size_t i = b; i < std::min(b + batch, passages.size()); ++i) {
      idx.ids.push_back(passages[i].first);
      texts.push_back(passages[i].second);
    }
    for (auto& v : embed(embedder, texts, true)) idx.vectors.push_back(std::move(v));
  }
  return idx;
}

}  // namespace repacc
