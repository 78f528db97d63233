#include "repacc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <unordered_map>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

std::vector<std::string> ImportOptions::default_chapter_markers() {
  return {R"(^\s*CHAPTER\b)", R"(^\s*Chapter\s+[0-9IVXLC]+\b)"};
}

const Chapter& Corpus::chapter(const std::string& id) const {
  for (const auto& c : chapters)
    if (c.id == id) return c;
  fail(Errc::UnknownId, "no chapter " + id + " in corpus " + subject_id);
}

json Corpus::manifest() const {
  json chs = json::array();
  for (const auto& c : chapters)
    chs.push_back({{"id", c.id}, {"words", text::word_count(c.text)}, {"sha256", sha256_hex(c.text)}});
  return {{"subject_id", subject_id}, {"title", title},       {"source_ref", source_ref},
          {"word_count", word_count}, {"chapters", chs}};
}

json Corpus::to_json() const {
  json chs = json::array();
  for (const auto& c : chapters) chs.push_back({{"id", c.id}, {"text", c.text}});
  return {{"subject_id", subject_id}, {"title", title}, {"source_ref", source_ref},
          {"word_count", word_count}, {"chapters", chs}};
}

Corpus Corpus::from_json(const json& j) {
  Corpus c;
  c.subject_id = j.at("subject_id").get<std::string>();
  c.title = j.value("title", "");
  c.source_ref = j.value("source_ref", "");
  for (const auto& ch : j.at("chapters")) c.chapters.push_back({ch.at("id"), ch.at("text")});
  c.word_count = 0;
  for (const auto& ch : c.chapters) c.word_count += text::word_count(ch.text);
  return c;
}

std::string normalize_text(const std::string& raw, bool strip_boilerplate) {
  std::string s;
  s.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      s.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      s.push_back(raw[i]);
    }
  }

  auto lines = text::split_lines(s);
  if (strip_boilerplate) {
    std::size_t begin = 0, end = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].rfind("*** START OF", 0) == 0) {
        begin = i + 1;
        break;
      }
    }
    for (std::size_t i = begin; i < lines.size(); ++i) {
      if (lines[i].rfind("*** END OF", 0) == 0) {
        end = i;
        break;
      }
    }
    lines = std::vector<std::string>(lines.begin() + static_cast<std::ptrdiff_t>(begin),
                                     lines.begin() + static_cast<std::ptrdiff_t>(end));
  }

  std::string out;
  std::size_t blank_run = 0;
  for (auto& line : lines) {
    std::string collapsed;
    std::size_t i = 0;
    while (i < line.size()) {
      if (line[i] == ' ' || line[i] == '\t') {
        std::size_t j = i;
        while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
        if (j - i > 2)
          collapsed.push_back(' ');
        else
          collapsed.append(line, i, j - i);
        i = j;
      } else {
        collapsed.push_back(line[i++]);
      }
    }
    while (!collapsed.empty() && (collapsed.back() == ' ' || collapsed.back() == '\t')) collapsed.pop_back();
    if (collapsed.empty()) {
      ++blank_run;
      if (blank_run > 1) continue;
    } else {
      blank_run = 0;
    }
    out += collapsed;
    out.push_back('\n');
  }
  return text::trim(out);
}

Corpus import_corpus(const std::string& raw_text, const std::string& subject_id, const ImportOptions& opts) {
  if (text::trim(raw_text).empty()) fail(Errc::EmptyCorpus, "corpus for " + subject_id + " is empty");
  auto norm = normalize_text(raw_text, opts.strip_boilerplate);
  if (norm.empty()) fail(Errc::EmptyCorpus, "corpus for " + subject_id + " is empty after normalization");

  std::vector<std::regex> markers;
  for (const auto& m : opts.chapter_markers) markers.emplace_back(m, std::regex::ECMAScript);

  Corpus c;
  c.subject_id = subject_id;
  c.title = opts.title;
  c.source_ref = opts.source_ref;

  std::vector<std::string> current;
  bool in_chapter = false;
  auto flush = [&] {
    if (!in_chapter) return;
    auto body = text::trim(text::join(current, "\n"));
    if (!body.empty()) {
      char id[16];
      std::snprintf(id, sizeof id, "ch%02zu", c.chapters.size() + 1);
      c.chapters.push_back({id, body});
    }
    current.clear();
  };
  for (auto& line : text::split_lines(norm)) {
    bool is_marker = std::any_of(markers.begin(), markers.end(),
                                 [&](const std::regex& r) { return std::regex_search(line, r); });
    if (is_marker) {
      flush();
      in_chapter = true;
    }
    if (in_chapter) current.push_back(line);
  }
  flush();

  if (c.chapters.empty()) {
    if (!opts.single_chapter_fallback)
      fail(Errc::NoChapterBoundary, "no chapter markers matched in corpus for " + subject_id);
    c.chapters.push_back({"ch01", norm});
  }
  for (const auto& ch : c.chapters) c.word_count += text::word_count(ch.text);
  return c;
}

json CorpusSplit::to_json() const {
  return {{"subject_id", subject_id}, {"training", training}, {"heldout", heldout},
          {"ratio", ratio},           {"achieved_share", achieved_share}, {"split_digest", split_digest}};
}

CorpusSplit CorpusSplit::from_json(const json& j) {
  CorpusSplit s;
  s.subject_id = j.at("subject_id");
  s.training = j.at("training").get<std::vector<std::string>>();
  s.heldout = j.at("heldout").get<std::vector<std::string>>();
  s.ratio = j.at("ratio");
  s.achieved_share = j.value("achieved_share", 0.0);
  s.split_digest = j.at("split_digest");
  if (s.split_digest != repacc::split_digest(s.training, s.heldout))
    fail(Errc::ChecksumMismatch, "split digest does not match partition for " + s.subject_id);
  return s;
}

std::string split_digest(const std::vector<std::string>& training, const std::vector<std::string>& heldout) {
  return sha256_hex(canonical_json({{"training", training}, {"heldout", heldout}}));
}

CorpusSplit split_corpus(const Corpus& corpus, double ratio, const SplitOptions& opts) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) fail(Errc::InvalidArgument, "split ratio must lie in [0,1]");
  const bool degenerate = ratio <= 0.0 || ratio >= 1.0;
  if (degenerate && !opts.allow_degenerate)
    fail(Errc::InvalidArgument, "degenerate split ratio rejected; both halves must be non-empty");
  const std::size_t n = corpus.chapters.size();
  if (n == 0) fail(Errc::EmptyCorpus, "corpus has no chapters");
  if (!degenerate && n < 2)
    fail(Errc::SingleChapterUnsplittable, "corpus " + corpus.subject_id + " has a single chapter");

  std::vector<std::size_t> words;
  double total = 0;
  for (const auto& ch : corpus.chapters) {
    words.push_back(text::word_count(ch.text));
    total += static_cast<double>(words.back());
  }

  std::size_t k = 0;
  if (degenerate) {
    k = ratio >= 1.0 ? n : 0;
  } else {
    // Walk the prefix until the cumulative share reaches the target, then
    // keep whichever of the two neighbouring boundaries is closer.
    double cum = 0;
    k = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double before = cum / total;
      cum += static_cast<double>(words[i]);
      double after = cum / total;
      k = i + 1;
      if (after >= ratio) {
        if (i > 0 && std::abs(before - ratio) <= std::abs(after - ratio)) k = i;
        break;
      }
    }
  }

  CorpusSplit s;
  s.subject_id = corpus.subject_id;
  s.ratio = ratio;
  double train_words = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < k) {
      s.training.push_back(corpus.chapters[i].id);
      train_words += static_cast<double>(words[i]);
    } else {
      s.heldout.push_back(corpus.chapters[i].id);
    }
  }
  s.achieved_share = total > 0 ? train_words / total : 0.0;
  s.split_digest = split_digest(s.training, s.heldout);
  return s;
}

namespace {

Corpus subset(const Corpus& corpus, const std::vector<std::string>& ids) {
  Corpus c;
  c.subject_id = corpus.subject_id;
  c.title = corpus.title;
  c.source_ref = corpus.source_ref;
  for (const auto& id : ids) {
    c.chapters.push_back(corpus.chapter(id));
    c.word_count += text::word_count(c.chapters.back().text);
  }
  return c;
}

}  // namespace

Corpus training_part(const Corpus& corpus, const CorpusSplit& split) { return subset(corpus, split.training); }
Corpus heldout_part(const Corpus& corpus, const CorpusSplit& split) { return subset(corpus, split.heldout); }

std::string joined_text(const Corpus& corpus) {
  std::vector<std::string> parts;
  for (const auto& ch : corpus.chapters) parts.push_back(ch.text);
  return text::join(parts, "\n\n");
}

json LeakReport::to_json() const {
  json ms = json::array();
  for (const auto& m : matches)
    ms.push_back({{"question_id", m.question_id},
                  {"span_text", m.span_text},
                  {"heldout_chapter_id", m.heldout_chapter_id},
                  {"length", m.length}});
  return {{"n_gram", n_gram}, {"leaking_question_ids", leaking_question_ids}, {"matches", ms}};
}

LeakReport leakage_scan(const std::vector<std::pair<std::string, std::string>>& items,
                        const std::vector<Chapter>& heldout, std::size_t n) {
  if (n < 3) fail(Errc::InvalidArgument, "n-gram length must be at least 3");
  LeakReport report;
  report.n_gram = n;

  std::vector<std::vector<std::string>> htoks;
  htoks.reserve(heldout.size());
  for (const auto& ch : heldout) htoks.push_back(text::ngram_tokens(ch.text));

  auto key_of = [n](const std::vector<std::string>& toks, std::size_t at) {
    std::string k;
    for (std::size_t i = 0; i < n; ++i) {
      k += toks[at + i];
      k.push_back('\x1f');
    }
    return k;
  };

  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> index;
  for (std::size_t c = 0; c < htoks.size(); ++c) {
    const auto& t = htoks[c];
    for (std::size_t p = 0; p + n <= t.size(); ++p) index[key_of(t, p)].emplace_back(c, p);
  }

  for (const auto& [qid, stem] : items) {
    auto q = text::ngram_tokens(stem);
    if (q.size() < n) continue;
    // best[i]: longest verified forward run from question position i.
    std::vector<std::size_t> best(q.size(), 0);
    std::vector<std::size_t> where(q.size(), 0);
    for (std::size_t i = 0; i + n <= q.size(); ++i) {
      auto it = index.find(key_of(q, i));
      if (it == index.end()) continue;
      for (auto [c, p] : it->second) {
        const auto& t = htoks[c];
        std::size_t len = 0;
        while (i + len < q.size() && p + len < t.size() && q[i + len] == t[p + len]) ++len;
        if (len > best[i]) {
          best[i] = len;
          where[i] = c;
        }
      }
    }
    bool any = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (best[i] < n) continue;
      if (i > 0 && best[i - 1] >= best[i] + 1) continue;
      std::vector<std::string> span(q.begin() + static_cast<std::ptrdiff_t>(i),
                                    q.begin() + static_cast<std::ptrdiff_t>(i + best[i]));
      report.matches.push_back({qid, text::join(span, " "), heldout[where[i]].id, best[i]});
      any = true;
    }
    if (any) report.leaking_question_ids.push_back(qid);
  }
  return report;
}

LeakReport leakage_scan(const std::vector<std::pair<std::string, std::string>>& items,
                        const std::string& heldout_text, std::size_t n) {
  return leakage_scan(items, std::vector<Chapter>{{"heldout", heldout_text}}, n);
}

}  // namespace repacc
