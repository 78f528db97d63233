#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace repacc {

struct Chapter {
  std::string id;
  std::string text;
};

struct Corpus {
  std::string subject_id;
  std::string title;
  std::vector<Chapter> chapters;
  std::size_t word_count = 0;
  std::string source_ref;

  const Chapter& chapter(const std::string& id) const;
  nlohmann::json manifest() const;
  nlohmann::json to_json() const;
  static Corpus from_json(const nlohmann::json& j);
};

struct ImportOptions {
  std::vector<std::string> chapter_markers = default_chapter_markers();
  bool single_chapter_fallback = false;
  bool strip_boilerplate = true;
  std::string title;
  std::string source_ref;

  static std::vector<std::string> default_chapter_markers();
};

std::string normalize_text(const std::string& raw, bool strip_boilerplate);

Corpus import_corpus(const std::string& raw_text, const std::string& subject_id,
                     const ImportOptions& opts = {});

struct CorpusSplit {
  std::string subject_id;
  std::vector<std::string> training;
  std::vector<std::string> heldout;
  double ratio = 0.5;
  double achieved_share = 0.0;
  std::string split_digest;

  nlohmann::json to_json() const;
  static CorpusSplit from_json(const nlohmann::json& j);
};

struct SplitOptions {
  // Permits ratio 0.0 (all held out) and 1.0 (all training).
  bool allow_degenerate = false;
};

CorpusSplit split_corpus(const Corpus& corpus, double ratio = 0.5, const SplitOptions& opts = {});

std::string split_digest(const std::vector<std::string>& training, const std::vector<std::string>& heldout);

Corpus training_part(const Corpus& corpus, const CorpusSplit& split);
Corpus heldout_part(const Corpus& corpus, const CorpusSplit& split);
std::string joined_text(const Corpus& corpus);

struct LeakMatch {
  std::string question_id;
  std::string span_text;
  std::string heldout_chapter_id;
  std::size_t length = 0;

  bool operator==(const LeakMatch&) const = default;
};

struct LeakReport {
  std::size_t n_gram = 7;
  std::vector<std::string> leaking_question_ids;
  std::vector<LeakMatch> matches;

  bool clean() const { return matches.empty(); }
  nlohmann::json to_json() const;
};

// Items are (question_id, stem). Each maximal shared run of at least n
// tokens is reported once.
LeakReport leakage_scan(const std::vector<std::pair<std::string, std::string>>& items,
                        const std::vector<Chapter>& heldout, std::size_t n = 7);
LeakReport leakage_scan(const std::vector<std::pair<std::string, std::string>>& items,
                        const std::string& heldout_text, std::size_t n = 7);

}  // namespace repacc
