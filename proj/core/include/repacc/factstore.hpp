#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/corpus.hpp"
#include "repacc/error.hpp"
#include "repacc/prompts.hpp"
#include "repacc/providers.hpp"

namespace repacc {

inline const std::vector<std::string> kPredicateGroups = {"behavioral", "identity",   "knowledge",  "procedural",
                                                          "relational", "temporal", "attentional"};

struct Predicate {
  std::string name;
  std::string group;
};

class Vocabulary {
 public:
  static Vocabulary load(const std::filesystem::path& p);
  static Vocabulary load_default();
  static Vocabulary from_json(const nlohmann::json& j);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const std::string& group_of(const std::string& name) const;
  const std::vector<Predicate>& predicates() const { return predicates_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return predicates_.size(); }
  const std::string& version() const { return version_; }

 private:
  std::string version_;
  std::vector<Predicate> predicates_;
  std::map<std::string, std::size_t> index_;
};

enum class FactStatus { Active, Deleted };

struct Fact {
  std::string fact_id;
  std::string subject_id;
  std::string predicate;
  std::string object;
  std::string tier;
  std::vector<std::string> source_message_ids;
  FactStatus status = FactStatus::Active;
  int revision = 1;

  bool active() const { return status == FactStatus::Active; }
  nlohmann::json to_json() const;
  static Fact from_json(const nlohmann::json& j);
  bool operator==(const Fact&) const = default;
};

enum class AudnKind { Add, Update, Delete, Noop };
std::string audn_name(AudnKind k);
AudnKind audn_from_name(const std::string& s);

struct AudnOp {
  AudnKind kind = AudnKind::Noop;
  std::optional<std::string> target_fact_id;
  std::optional<Fact> payload;
  std::string rationale;

  nlohmann::json to_json() const;
  static AudnOp from_json(const nlohmann::json& j);

  static AudnOp add(Fact body, std::string rationale = {});
  static AudnOp update(std::string target, Fact body, std::string rationale = {});
  static AudnOp remove(std::string target, std::string rationale = {});
  static AudnOp noop(std::string rationale = {});
};

struct TraceChain {
  std::string claim_text;
  std::vector<std::string> pattern_ids;
  std::vector<std::string> fact_ids;
  std::vector<std::pair<std::string, std::string>> passages;
  bool tombstoned = false;

  nlohmann::json to_json() const;
};

struct FactStoreOptions {
  // trace() on a deleted fact: true returns a tombstone-flagged chain,
  // false raises UnknownId.
  bool trace_tombstones = true;
};

// Single-writer store. Every accepted op is journaled; state is a pure
// function of the journal.
class FactStore {
 public:
  explicit FactStore(Vocabulary vocab, FactStoreOptions opts = {});
  FactStore(const FactStore& other);
  FactStore& operator=(const FactStore&) = delete;

  // Returns the fact id touched (empty for NOOP).
  std::string apply(const AudnOp& op);

  std::vector<Fact> active_facts() const;
  std::vector<Fact> all_facts() const;
  std::optional<Fact> find(const std::string& fact_id) const;
  std::size_t active_size() const;
  std::vector<nlohmann::json> journal() const;
  std::size_t journal_size() const;
  const Vocabulary& vocabulary() const { return vocab_; }

  void add_passage(const std::string& message_id, const std::string& excerpt);
  void link(const std::string& pattern_id, const std::vector<std::string>& fact_ids,
            const std::string& claim_text = {});
  TraceChain trace(const std::string& id) const;

  nlohmann::json snapshot() const;
  void save(const std::filesystem::path& dir) const;
  static FactStore load(const std::filesystem::path& dir, Vocabulary vocab, FactStoreOptions opts = {});
  static FactStore replay(const std::vector<nlohmann::json>& journal, Vocabulary vocab, FactStoreOptions opts = {});

 private:
  std::string apply_locked(const AudnOp& op);
  void validate_body(const Fact& body) const;
  static std::string fold_key(const Fact& f);

  Vocabulary vocab_;
  FactStoreOptions opts_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Fact> facts_;
  std::vector<std::string> order_;
  std::size_t next_id_ = 1;
  std::vector<nlohmann::json> journal_;
  std::map<std::string, std::string> passages_;
  std::map<std::string, std::set<std::string>> pattern_to_facts_;
  std::map<std::string, std::set<std::string>> fact_to_patterns_;
  std::map<std::string, std::string> claims_;
};

struct ExtractionOptions {
  std::string subject_name;
  std::size_t passages_per_batch = 8;
  std::size_t known_fact_limit = 200;
  std::optional<PromptPack> pack;  // defaults to the shipped pack
};

struct ExtractionRejection {
  std::string batch;
  Errc code;
  std::string detail;
};

struct ExtractionResult {
  std::vector<AudnOp> ops;
  std::vector<ExtractionRejection> rejected;
  std::vector<std::pair<std::string, std::string>> passages;
};

// Paragraphs of the corpus with ids "<chapter>-p<k>".
std::vector<std::pair<std::string, std::string>> corpus_passages(const Corpus& corpus);

ExtractionResult extract_facts(const Corpus& training, ModelProvider& provider, const Vocabulary& vocab,
                               const ExtractionOptions& opts = {}, const FactStore* existing = nullptr,
                               const RetryPolicy& policy = {}, CallLedger* ledger = nullptr);

struct PassageIndex {
  std::string provider_id;
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vectors;

  nlohmann::json to_json() const;
  std::vector<std::pair<std::string, double>> search(const EmbeddingVector& query, std::size_t k) const;
};

PassageIndex build_passage_index(const std::vector<std::pair<std::string, std::string>>& passages,
                                 ModelProvider& embedder, std::size_t batch = 64);

}  // namespace repacc
