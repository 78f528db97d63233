#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/battery.hpp"
#include "repacc/corpus.hpp"
#include "repacc/factstore.hpp"
#include "repacc/providers.hpp"
#include "repacc/specdoc.hpp"

namespace repacc {

struct ConditionId {
  enum class Base { C5, C2a, C2cV1, C2cV2, C4, C4a, C8, C9, C1, C3 };
  Base base = Base::C5;
  std::string system;  // C1 / C3 only
  bool native = false;

  std::string code() const;
  static ConditionId parse(const std::string& code);
  bool uses_spec() const;
  bool uses_wrong_spec() const;
  bool uses_facts() const;
  bool uses_corpus() const;
  bool uses_retrieval() const;
  bool operator==(const ConditionId&) const = default;
};

enum class SegmentKind { Facts, Corpus, Retrieval, Spec, WrongSpec };
std::string segment_name(SegmentKind k);

struct Segment {
  SegmentKind kind;
  std::string text;
  std::vector<std::string> provenance;
};

struct ContextBlock {
  std::vector<Segment> parts;
  std::size_t char_count = 0;
  std::size_t token_estimate = 0;

  bool empty() const { return parts.empty(); }
  std::string render() const;
  nlohmann::json describe() const;  // kinds + provenance, no text
};

// One ranked list of retrieved fact texts per question.
struct RetrievalLog {
  std::string system_id;
  std::map<std::string, std::vector<std::string>> by_qid;

  static RetrievalLog from_json(const nlohmann::json& j);
  static RetrievalLog load(const std::filesystem::path& p);
  nlohmann::json to_json() const;
};

struct SubjectAssets {
  std::string subject_id;
  std::string subject_name;
  std::set<std::string> heldout_chapter_ids;
  const SpecDocument* spec = nullptr;
  std::vector<Fact> facts;
  const Corpus* training = nullptr;
  std::map<std::string, RetrievalLog> retrieval;  // key: system id, "_fullpipeline" suffix for native
  // For C2c: the assigned subject's anonymized spec per scheme.
  std::map<std::string, const SpecDocument*> specs_by_subject;
  const DerangementMap* derangement_v1 = nullptr;
  const DerangementMap* derangement_v2 = nullptr;
};

inline constexpr std::size_t kDefaultContextBudget = 200000;

ContextBlock assemble_context(const ConditionId& condition, const SubjectAssets& assets, const std::string& qid = {},
                              std::size_t budget_tokens = kDefaultContextBudget);

std::string build_user_prompt(const ContextBlock& ctx, const std::string& stem);

struct ResponseRecord {
  std::string subject_id;
  std::string qid;
  std::string condition;
  std::string response_text;
  CallRecord call;
  std::string battery_checksum;
  std::string context_digest;

  nlohmann::json to_json() const;
  static ResponseRecord from_json(const nlohmann::json& j);
};

struct RunOptions {
  std::size_t budget_tokens = kDefaultContextBudget;
  RetryPolicy policy;
  std::size_t workers = 1;
};

struct ConditionRun {
  std::vector<ResponseRecord> records;
  std::map<std::string, std::string> contexts;         // digest -> rendered context
  std::map<std::string, nlohmann::json> context_meta;  // digest -> describe()
};

ConditionRun run_condition(const Battery& battery, const ConditionId& condition, const SubjectAssets& assets,
                           ModelProvider& provider, const RunOptions& opts = {}, CallLedger* ledger = nullptr);

struct SubjectRun {
  const SubjectAssets* assets = nullptr;
  const Battery* battery = nullptr;
};

enum class CellStatus { Completed, Skipped, Excluded, Pending };
std::string cell_status_name(CellStatus s);

struct CellResult {
  std::string subject_id;
  std::string condition;
  CellStatus status = CellStatus::Pending;
  std::string reason;
  std::size_t ok = 0;
  std::size_t failed = 0;
};

struct RunLedger {
  std::string run_id;
  std::vector<CellResult> cells;

  std::size_t count(CellStatus s) const;
  nlohmann::json to_json() const;
};

struct MatrixOptions {
  RunOptions run;
  bool resume = true;
  std::optional<std::size_t> cell_limit;  // stop after executing this many cells
};

RunLedger run_matrix(const std::filesystem::path& root, const std::string& run_id,
                     const std::vector<SubjectRun>& subjects, const std::vector<ConditionId>& conditions,
                     ModelProvider& provider, const MatrixOptions& opts = {}, CallLedger* ledger = nullptr);

std::filesystem::path cell_path(const std::filesystem::path& root, const std::string& run_id,
                                const std::string& subject_id, const std::string& condition);

struct CellFile {
  nlohmann::json manifest;
  std::vector<ResponseRecord> records;
  std::map<std::string, std::string> contexts;
  std::map<std::string, nlohmann::json> context_meta;
  bool excluded = false;
};

CellFile load_cell(const std::filesystem::path& p);

struct IsolationReport {
  std::size_t contexts_scanned = 0;
  std::size_t heldout_tagged_segments = 0;
  std::vector<LeakMatch> overlaps;

  bool clean() const { return heldout_tagged_segments == 0 && overlaps.empty(); }
};

// Scans every served context of a run directory for held-out provenance tags
// and n-token overlaps with the held-out chapters of each subject.
IsolationReport isolation_scan(const std::filesystem::path& run_dir,
                               const std::map<std::string, std::vector<Chapter>>& heldout_by_subject,
                               std::size_t n = 7);

}  // namespace repacc
