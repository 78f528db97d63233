#include "repacc/factstore.hpp"

#include <algorithm>
#include <mutex>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

namespace {

std::size_t id_number(const std::string& id) {
  auto dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoul(id.substr(dash + 1));
  } catch (...) {
    return 0;
  }
}

std::vector<std::string> by_number(const std::set<std::string>& ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
    auto na = id_number(a), nb = id_number(b);
    return na != nb ? na < nb : a < b;
  });
  return out;
}

}  // namespace

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary v;
  v.version_ = j.value("version", "");
  for (const auto& [group, names] : j.at("groups").items()) {
    if (std::find(kPredicateGroups.begin(), kPredicateGroups.end(), group) == kPredicateGroups.end())
      fail(Errc::Parse, "unknown predicate group " + group);
    for (const auto& n : names) {
      auto name = n.get<std::string>();
      if (v.index_.count(name)) fail(Errc::Parse, "duplicate predicate " + name);
      if (name != text::ascii_lower(name) || name.find(' ') != std::string::npos)
        fail(Errc::Parse, "predicate names are lowercase tokens: " + name);
      v.index_[name] = v.predicates_.size();
      v.predicates_.push_back({name, group});
    }
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& p) { return from_json(io::read_json(p)); }
Vocabulary Vocabulary::load_default() { return load(io::data_dir() / "predicates.json"); }

const std::string& Vocabulary::group_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(Errc::PredicateNotInVocabulary, name);
  return predicates_[it->second].group;
}

std::vector<std::string> Vocabulary::names() const {
  std::vector<std::string> out;
  for (const auto& p : predicates_) out.push_back(p.name);
  return out;
}

json Fact::to_json() const {
  return {{"fact_id", fact_id},
          {"subject_id", subject_id},
          {"predicate", predicate},
          {"object", object},
          {"tier", tier},
          {"source_message_ids", source_message_ids},
          {"status", active() ? "active" : "deleted"},
          {"revision", revision}};
}

Fact Fact::from_json(const json& j) {
  Fact f;
  f.fact_id = j.value("fact_id", "");
  f.subject_id = j.value("subject_id", "");
  f.predicate = j.at("predicate");
  f.object = j.at("object");
  f.tier = j.value("tier", "");
  f.source_message_ids = j.value("source_message_ids", std::vector<std::string>{});
  f.status = j.value("status", "active") == "deleted" ? FactStatus::Deleted : FactStatus::Active;
  f.revision = j.value("revision", 1);
  return f;
}

std::string audn_name(AudnKind k) {
  switch (k) {
    case AudnKind::Add: return "ADD";
    case AudnKind::Update: return "UPDATE";
    case AudnKind::Delete: return "DELETE";
    case AudnKind::Noop: return "NOOP";
  }
  return "?";
}

AudnKind audn_from_name(const std::string& s) {
  auto u = text::ascii_lower(s);
  if (u == "add") return AudnKind::Add;
  if (u == "update") return AudnKind::Update;
  if (u == "delete") return AudnKind::Delete;
  if (u == "noop") return AudnKind::Noop;
  fail(Errc::MalformedExtraction, "unknown AUDN op " + s);
}

json AudnOp::to_json() const {
  json j = {{"kind", audn_name(kind)}, {"rationale", rationale}};
  j["target_fact_id"] = target_fact_id ? json(*target_fact_id) : json(nullptr);
  j["payload"] = payload ? payload->to_json() : json(nullptr);
  return j;
}

AudnOp AudnOp::from_json(const json& j) {
  AudnOp op;
  op.kind = audn_from_name(j.at("kind"));
  if (j.contains("target_fact_id") && !j["target_fact_id"].is_null()) op.target_fact_id = j["target_fact_id"];
  if (j.contains("payload") && !j["payload"].is_null()) op.payload = Fact::from_json(j["payload"]);
  op.rationale = j.value("rationale", "");
  return op;
}

AudnOp AudnOp::add(Fact body, std::string rationale) { return {AudnKind::Add, std::nullopt, std::move(body), std::move(rationale)}; }
AudnOp AudnOp::update(std::string target, Fact body, std::string rationale) {
  return {AudnKind::Update, std::move(target), std::move(body), std::move(rationale)};
}
AudnOp AudnOp::remove(std::string target, std::string rationale) {
  return {AudnKind::Delete, std::move(target), std::nullopt, std::move(rationale)};
}
AudnOp AudnOp::noop(std::string rationale) { return {AudnKind::Noop, std::nullopt, std::nullopt, std::move(rationale)}; }

json TraceChain::to_json() const {
  json ps = json::array();
  for (const auto& [id, ex] : passages) ps.push_back({{"message_id", id}, {"excerpt", ex}});
  return {{"claim_text", claim_text}, {"pattern_ids", pattern_ids}, {"fact_ids", fact_ids},
          {"passages", ps},           {"tombstoned", tombstoned}};
}

FactStore::FactStore(Vocabulary vocab, FactStoreOptions opts) : vocab_(std::move(vocab)), opts_(opts) {}

FactStore::FactStore(const FactStore& other) : vocab_(other.vocab_), opts_(other.opts_) {
  std::shared_lock lock(other.mu_);
  facts_ = other.facts_;
  order_ = other.order_;
  next_id_ = other.next_id_;
  journal_ = other.journal_;
  passages_ = other.passages_;
  pattern_to_facts_ = other.pattern_to_facts_;
  fact_to_patterns_ = other.fact_to_patterns_;
  claims_ = other.claims_;
}

std::string FactStore::fold_key(const Fact& f) {
  return text::ascii_lower(text::trim(f.subject_id)) + '\x1f' + f.predicate + '\x1f' +
         text::ascii_lower(text::trim(f.object));
}

void FactStore::validate_body(const Fact& body) const {
  if (!vocab_.contains(body.predicate)) fail(Errc::PredicateNotInVocabulary, body.predicate);
  if (text::trim(body.object).empty()) fail(Errc::InvalidArgument, "fact object is empty");
  if (body.source_message_ids.empty()) fail(Errc::InvalidArgument, "fact carries no source passages");
}

std::string FactStore::apply(const AudnOp& op) {
  std::unique_lock lock(mu_);
  return apply_locked(op);
}

std::string FactStore::apply_locked(const AudnOp& op) {
  std::string touched;
  switch (op.kind) {
    case AudnKind::Noop:
      if (op.payload || op.target_fact_id) fail(Errc::InvalidArgument, "NOOP carries neither target nor payload");
      break;
    case AudnKind::Add: {
      if (!op.payload || op.target_fact_id) fail(Errc::InvalidArgument, "ADD carries a payload and no target");
      Fact f = *op.payload;
      validate_body(f);
      auto key = fold_key(f);
      for (const auto& [id, existing] : facts_)
        if (existing.active() && fold_key(existing) == key)
          fail(Errc::DuplicateAdd, "duplicate of " + id + ": " + f.predicate + " " + f.object);
      f.fact_id = "F-" + std::to_string(next_id_++);
      f.tier = vocab_.group_of(f.predicate);
      f.status = FactStatus::Active;
      f.revision = 1;
      touched = f.fact_id;
      order_.push_back(f.fact_id);
      facts_[f.fact_id] = std::move(f);
      break;
    }
    case AudnKind::Update:
    case AudnKind::Delete: {
      if (!op.target_fact_id) fail(Errc::InvalidArgument, audn_name(op.kind) + " needs a target");
      auto it = facts_.find(*op.target_fact_id);
      if (it == facts_.end() || !it->second.active()) fail(Errc::UnknownTarget, *op.target_fact_id);
      Fact& f = it->second;
      if (op.kind == AudnKind::Update) {
        if (!op.payload) fail(Errc::InvalidArgument, "UPDATE needs a payload");
        validate_body(*op.payload);
        f.predicate = op.payload->predicate;
        f.object = op.payload->object;
        f.source_message_ids = op.payload->source_message_ids;
        f.tier = vocab_.group_of(f.predicate);
      } else {
        if (op.payload) fail(Errc::InvalidArgument, "DELETE carries no payload");
        f.status = FactStatus::Deleted;
      }
      ++f.revision;
      touched = f.fact_id;
      break;
    }
  }
  journal_.push_back({{"seq", journal_.size() + 1}, {"op", op.to_json()}, {"fact_id", touched}});
  return touched;
}

std::vector<Fact> FactStore::active_facts() const {
  std::shared_lock lock(mu_);
  std::vector<Fact> out;
  for (const auto& id : order_)
    if (facts_.at(id).active()) out.push_back(facts_.at(id));
  return out;
}

std::vector<Fact> FactStore::all_facts() const {
  std::shared_lock lock(mu_);
  std::vector<Fact> out;
  for (const auto& id : order_) out.push_back(facts_.at(id));
  return out;
}

std::optional<Fact> FactStore::find(const std::string& fact_id) const {
  std::shared_lock lock(mu_);
  auto it = facts_.find(fact_id);
  if (it == facts_.end()) return std::nullopt;
  return it->second;
}

std::size_t FactStore::active_size() const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(facts_.begin(), facts_.end(), [](const auto& kv) { return kv.second.active(); }));
}

std::vector<json> FactStore::journal() const {
  std::shared_lock lock(mu_);
  return journal_;
}

std::size_t FactStore::journal_size() const {
  std::shared_lock lock(mu_);
  return journal_.size();
}

void FactStore::add_passage(const std::string& message_id, const std::string& excerpt) {
  std::unique_lock lock(mu_);
  passages_[message_id] = excerpt;
}

void FactStore::link(const std::string& pattern_id, const std::vector<std::string>& fact_ids,
                     const std::string& claim_text) {
  std::unique_lock lock(mu_);
  if (fact_ids.empty()) fail(Errc::InvalidArgument, "pattern " + pattern_id + " must cite at least one fact");
  for (const auto& f : fact_ids)
    if (!facts_.count(f)) fail(Errc::UnknownId, f);
  for (const auto& f : fact_ids) {
    pattern_to_facts_[pattern_id].insert(f);
    fact_to_patterns_[f].insert(pattern_id);
  }
  if (!claim_text.empty()) claims_[pattern_id] = claim_text;
}

TraceChain FactStore::trace(const std::string& id) const {
  std::shared_lock lock(mu_);
  TraceChain chain;
  auto add_passages = [&](const Fact& f) {
    for (const auto& mid : f.source_message_ids) {
      if (std::any_of(chain.passages.begin(), chain.passages.end(), [&](auto& p) { return p.first == mid; }))
        continue;
      auto it = passages_.find(mid);
      chain.passages.emplace_back(mid, it == passages_.end() ? std::string() : it->second);
    }
  };

  if (auto pit = pattern_to_facts_.find(id); pit != pattern_to_facts_.end()) {
    chain.pattern_ids = {id};
    if (auto c = claims_.find(id); c != claims_.end()) chain.claim_text = c->second;
    bool any_active = false;
    for (const auto& fid : by_number(pit->second)) {
      const auto& f = facts_.at(fid);
      if (!f.active() && !opts_.trace_tombstones) continue;
      any_active = any_active || f.active();
      chain.fact_ids.push_back(fid);
      add_passages(f);
    }
    chain.tombstoned = !any_active;
    return chain;
  }

  auto fit = facts_.find(id);
  if (fit == facts_.end()) fail(Errc::UnknownId, id);
  const Fact& f = fit->second;
  if (!f.active()) {
    if (!opts_.trace_tombstones) fail(Errc::UnknownId, id + " is deleted");
    chain.tombstoned = true;
  }
  chain.claim_text = f.predicate + " " + f.object;
  chain.fact_ids = {id};
  if (auto pit = fact_to_patterns_.find(id); pit != fact_to_patterns_.end())
    chain.pattern_ids.assign(pit->second.begin(), pit->second.end());
  add_passages(f);
  return chain;
}

json FactStore::snapshot() const {
  std::shared_lock lock(mu_);
  json facts = json::array();
  for (const auto& id : order_) facts.push_back(facts_.at(id).to_json());
  json links = json::object();
  for (const auto& [p, fs] : pattern_to_facts_) links[p] = by_number(fs);
  return {{"vocabulary_version", vocab_.version()},
          {"next_id", next_id_},
          {"facts", facts},
          {"passages", passages_},
          {"links", links},
          {"claims", claims_},
          {"journal_length", journal_.size()}};
}

void FactStore::save(const std::filesystem::path& dir) const {
  std::string lines;
  for (const auto& e : journal()) lines += canonical_json(e) + "\n";
  io::write_file(dir / "journal.jsonl", lines);
  io::write_json(dir / "snapshot.json", snapshot());
}

FactStore FactStore::replay(const std::vector<json>& journal, Vocabulary vocab, FactStoreOptions opts) {
  FactStore store(std::move(vocab), opts);
  for (const auto& entry : journal) {
    auto id = store.apply(AudnOp::from_json(entry.at("op")));
    if (id != entry.value("fact_id", "")) fail(Errc::ChecksumMismatch, "journal replay diverged at seq " + entry.at("seq").dump());
  }
  return store;
}

FactStore FactStore::load(const std::filesystem::path& dir, Vocabulary vocab, FactStoreOptions opts) {
  std::vector<json> journal;
  for (auto& line : text::split_lines(io::read_file(dir / "journal.jsonl")))
    if (!text::trim(line).empty()) journal.push_back(json::parse(line));
  FactStore store = replay(journal, std::move(vocab), opts);
  auto snap = io::read_json(dir / "snapshot.json");
  json replayed = json::array();
  for (const auto& f : store.all_facts()) replayed.push_back(f.to_json());
  if (snap.at("facts") != replayed) fail(Errc::ChecksumMismatch, "snapshot disagrees with journal replay");
  for (auto& [mid, ex] : snap.at("passages").items()) store.passages_[mid] = ex.get<std::string>();
  for (auto& [p, fs] : snap.at("links").items())
    store.link(p, fs.get<std::vector<std::string>>(), snap.at("claims").value(p, ""));
  return store;
}

}  // namespace repacc
