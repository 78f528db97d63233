#include "repacc/workspace.hpp"

#include <thread>

#include "repacc/digest.hpp"
#include "repacc/error.hpp"
#include "repacc/http_provider.hpp"
#include "repacc/stub_provider.hpp"
#include "repacc/text.hpp"

namespace repacc {

using nlohmann::json;

const SubjectEntry& SubjectManifest::find(const std::string& id) const {
  for (const auto& s : subjects)
    if (s.id == id) return s;
  fail(Errc::UnknownId, "subject " + id + " is not in the manifest");
}

std::vector<std::string> SubjectManifest::ids() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) out.push_back(s.id);
  return out;
}

SubjectManifest SubjectManifest::load(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  const auto base = p.parent_path();
  SubjectManifest m;
  for (const auto& s : j.at("subjects")) {
    SubjectEntry e;
    e.id = s.at("id");
    e.name = s.value("name", e.id);
    e.aliases = s.value("aliases", std::vector<std::string>{});
    e.title = s.value("title", "");
    e.source_ref = s.value("source_ref", "");
    if (s.contains("corpus")) e.corpus = base / s["corpus"].get<std::string>();
    e.split_ratio = s.value("split_ratio", 0.5);
    e.single_chapter_fallback = s.value("single_chapter_fallback", false);
    const json retrieval = s.value("retrieval", json::object());
    for (const auto& [sys, path] : retrieval.items()) e.retrieval[sys] = base / path.get<std::string>();
    m.subjects.push_back(std::move(e));
  }
  return m;
}

std::unique_ptr<ModelProvider> make_provider(const json& spec, const std::filesystem::path& base) {
  json table = spec;
  if (spec.is_string()) table = io::read_json(base / spec.get<std::string>());
  if (!table.is_object()) fail(Errc::Parse, "provider spec must be a path or an object");
  if (table.contains("http")) return std::make_unique<HttpChatProvider>(HttpProviderConfig::from_json(table["http"]));
  return std::make_unique<StubProvider>(table);
}

json RunConfig::to_json() const {
  return {{"run_id", run_id},
          {"subjects", subjects},
          {"providers", providers},
          {"panel", panel.to_json()},
          {"conditions", conditions},
          {"seeds", {{"derangement", seed_derangement}, {"bootstrap", seed_bootstrap}, {"permutation", seed_permutation}}},
          {"battery",
           {{"batches", battery.batches},
            {"per_batch", battery.per_batch},
            {"window_chars", battery.window_chars},
            {"leak_n", battery.leak_n},
            {"override_leaks", battery.override_leaks}}},
          {"context_budget", context_budget},
          {"retry", {{"max_attempts", max_attempts}, {"backoff_ms", backoff_ms}}},
          {"workers", workers},
          {"calibration", {{"repetitions", calibration_repetitions}, {"thresholds", calibration.to_json()}}},
          {"tolerances", tolerances}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.run_id = j.at("run_id");
  c.subjects = j.value("subjects", "subjects.json");
  c.providers = j.value("providers", json::object());
  if (j.contains("panel")) c.panel = PanelDef::from_json(j["panel"]);
  c.conditions = j.value("conditions", std::vector<std::string>{"C5", "C2a", "C4", "C4a"});
  const auto seeds = j.value("seeds", json::object());
  c.seed_derangement = seeds.value("derangement", std::uint64_t{0});
  c.seed_bootstrap = seeds.value("bootstrap", std::uint64_t{0});
  c.seed_permutation = seeds.value("permutation", std::uint64_t{0});
  const auto b = j.value("battery", json::object());
  c.battery.batches = b.value("batches", c.battery.batches);
  c.battery.per_batch = b.value("per_batch", c.battery.per_batch);
  c.battery.window_chars = b.value("window_chars", c.battery.window_chars);
  c.battery.leak_n = b.value("leak_n", c.battery.leak_n);
  c.battery.override_leaks = b.value("override_leaks", false);
  c.context_budget = j.value("context_budget", c.context_budget);
  const auto r = j.value("retry", json::object());
  c.max_attempts = r.value("max_attempts", c.max_attempts);
  c.backoff_ms = r.value("backoff_ms", c.backoff_ms);
  c.workers = j.value("workers", c.workers);
  const auto cal = j.value("calibration", json::object());
  c.calibration_repetitions = cal.value("repetitions", c.calibration_repetitions);
  if (cal.contains("thresholds")) c.calibration = CalibrationThresholds::from_json(cal["thresholds"]);
  c.tolerances = j.value("tolerances", json::object());
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& p) { return from_json(io::read_json(p)); }

std::string RunConfig::digest() const { return sha256_hex(canonical_json(to_json())); }

RetryPolicy RunConfig::retry_policy() const {
  RetryPolicy p;
  p.max_attempts = max_attempts;
  p.base = std::chrono::milliseconds(backoff_ms);
  p.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  return p;
}

void Workspace::lock_config(const RunConfig& cfg) const {
  const auto lock = run_dir(cfg.run_id) / "config.lock.json";
  if (std::filesystem::exists(lock)) {
    const auto locked = io::read_json(lock);
    if (locked.at("digest") != cfg.digest())
      fail(Errc::InvalidArgument, "config differs from " + lock.string() + "; declare a new run_id");
    return;
  }
  io::write_json(lock, {{"digest", cfg.digest()}, {"config", cfg.to_json()}});
}

}  // namespace repacc
