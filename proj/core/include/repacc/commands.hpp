#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repacc/error.hpp"
#include "repacc/fixtures.hpp"
#include "repacc/runner.hpp"
#include "repacc/workspace.hpp"

namespace repacc {

enum ExitCode : int { kExitOk = 0, kExitPrecondition = 2, kExitProviderExhaustion = 3, kExitChecksumMismatch = 4 };

int exit_code_for(Errc code);

struct CommandContext {
  Workspace workspace;
  RunConfig config;
  std::filesystem::path config_dir;  // provider and manifest paths resolve here
  std::ostream* log = nullptr;

  SubjectManifest manifest() const;
  std::unique_ptr<ModelProvider> provider(const std::string& role) const;
  std::vector<std::unique_ptr<ModelProvider>> judges() const;
};

CommandContext load_context(const std::filesystem::path& workspace, const std::filesystem::path& config_path);

struct ReportFormats {
  bool json = true;
  bool markdown = true;
};

// import -> split -> extract -> embed -> author -> compose.
nlohmann::json cmd_pipeline(const CommandContext& ctx, const std::string& subject_id);

nlohmann::json cmd_battery(const CommandContext& ctx, const std::string& subject_id);

struct RunRequest {
  std::vector<std::string> subjects;    // empty = manifest order
  std::vector<std::string> conditions;  // empty = config
  bool resume = true;
  std::optional<std::size_t> cell_limit;
};

RunLedger cmd_run(const CommandContext& ctx, const RunRequest& req);

nlohmann::json cmd_judge(const CommandContext& ctx, const RunRequest& req);

nlohmann::json cmd_stats(const CommandContext& ctx, const ReportFormats& formats = {});

// Headline analysis of a shipped per-subject table; writes <stem>.json / .md into out_dir.
nlohmann::json cmd_stats_fixture(const std::filesystem::path& fixture, const std::filesystem::path& out_dir,
                                 const HeadlineOptions& opts, const ReportFormats& formats = {});

nlohmann::json cmd_calibrate(const CommandContext& ctx);

// Resolves a fixture name ("paper-table-d1") or a path.
std::filesystem::path resolve_fixture(const std::string& name_or_path);

}  // namespace repacc
