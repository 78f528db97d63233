#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace repacc {

// First line of every pack template; the offline stub keys on these.
inline constexpr std::string_view kTaskExtract = "TASK: extract_facts";
inline constexpr std::string_view kTaskLayer = "TASK: author_layer ";
inline constexpr std::string_view kTaskCompose = "TASK: compose_brief";
inline constexpr std::string_view kTaskBattery = "TASK: generate_questions";

inline constexpr std::string_view kWindowOpen = "=== WINDOW ===\n";
inline constexpr std::string_view kWindowClose = "\n=== END WINDOW ===";

struct PromptPack {
  std::string version;
  std::string domain_guard;
  std::map<std::string, std::string> templates;

  const std::string& get(const std::string& name) const;

  static PromptPack load(const std::filesystem::path& p);
  static PromptPack load_default();
};

// Replaces every {{key}} with its value; unknown placeholders are left as-is.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& vars);

// Fixed response-generation system prompt, identical across conditions.
std::string response_system_prompt(const std::string& subject_name);

}  // namespace repacc
