#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace repacc {

// A markdown line whose number is read from the results JSON by pointer.
struct ReportLine {
  std::string label;
  std::string pointer;  // JSON pointer into results, e.g. "/gradient/value"
  int precision = 3;
};

struct ReportSection {
  std::string title;
  std::vector<ReportLine> lines;
};

struct Provenance {
  std::string command;
  std::string config_digest;
  std::map<std::string, std::string> input_digests;

  nlohmann::json to_json() const;
};

// {"provenance": ..., "results": ...}
nlohmann::json results_document(const Provenance& prov, const nlohmann::json& results);

// Throws MissingAsset when a pointer does not resolve.
std::string render_markdown(const std::string& title, const nlohmann::json& document,
                            const std::vector<ReportSection>& sections);

std::string format_number(const nlohmann::json& v, int precision);

void write_report(const std::filesystem::path& dir, const std::string& stem, const nlohmann::json& document,
                  const std::string& markdown);

std::vector<ReportSection> paper_table_sections();
std::vector<ReportSection> run_sections(const nlohmann::json& results);

}  // namespace repacc
