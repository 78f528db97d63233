#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace repacc::text {

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with_ci(std::string_view haystack, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split_lines(std::string_view s);

// Lowercased whitespace tokens with punctuation (ASCII and common Unicode
// quotes/dashes) removed; empty tokens dropped.
std::vector<std::string> ngram_tokens(std::string_view s);

std::size_t utf8_length(std::string_view s);
std::string utf8_prefix(std::string_view s, std::size_t codepoints);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace repacc::text

namespace repacc::io {

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view data);
void append_line(const std::filesystem::path& p, std::string_view line);
nlohmann::json read_json(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const nlohmann::json& j);
std::filesystem::path data_dir();

}  // namespace repacc::io
