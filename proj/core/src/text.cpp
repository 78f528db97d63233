#include "repacc/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "repacc/error.hpp"

namespace repacc::text {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// UTF-8 punctuation removed from n-gram tokens.
constexpr std::array<std::string_view, 10> kUnicodePunct = {
    "\xE2\x80\x98", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x93",
    "\xE2\x80\x94", "\xE2\x80\xA6", "\xC2\xAB",     "\xC2\xBB",     "\xC2\xA0"};

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with_ci(std::string_view haystack, std::string_view prefix) {
  if (prefix.size() > haystack.size()) return false;
  return ascii_lower(haystack.substr(0, prefix.size())) == ascii_lower(prefix);
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  return ascii_lower(haystack).find(ascii_lower(needle)) != std::string::npos;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    bool sp = is_space(static_cast<unsigned char>(c));
    if (!sp && !in_word) ++n;
    in_word = !sp;
  }
  return n;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> ngram_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& raw : split_whitespace(s)) {
    std::string tok;
    tok.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      bool skipped = false;
      for (auto p : kUnicodePunct) {
        if (std::string_view(raw).substr(i, p.size()) == p) {
          i += p.size();
          skipped = true;
          break;
        }
      }
      if (skipped) continue;
      auto c = static_cast<unsigned char>(raw[i]);
      if (c < 0x80 && std::ispunct(c)) {
        ++i;
        continue;
      }
      tok.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
      ++i;
    }
    if (!tok.empty()) out.push_back(std::move(tok));
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string utf8_prefix(std::string_view s, std::size_t codepoints) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == codepoints) return std::string(s.substr(0, i));
      ++seen;
    }
  }
  return std::string(s);
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace repacc::text

namespace repacc::io {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot write " + p.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(Errc::Io, "short write " + p.string());
  }
  std::filesystem::rename(tmp, p);
}

void append_line(const std::filesystem::path& p, std::string_view line) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) fail(Errc::Io, "cannot append " + p.string());
  out << line << '\n';
}

nlohmann::json read_json(const std::filesystem::path& p) {
  auto raw = read_file(p);
  try {
    return nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Parse, p.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_file(p, j.dump(2) + "\n"); }

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("REPACC_DATA_DIR"); env && *env) return env;
#ifdef REPACC_DEFAULT_DATA_DIR
  return REPACC_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace repacc::io
