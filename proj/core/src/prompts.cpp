#include "repacc/prompts.hpp"

#include "repacc/error.hpp"
#include "repacc/text.hpp"

namespace repacc {

const std::string& PromptPack::get(const std::string& name) const {
  auto it = templates.find(name);
  if (it == templates.end()) fail(Errc::MissingAsset, "prompt pack has no template " + name);
  return it->second;
}

PromptPack PromptPack::load(const std::filesystem::path& p) {
  auto j = io::read_json(p);
  PromptPack pack;
  pack.version = j.at("version");
  pack.domain_guard = j.at("domain_guard");
  for (auto& [k, v] : j.at("templates").items()) {
    if (v.is_array()) {
      std::string joined;
      for (auto& line : v) joined += line.get<std::string>() + "\n";
      if (!joined.empty()) joined.pop_back();
      pack.templates[k] = joined;
    } else {
      pack.templates[k] = v.get<std::string>();
    }
  }
  return pack;
}

PromptPack PromptPack::load_default() { return load(io::data_dir() / "prompt_pack.json"); }

std::string render(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 2, "{{") == 0) {
      auto end = tmpl.find("}}", i + 2);
      if (end != std::string::npos) {
        auto it = vars.find(tmpl.substr(i + 2, end - i - 2));
        if (it != vars.end()) {
          out += it->second;
          i = end + 2;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string response_system_prompt(const std::string& subject_name) {
  return "You are predicting how " + subject_name +
         " would respond to a specific question about their behavior, values, or reasoning. Answer in " +
         subject_name + "'s voice, grounded in their demonstrated patterns.";
}

}  // namespace repacc
