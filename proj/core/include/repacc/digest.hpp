#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace repacc {

enum class DigestAlgo { Md5, Sha256 };

std::string md5_hex(std::string_view data);
std::string sha256_hex(std::string_view data);
std::string digest_hex(DigestAlgo algo, std::string_view data);
std::string_view digest_name(DigestAlgo algo);
DigestAlgo digest_from_name(std::string_view name);

// Sorted keys, no insignificant whitespace, UTF-8.
std::string canonical_json(const nlohmann::json& j);

}  // namespace repacc
