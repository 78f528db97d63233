#include "repacc/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "repacc/error.hpp"

namespace repacc {
namespace {

std::string evp_hex(const EVP_MD* md, std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx) fail(Errc::Io, "EVP_MD_CTX_new failed");
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
    fail(Errc::Io, "digest computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[out[i] >> 4]);
    hex.push_back(kHex[out[i] & 0xF]);
  }
  return hex;
}

}  // namespace

std::string md5_hex(std::string_view data) { return evp_hex(EVP_md5(), data); }
std::string sha256_hex(std::string_view data) { return evp_hex(EVP_sha256(), data); }

std::string digest_hex(DigestAlgo algo, std::string_view data) {
  return algo == DigestAlgo::Md5 ? md5_hex(data) : sha256_hex(data);
}

std::string_view digest_name(DigestAlgo algo) { return algo == DigestAlgo::Md5 ? "md5" : "sha256"; }

DigestAlgo digest_from_name(std::string_view name) {
  if (name == "md5") return DigestAlgo::Md5;
  if (name == "sha256") return DigestAlgo::Sha256;
  fail(Errc::InvalidArgument, "unknown digest algorithm: " + std::string(name));
}

std::string canonical_json(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

}  // namespace repacc
