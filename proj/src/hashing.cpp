#include "puppetscan/hashing.hpp"

#include <array>

#include <openssl/sha.h>

namespace puppetscan {
namespace {

template <std::size_t N>
std::string to_hex(const std::array<unsigned char, N>& bytes, bool upper) {
  const char* digits = upper ? "0123456789ABCDEF" : "0123456789abcdef";
  std::string out;
  out.reserve(2 * N);
  for (unsigned char b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

std::array<unsigned char, SHA256_DIGEST_LENGTH> sha256_raw(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md.data());
  return md;
}

}  // namespace

std::string sha1_hex(std::string_view data) {
  std::array<unsigned char, SHA_DIGEST_LENGTH> md{};
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md.data());
  return to_hex(md, true);
}

std::string sha256_hex(std::string_view data) { return to_hex(sha256_raw(data), false); }

std::uint64_t sha256_u64(std::string_view data) {
  const auto md = sha256_raw(data);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | md[i];
  return v;
}

}  // namespace puppetscan
