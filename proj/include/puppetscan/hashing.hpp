#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace puppetscan {

/// Uppercase hex SHA-1, the keying used by the Pwned Passwords range files.
std::string sha1_hex(std::string_view data);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// First 8 bytes of SHA-256, big-endian.
std::uint64_t sha256_u64(std::string_view data);

}  // namespace puppetscan
