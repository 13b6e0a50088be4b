#pragma once

// Passphrase-protected root pointer file.
//
// Layout (integers big-endian):
//   "UPSV" | 0x01 | kdf 0x01 | iterations u32 | dklen u8 (32) | salt[16] |
//   nonce[12] | ct_len u32 | ciphertext | tag[16]
// The key is PBKDF2-HMAC-SHA256(passphrase, salt); the payload (an encoded
// block pointer) is sealed with AES-256-GCM, authenticating every header
// byte up to and including ct_len.

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>

#include "upss/crypto.hpp"

namespace upss {

inline constexpr std::uint32_t kDefaultVaultIterations = 600'000;

struct VaultParams {
  std::uint32_t iterations = kDefaultVaultIterations;
  /// Fixed salt and nonce for golden tests; random when absent.
  std::optional<std::array<std::uint8_t, 16>> salt;
  std::optional<std::array<std::uint8_t, 12>> nonce;
};

Bytes encode_vault(std::string_view passphrase, const BlockPointer& root,
                   const VaultParams& params = {});
/// Throws Errc::auth for a wrong passphrase or tampered file and
/// Errc::malformed for a truncated or unrecognized one.
BlockPointer decode_vault(ByteView file, std::string_view passphrase);

/// Writes via a temporary file and rename.
void save_root(const std::filesystem::path& path, std::string_view passphrase,
               const BlockPointer& root, const VaultParams& params = {});
/// Throws Errc::not_found when the file does not exist.
BlockPointer load_root(const std::filesystem::path& path, std::string_view passphrase);

}  // namespace upss
