#pragma once

// Convergent block encryption and cryptographic naming.
//
// A plaintext block B (user content followed by padding up to the store's
// block size) is encrypted under k = h(B) truncated to the cipher key length
// and named by h(E_k(B)). The (name, key) pair is a block pointer: enough to
// fetch, verify and decrypt that one block and nothing else.

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "upss/bytes.hpp"

namespace upss {

enum class HashAlg : std::uint8_t {
  sha3_512 = 0x01,
  sha3_256 = 0x02,
};

enum class CipherAlg : std::uint8_t {
  aes128_ctr = 0x01,
  aes256_ctr = 0x02,
};

/// Throws Errc::unsupported for tags outside the registry.
HashAlg hash_alg_from_tag(std::uint8_t tag);
CipherAlg cipher_alg_from_tag(std::uint8_t tag);

std::size_t digest_size(HashAlg alg);
std::size_t key_size(CipherAlg alg);
std::string_view hash_alg_name(HashAlg alg);

Bytes hash(HashAlg alg, ByteView data);
void random_bytes(std::span<std::uint8_t> out);

struct BlockName {
  HashAlg alg = HashAlg::sha3_512;
  Bytes digest;

  BlockName() = default;
  /// Throws Errc::invalid_argument if the digest length does not match alg.
  BlockName(HashAlg alg, Bytes digest);

  /// `sha3-512:<base64 digest>`
  std::string to_text() const;
  static BlockName from_text(std::string_view text);

  /// Compact form `[hash tag][digest]` used for name-only references, the
  /// journal and the wire protocol.
  Bytes encode() const;
  static BlockName decode(ByteReader& in);
  static BlockName decode(ByteView data);

  std::string to_hex() const { return upss::to_hex(digest); }

  auto operator<=>(const BlockName&) const = default;
};

struct BlockKey {
  CipherAlg alg = CipherAlg::aes128_ctr;
  Bytes key;

  BlockKey() = default;
  BlockKey(CipherAlg alg, Bytes key);

  auto operator<=>(const BlockKey&) const = default;
};

struct BlockPointer {
  BlockName name;
  BlockKey key;

  /// Digest and key bytes only: 80 bytes for SHA3-512 with AES-128.
  std::size_t payload_size() const { return name.digest.size() + key.key.size(); }

  auto operator<=>(const BlockPointer&) const = default;
};

inline constexpr std::size_t kPointerHeaderSize = 5;
inline constexpr std::uint8_t kPointerFormatVersion = 0x01;

/// Layout: "BP" | version | hash tag | cipher tag | digest | key.
Bytes encode_pointer(const BlockPointer& ptr);
/// Decodes a pointer that must span all of `data`.
BlockPointer decode_pointer(ByteView data);
/// Decodes a pointer from the front of a larger buffer.
BlockPointer decode_pointer(ByteReader& in);

std::string pointer_to_hex(const BlockPointer& ptr);
BlockPointer pointer_from_hex(std::string_view hex);

enum class PaddingMode {
  random,         // short blocks are filled with fresh entropy
  deterministic,  // short blocks are zero-filled; equal content converges
};

struct SealOptions {
  std::size_t block_size = 4096;
  PaddingMode padding = PaddingMode::random;
  HashAlg hash = HashAlg::sha3_512;
  CipherAlg cipher = CipherAlg::aes128_ctr;
};

struct SealedBlock {
  Bytes block;  // ciphertext, exactly block_size bytes
  BlockPointer pointer;
};

/// k_B: the leading key-length bytes of hash(plaintext).
BlockKey derive_key(ByteView plaintext, HashAlg hash_alg, CipherAlg cipher);

/// Encrypts or decrypts in place-equivalent fashion; counter mode with a zero
/// initial counter, so the operation is its own inverse.
Bytes apply_cipher(const BlockKey& key, ByteView data);

/// Pads `content` to the block size, encrypts it convergently and names the
/// ciphertext. Throws Errc::invalid_argument when content exceeds the block.
SealedBlock seal(ByteView content, const SealOptions& options = {});

/// Verifies that `block` hashes to `ptr.name`, decrypts it and returns the
/// first `content_len` bytes.
Bytes open(ByteView block, const BlockPointer& ptr, std::size_t content_len);

/// Checks that hash(block) equals `name`; throws Errc::integrity otherwise.
void verify_block(ByteView block, const BlockName& name);

/// log2 of the expected number of guesses needed to recover `secret_len`
/// unknown bytes hidden behind `pad_len` bytes of random padding:
/// log2(1/2 * 2^(8 (s_s + s_p))) = 8 (s_s + s_p) - 1.
std::int64_t expected_guesses(std::uint64_t secret_len, std::uint64_t pad_len);

}  // namespace upss

template <>
struct std::hash<upss::BlockName> {
  std::size_t operator()(const upss::BlockName& n) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < n.digest.size() && i < sizeof(h); ++i)
      h = h << 8 | n.digest[i];
    return h ^ static_cast<std::size_t>(n.alg);
  }
};
