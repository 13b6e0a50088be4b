#include "upss/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <memory>

#include "upss/error.hpp"

namespace upss {

namespace {

constexpr std::string_view kPointerMagic = "BP";

const EVP_MD* md_for(HashAlg alg) {
  switch (alg) {
    case HashAlg::sha3_512: return EVP_sha3_512();
    case HashAlg::sha3_256: return EVP_sha3_256();
  }
  fail(Errc::unsupported, "unsupported hash algorithm");
}

const EVP_CIPHER* cipher_for(CipherAlg alg) {
  switch (alg) {
    case CipherAlg::aes128_ctr: return EVP_aes_128_ctr();
    case CipherAlg::aes256_ctr: return EVP_aes_256_ctr();
  }
  fail(Errc::unsupported, "unsupported cipher algorithm");
}

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

}  // namespace

HashAlg hash_alg_from_tag(std::uint8_t tag) {
  switch (tag) {
    case 0x01: return HashAlg::sha3_512;
    case 0x02: return HashAlg::sha3_256;
  }
  fail(Errc::unsupported, "unknown hash algorithm tag " + std::to_string(tag));
}

CipherAlg cipher_alg_from_tag(std::uint8_t tag) {
  switch (tag) {
    case 0x01: return CipherAlg::aes128_ctr;
    case 0x02: return CipherAlg::aes256_ctr;
  }
  fail(Errc::unsupported, "unknown cipher algorithm tag " + std::to_string(tag));
}

std::size_t digest_size(HashAlg alg) {
  switch (alg) {
    case HashAlg::sha3_512: return 64;
    case HashAlg::sha3_256: return 32;
  }
  fail(Errc::unsupported, "unsupported hash algorithm");
}

std::size_t key_size(CipherAlg alg) {
  switch (alg) {
    case CipherAlg::aes128_ctr: return 16;
    case CipherAlg::aes256_ctr: return 32;
  }
  fail(Errc::unsupported, "unsupported cipher algorithm");
}

std::string_view hash_alg_name(HashAlg alg) {
  switch (alg) {
    case HashAlg::sha3_512: return "sha3-512";
    case HashAlg::sha3_256: return "sha3-256";
  }
  fail(Errc::unsupported, "unsupported hash algorithm");
}

Bytes hash(HashAlg alg, ByteView data) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  Bytes out(digest_size(alg));
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md_for(alg), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
    fail(Errc::io, "digest computation failed");
  return out;
}

void random_bytes(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    fail(Errc::io, "entropy source failure");
}

BlockName::BlockName(HashAlg a, Bytes d) : alg(a), digest(std::move(d)) {
  if (digest.size() != digest_size(alg))
    fail(Errc::invalid_argument, "digest length does not match hash algorithm");
}

std::string BlockName::to_text() const {
  return std::string(hash_alg_name(alg)) + ":" + to_base64(digest);
}

BlockName BlockName::from_text(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) fail(Errc::malformed, "block name lacks algorithm prefix");
  auto prefix = text.substr(0, colon);
  for (auto alg : {HashAlg::sha3_512, HashAlg::sha3_256}) {
    if (prefix == hash_alg_name(alg)) {
      auto digest = from_base64(text.substr(colon + 1));
      if (digest.size() != digest_size(alg)) fail(Errc::malformed, "block name has wrong digest length");
      return BlockName(alg, std::move(digest));
    }
  }
  fail(Errc::unsupported, "unknown hash algorithm '" + std::string(prefix) + "'");
}

Bytes BlockName::encode() const {
  ByteWriter w(1 + digest.size());
  w.u8(static_cast<std::uint8_t>(alg));
  w.raw(digest);
  return std::move(w).take();
}

BlockName BlockName::decode(ByteReader& in) {
  auto alg = hash_alg_from_tag(in.u8());
  auto d = in.raw(digest_size(alg));
  return BlockName(alg, Bytes(d.begin(), d.end()));
}

BlockName BlockName::decode(ByteView data) {
  ByteReader in(data);
  auto name = decode(in);
  if (!in.empty()) fail(Errc::malformed, "trailing bytes after block name");
  return name;
}

BlockKey::BlockKey(CipherAlg a, Bytes k) : alg(a), key(std::move(k)) {
  if (key.size() != key_size(alg))
    fail(Errc::invalid_argument, "key length does not match cipher algorithm");
}

Bytes encode_pointer(const BlockPointer& ptr) {
  ByteWriter w(kPointerHeaderSize + ptr.payload_size());
  w.raw(kPointerMagic);
  w.u8(kPointerFormatVersion);
  w.u8(static_cast<std::uint8_t>(ptr.name.alg));
  w.u8(static_cast<std::uint8_t>(ptr.key.alg));
  w.raw(ptr.name.digest);
  w.raw(ptr.key.key);
  return std::move(w).take();
}

BlockPointer decode_pointer(ByteReader& in) {
  in.expect(kPointerMagic, "block pointer");
  if (in.u8() != kPointerFormatVersion) fail(Errc::unsupported, "unknown block pointer version");
  auto h = hash_alg_from_tag(in.u8());
  auto c = cipher_alg_from_tag(in.u8());
  auto d = in.raw(digest_size(h));
  auto k = in.raw(key_size(c));
  return BlockPointer{BlockName(h, Bytes(d.begin(), d.end())), BlockKey(c, Bytes(k.begin(), k.end()))};
}

BlockPointer decode_pointer(ByteView data) {
  ByteReader in(data);
  auto ptr = decode_pointer(in);
  if (!in.empty()) fail(Errc::malformed, "trailing bytes after block pointer");
  return ptr;
}

std::string pointer_to_hex(const BlockPointer& ptr) { return to_hex(encode_pointer(ptr)); }

BlockPointer pointer_from_hex(std::string_view hex) { return decode_pointer(from_hex(hex)); }

BlockKey derive_key(ByteView plaintext, HashAlg hash_alg, CipherAlg cipher) {
  auto digest = hash(hash_alg, plaintext);
  auto n = key_size(cipher);
  if (n > digest.size()) fail(Errc::unsupported, "hash digest shorter than cipher key");
  digest.resize(n);
  return BlockKey(cipher, std::move(digest));
}

Bytes apply_cipher(const BlockKey& key, ByteView data) {
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  const std::uint8_t iv[16] = {};
  Bytes out(data.size());
  int len = 0;
  int tail = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), cipher_for(key.alg), nullptr, key.key.data(), iv) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, data.data(), static_cast<int>(data.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1)
    fail(Errc::io, "cipher operation failed");
  return out;
}

SealedBlock seal(ByteView content, const SealOptions& options) {
  if (content.size() > options.block_size)
    fail(Errc::invalid_argument, "content of " + std::to_string(content.size()) +
                                     " bytes exceeds block size " + std::to_string(options.block_size));
  Bytes plain(options.block_size, 0);
  std::copy(content.begin(), content.end(), plain.begin());
  if (options.padding == PaddingMode::random)
    random_bytes(std::span(plain).subspan(content.size()));

  auto key = derive_key(plain, options.hash, options.cipher);
  auto block = apply_cipher(key, plain);
  BlockName name(options.hash, hash(options.hash, block));
  return SealedBlock{std::move(block), BlockPointer{std::move(name), std::move(key)}};
}

void verify_block(ByteView block, const BlockName& name) {
  if (hash(name.alg, block) != name.digest)
    fail(Errc::integrity, "block content does not match name " + name.to_text());
}

Bytes open(ByteView block, const BlockPointer& ptr, std::size_t content_len) {
  if (content_len > block.size())
    fail(Errc::invalid_argument, "content length exceeds block size");
  verify_block(block, ptr.name);
  auto plain = apply_cipher(ptr.key, block.first(content_len));
  return plain;
}

std::int64_t expected_guesses(std::uint64_t secret_len, std::uint64_t pad_len) {
  return 8 * static_cast<std::int64_t>(secret_len + pad_len) - 1;
}

}  // namespace upss
