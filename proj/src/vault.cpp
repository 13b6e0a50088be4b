#include "upss/vault.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>

#include "upss/error.hpp"

namespace upss {

namespace {

constexpr std::string_view kMagic = "UPSV";
constexpr std::uint8_t kFormat = 0x01;
constexpr std::uint8_t kKdfPbkdf2Sha256 = 0x01;
constexpr std::uint8_t kKeyLen = 32;
constexpr std::size_t kSaltLen = 16, kNonceLen = 12, kTagLen = 16;
constexpr std::uint32_t kMaxIterations = 100'000'000;
constexpr std::uint32_t kMaxPayload = 4096;

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

Bytes derive(std::string_view passphrase, ByteView salt, std::uint32_t iterations) {
  Bytes key(kKeyLen);
  if (PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt.data(),
                        static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                        kKeyLen, key.data()) != 1)
    fail(Errc::io, "PBKDF2 failed");
  return key;
}

CipherCtx gcm_context(ByteView key, ByteView nonce, bool encrypt) {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx ||
      EVP_CipherInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr, encrypt) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()),
                          nullptr) != 1 ||
      EVP_CipherInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data(), encrypt) != 1)
    fail(Errc::io, "AES-GCM initialization failed");
  return ctx;
}

}  // namespace

Bytes encode_vault(std::string_view passphrase, const BlockPointer& root,
                   const VaultParams& params) {
  if (params.iterations == 0 || params.iterations > kMaxIterations)
    fail(Errc::invalid_argument, "vault iteration count out of range");
  std::array<std::uint8_t, kSaltLen> salt{};
  std::array<std::uint8_t, kNonceLen> nonce{};
  if (params.salt) salt = *params.salt; else random_bytes(salt);
  if (params.nonce) nonce = *params.nonce; else random_bytes(nonce);

  auto payload = encode_pointer(root);
  ByteWriter w;
  w.raw(kMagic);
  w.u8(kFormat);
  w.u8(kKdfPbkdf2Sha256);
  w.u32be(params.iterations);
  w.u8(kKeyLen);
  w.raw(salt);
  w.raw(nonce);
  w.u32be(static_cast<std::uint32_t>(payload.size()));
  Bytes out = std::move(w).take();

  auto key = derive(passphrase, salt, params.iterations);
  auto ctx = gcm_context(key, nonce, true);
  int len = 0;
  Bytes ct(payload.size()), tag(kTagLen);
  if (EVP_EncryptUpdate(ctx.get(), nullptr, &len, out.data(), static_cast<int>(out.size())) != 1 ||
      EVP_EncryptUpdate(ctx.get(), ct.data(), &len, payload.data(),
                        static_cast<int>(payload.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), ct.data() + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen, tag.data()) != 1)
    fail(Errc::io, "AES-GCM encryption failed");
  out.insert(out.end(), ct.begin(), ct.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

BlockPointer decode_vault(ByteView file, std::string_view passphrase) {
  ByteReader r(file);
  r.expect(kMagic, "vault file");
  if (r.u8() != kFormat) fail(Errc::unsupported, "unknown vault format version");
  if (r.u8() != kKdfPbkdf2Sha256) fail(Errc::unsupported, "unknown vault key derivation");
  auto iterations = r.u32be();
  if (iterations == 0 || iterations > kMaxIterations)
    fail(Errc::malformed, "vault iteration count out of range");
  if (r.u8() != kKeyLen) fail(Errc::malformed, "unexpected vault key length");
  auto salt = r.raw(kSaltLen);
  auto nonce = r.raw(kNonceLen);
  auto ct_len = r.u32be();
  if (ct_len > kMaxPayload) fail(Errc::malformed, "vault payload too large");
  auto aad = file.first(r.position());
  auto ct = r.raw(ct_len);
  auto tag = r.raw(kTagLen);
  if (!r.empty()) fail(Errc::malformed, "trailing bytes in vault file");

  auto key = derive(passphrase, salt, iterations);
  auto ctx = gcm_context(key, nonce, false);
  int len = 0;
  Bytes pt(ct.size());
  Bytes tag_copy(tag.begin(), tag.end());
  if (EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
      EVP_DecryptUpdate(ctx.get(), pt.data(), &len, ct.data(), static_cast<int>(ct.size())) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag_copy.data()) != 1)
    fail(Errc::io, "AES-GCM decryption failed");
  if (EVP_DecryptFinal_ex(ctx.get(), pt.data() + len, &len) != 1)
    fail(Errc::auth, "wrong passphrase or tampered vault file");
  try {
    return decode_pointer(pt);
  } catch (const Error& e) {
    fail(Errc::malformed, std::string("vault payload: ") + e.what());
  }
}

void save_root(const std::filesystem::path& path, std::string_view passphrase,
               const BlockPointer& root, const VaultParams& params) {
  auto bytes = encode_vault(passphrase, root, params);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(Errc::io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::io, "cannot replace " + path.string() + ": " + ec.message());
}

BlockPointer load_root(const std::filesystem::path& path, std::string_view passphrase) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) fail(Errc::not_found, "no vault at " + path.string());
    fail(Errc::io, "cannot read " + path.string());
  }
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_vault(bytes, passphrase);
}

}  // namespace upss
