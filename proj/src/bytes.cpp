#include "upss/bytes.hpp"

#include <openssl/evp.h>

#include "upss/error.hpp"

namespace upss {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::already_exists: return "already exists";
    case Errc::out_of_range: return "out of range";
    case Errc::unsupported: return "unsupported";
    case Errc::not_found: return "not found";
    case Errc::integrity: return "integrity violation";
    case Errc::malformed: return "malformed data";
    case Errc::redacted: return "redacted";
    case Errc::auth: return "authentication failed";
    case Errc::io: return "i/o error";
    case Errc::transport: return "transport error";
    case Errc::conflict: return "conflict";
  }
  return "unknown";
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) fail(Errc::malformed, "hex string has odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) fail(Errc::malformed, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string to_base64(ByteView data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes from_base64(std::string_view text) {
  if (text.size() % 4 != 0) fail(Errc::malformed, "base64 length not a multiple of 4");
  Bytes out(text.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) fail(Errc::malformed, "invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

void ByteWriter::u16be(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v >> 8));
  u8(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32be(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64be(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::varint(std::uint64_t v) {
  while (v >= 0x80) {
    u8(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  u8(static_cast<std::uint8_t>(v));
}

std::size_t varint_size(std::uint64_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

std::uint8_t ByteReader::u8() {
  if (pos_ >= data_.size()) fail(Errc::malformed, "unexpected end of data");
  return data_[pos_++];
}

std::uint16_t ByteReader::u16be() {
  std::uint16_t v = u8();
  return static_cast<std::uint16_t>(v << 8 | u8());
}

std::uint32_t ByteReader::u32be() {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = v << 8 | u8();
  return v;
}

std::uint64_t ByteReader::u64be() {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | u8();
  return v;
}

std::uint64_t ByteReader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    std::uint8_t b = u8();
    if (shift == 63 && b > 1) fail(Errc::malformed, "varint overflow");
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) {
      // Reject non-minimal encodings so every value has exactly one form.
      if (b == 0 && shift != 0) fail(Errc::malformed, "non-canonical varint");
      return v;
    }
  }
  fail(Errc::malformed, "varint too long");
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) fail(Errc::malformed, "unexpected end of data");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect(std::string_view magic, std::string_view what) {
  auto got = raw(magic.size());
  if (!std::equal(got.begin(), got.end(), as_bytes(magic).begin()))
    fail(Errc::malformed, "bad magic in " + std::string(what));
}

}  // namespace upss
