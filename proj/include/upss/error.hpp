#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace upss {

enum class Errc {
  invalid_argument,
  already_exists,
  out_of_range,
  unsupported,
  not_found,
  integrity,  // hash of fetched bytes does not match the requested name
  malformed,  // structurally invalid encoding
  redacted,   // data is referenced by name only and cannot be decrypted
  auth,       // passphrase or authentication tag rejected
  io,
  transport,  // connection-level failure; retryable
  conflict,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure in the library is reported as an `Error` carrying an `Errc`.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace upss
