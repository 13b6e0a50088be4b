#pragma once

// Command-line front end. `dispatch` is the whole CLI minus process setup so
// tests can drive it in-process.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "upss/blockstore.hpp"
#include "upss/error.hpp"

namespace upss::cli {

struct CliConfig {
  std::filesystem::path vault = "upss.vault";
  /// memory | file:PATH | net:HOST:PORT | cache(NEAR,FAR,JOURNAL)
  /// | mirror[A,B,...] | latency(STORE,MICROS)
  std::string store = "file:upss-store";
  std::string passphrase_env = "UPSS_PASSPHRASE";
  /// Takes precedence over the environment; set by tests.
  std::optional<std::string> passphrase;
  PaddingMode padding = PaddingMode::random;
  std::size_t block_size = kDefaultBlockSize;
  std::uint32_t vault_iterations = 600'000;
};

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
CliConfig parse_config(std::string_view text, CliConfig base = {});
CliConfig load_config(const std::filesystem::path& path, CliConfig base = {});

StorePtr make_store(std::string_view topology, std::size_t block_size = kDefaultBlockSize);

/// 0 ok, 1 usage, 2 not found, 3 authentication, 4 store or I/O.
int exit_code(Errc code);

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

/// `args` excludes the program name. A non-null `store` replaces the
/// configured topology.
Outcome dispatch(const std::vector<std::string>& args, const CliConfig& config = {},
                 StorePtr store = nullptr);

}  // namespace upss::cli
