#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "upss/crypto.hpp"

namespace upss {

inline constexpr std::size_t kDefaultBlockSize = 4096;

/// Throws Errc::invalid_argument unless `size` is a positive multiple of 512.
void validate_block_size(std::size_t size);

/// The storage contract shared by every backend: fixed-size encrypted blocks
/// addressed by the hash of their bytes.
///
/// `put` and `get` are non-virtual. They enforce the size rule and the
/// integrity rule (every block handed back hashes to the requested name), so
/// a backend that serves the wrong bytes is always detected, whatever it is.
/// All implementations admit concurrent calls.
class BlockStore {
 public:
  virtual ~BlockStore() = default;

  BlockName put(ByteView block);
  Bytes get(const BlockName& name);

  virtual std::size_t block_size() const = 0;
  virtual bool is_persistent() const = 0;
  virtual HashAlg hash_alg() const { return HashAlg::sha3_512; }

  virtual bool contains(const BlockName& name);
  /// Number of distinct blocks held, when the backend can count them.
  virtual std::optional<std::uint64_t> block_count() const { return std::nullopt; }

 protected:
  /// `name` is already computed with hash_alg(); must be idempotent.
  virtual void do_put(const BlockName& name, ByteView block) = 0;
  /// Throws Errc::not_found when absent.
  virtual Bytes do_get(const BlockName& name) = 0;
};

using StorePtr = std::shared_ptr<BlockStore>;

/// Non-persistent store backed by a hash map.
class MemoryStore final : public BlockStore {
 public:
  explicit MemoryStore(std::size_t block_size = kDefaultBlockSize);

  std::size_t block_size() const override { return block_size_; }
  bool is_persistent() const override { return false; }
  bool contains(const BlockName& name) override;
  std::optional<std::uint64_t> block_count() const override;

  void clear();
  std::vector<BlockName> names() const;
  /// Test hook: replaces the stored bytes for `name` without renaming them.
  void overwrite_unchecked(const BlockName& name, Bytes bytes);
  bool erase(const BlockName& name);

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  std::size_t block_size_;
  mutable std::shared_mutex mu_;
  std::unordered_map<BlockName, Bytes> blocks_;
};

/// One file per block under `<root>/<xx>/<yy>/<hex digest>`, where xx and yy
/// are the first two digest bytes. Writes land via temp file and rename.
class FileStore final : public BlockStore {
 public:
  /// Creates `root` if needed. The block size is recorded in
  /// `<root>/block_size` on first use and must match on every reopen.
  explicit FileStore(std::filesystem::path root, std::size_t block_size = kDefaultBlockSize);

  std::size_t block_size() const override { return block_size_; }
  bool is_persistent() const override { return true; }
  bool contains(const BlockName& name) override;
  std::optional<std::uint64_t> block_count() const override;

  std::filesystem::path path_for(const BlockName& name) const;
  const std::filesystem::path& root() const { return root_; }

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  std::filesystem::path root_;
  std::size_t block_size_;
};

/// Adds a fixed delay to every operation of the wrapped store; used to model
/// slow far stores in benchmarks and tests.
class LatencyStore final : public BlockStore {
 public:
  LatencyStore(StorePtr inner, std::chrono::microseconds delay);

  std::size_t block_size() const override { return inner_->block_size(); }
  bool is_persistent() const override { return inner_->is_persistent(); }
  HashAlg hash_alg() const override { return inner_->hash_alg(); }
  std::optional<std::uint64_t> block_count() const override { return inner_->block_count(); }

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  StorePtr inner_;
  std::chrono::microseconds delay_;
};

}  // namespace upss
