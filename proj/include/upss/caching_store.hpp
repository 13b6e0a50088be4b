#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "upss/blockstore.hpp"

namespace upss {

struct JournalRecord {
  std::uint64_t sequence = 0;
  BlockName name;
  Bytes payload;
};

/// Append-only on-disk log of blocks awaiting transfer to a far store.
///
/// Record layout, all integers big-endian:
///   [8-byte sequence][1-byte hash tag][digest][4-byte payload length][payload]
/// A sibling `<path>.ckpt` file holds [8-byte offset of first undrained
/// record][8-byte next sequence] and is replaced atomically. Records before
/// the checkpoint have been acknowledged by the far store. A torn record at
/// the tail (crash mid-append) is discarded on open.
class Journal {
 public:
  explicit Journal(std::filesystem::path path, bool sync_each_append = true);
  ~Journal();

  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  std::uint64_t append(const BlockName& name, ByteView payload);
  /// The oldest `max` unacknowledged records, in sequence order.
  std::vector<JournalRecord> peek(std::size_t max) const;
  /// Marks the oldest `count` records as durable in the far store. The file
  /// is truncated once nothing remains outstanding.
  void acknowledge(std::size_t count);
  /// Payload of an outstanding record, if any.
  std::optional<Bytes> find(const BlockName& name) const;

  std::size_t pending() const;
  const std::filesystem::path& path() const { return path_; }

  static std::vector<std::uint8_t> encode_record(std::uint64_t sequence, const BlockName& name,
                                                 ByteView payload);

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint64_t length;
    std::uint64_t sequence;
    BlockName name;
  };

  void recover();
  void write_checkpoint(std::uint64_t offset);

  std::filesystem::path path_;
  std::filesystem::path checkpoint_path_;
  bool sync_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::deque<Entry> pending_;
  std::uint64_t end_offset_ = 0;
  std::uint64_t next_sequence_ = 0;
};

struct CachingOptions {
  std::filesystem::path journal_path;
  std::size_t drain_batch = 64;
  /// Far-store puts issued in parallel within one batch.
  std::size_t drain_concurrency = 1;
  bool background_drain = true;
  bool sync_each_append = true;
  std::chrono::milliseconds retry_delay{50};
};

/// Write-back cache over a near and a far store.
///
/// put writes the near store and appends to the journal, then returns; a
/// single background agent drains the journal into the far store. get is
/// served from near, falling back to far (and repopulating near). Reopening
/// the same journal after a crash replays outstanding records into the near
/// store and resumes draining.
class CachingStore final : public BlockStore {
 public:
  CachingStore(StorePtr near, StorePtr far, CachingOptions options);
  ~CachingStore() override;

  std::size_t block_size() const override { return near_->block_size(); }
  bool is_persistent() const override { return far_->is_persistent(); }
  HashAlg hash_alg() const override { return near_->hash_alg(); }
  bool contains(const BlockName& name) override;

  /// Moves up to `batch` journal records to the far store in sequence order
  /// and returns how many were acknowledged. A far-store failure stops the
  /// batch early; unacknowledged records stay journaled.
  std::size_t drain(std::size_t batch);
  /// Blocks until the journal is empty or the timeout expires.
  bool flush(std::chrono::milliseconds timeout = std::chrono::minutes(10));
  std::size_t pending() const { return journal_.pending(); }

  const StorePtr& near_store() const { return near_; }
  const StorePtr& far_store() const { return far_; }

 protected:
  void do_put(const BlockName& name, ByteView block) override;
  Bytes do_get(const BlockName& name) override;

 private:
  void drain_loop();

  StorePtr near_;
  StorePtr far_;
  CachingOptions options_;
  Journal journal_;
  std::mutex drain_mu_;

  std::mutex wake_mu_;
  std::condition_variable wake_;
  std::condition_variable drained_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace upss
