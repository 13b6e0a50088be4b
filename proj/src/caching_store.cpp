#include "upss/caching_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <fstream>

#include "upss/error.hpp"

namespace upss {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRecordFixedSize = 8 + 1 + 4;

bool pread_all(int fd, std::uint8_t* out, std::size_t len, std::uint64_t offset) {
  std::size_t done = 0;
  while (done < len) {
    auto n = ::pread(fd, out + done, len - done, static_cast<off_t>(offset + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    done += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

Journal::Journal(fs::path path, bool sync_each_append)
    : path_(std::move(path)), sync_(sync_each_append) {
  checkpoint_path_ = path_;
  checkpoint_path_ += ".ckpt";
  if (path_.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path_.parent_path(), ec);
  }
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) fail(Errc::io, "cannot open journal " + path_.string());
  recover();
}

Journal::~Journal() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::uint8_t> Journal::encode_record(std::uint64_t sequence, const BlockName& name,
                                                 ByteView payload) {
  ByteWriter w(kRecordFixedSize + name.digest.size() + payload.size());
  w.u64be(sequence);
  w.raw(name.encode());
  w.u32be(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return std::move(w).take();
}

void Journal::recover() {
  std::uint64_t offset = 0;
  if (std::ifstream ck(checkpoint_path_, std::ios::binary); ck) {
    Bytes raw((std::istreambuf_iterator<char>(ck)), std::istreambuf_iterator<char>());
    if (raw.size() == 16) {
      ByteReader r(raw);
      offset = r.u64be();
      next_sequence_ = r.u64be();
    }
  }

  struct stat st {};
  if (::fstat(fd_, &st) != 0) fail(Errc::io, "cannot stat journal " + path_.string());
  auto size = static_cast<std::uint64_t>(st.st_size);
  if (offset > size) offset = size;

  // Scan forward from the checkpoint; stop at the first record that is torn
  // or fails its integrity check and cut the file there.
  std::uint64_t pos = offset;
  while (pos < size) {
    std::uint8_t head[9];
    if (size - pos < kRecordFixedSize || !pread_all(fd_, head, 9, pos)) break;
    ByteReader hr({head, 9});
    auto seq = hr.u64be();
    auto tag = hr.u8();
    HashAlg alg;
    try {
      alg = hash_alg_from_tag(tag);
    } catch (const Error&) {
      break;
    }
    auto dlen = digest_size(alg);
    if (size - pos < kRecordFixedSize + dlen) break;
    Bytes rest(dlen + 4);
    if (!pread_all(fd_, rest.data(), rest.size(), pos + 9)) break;
    ByteReader rr(rest);
    auto digest = rr.raw(dlen);
    auto plen = rr.u32be();
    auto total = kRecordFixedSize + dlen + plen;
    if (size - pos < total) break;
    Bytes payload(plen);
    if (!pread_all(fd_, payload.data(), plen, pos + 13 + dlen)) break;
    Bytes payload_digest(digest.begin(), digest.end());
    if (hash(alg, payload) != payload_digest) break;
    pending_.push_back(Entry{pos, total, seq, BlockName(alg, std::move(payload_digest))});
    next_sequence_ = std::max(next_sequence_, seq + 1);
    pos += total;
  }
  if (pos < size && ::ftruncate(fd_, static_cast<off_t>(pos)) != 0)
    fail(Errc::io, "cannot truncate torn journal tail");
  end_offset_ = pos;
  if (pending_.empty() && end_offset_ > 0) {
    if (::ftruncate(fd_, 0) != 0) fail(Errc::io, "cannot truncate journal");
    end_offset_ = 0;
    write_checkpoint(0);
  }
}

void Journal::write_checkpoint(std::uint64_t offset) {
  ByteWriter w(16);
  w.u64be(offset);
  w.u64be(next_sequence_);
  auto tmp = checkpoint_path_;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail(Errc::io, "cannot write journal checkpoint");
  bool ok = ::write(fd, w.bytes().data(), w.size()) == static_cast<ssize_t>(w.size());
  if (ok && sync_) ok = ::fdatasync(fd) == 0;
  ::close(fd);
  if (!ok || ::rename(tmp.c_str(), checkpoint_path_.c_str()) != 0)
    fail(Errc::io, "cannot write journal checkpoint");
}

std::uint64_t Journal::append(const BlockName& name, ByteView payload) {
  std::lock_guard lock(mu_);
  auto seq = next_sequence_++;
  auto record = encode_record(seq, name, payload);
  std::size_t done = 0;
  while (done < record.size()) {
    auto n = ::pwrite(fd_, record.data() + done, record.size() - done,
                      static_cast<off_t>(end_offset_ + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      [[maybe_unused]] auto rc = ::ftruncate(fd_, static_cast<off_t>(end_offset_));
      fail(Errc::io, "journal append failed");
    }
    done += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) {
    [[maybe_unused]] auto rc = ::ftruncate(fd_, static_cast<off_t>(end_offset_));
    fail(Errc::io, "journal sync failed");
  }
  pending_.push_back(Entry{end_offset_, record.size(), seq, name});
  end_offset_ += record.size();
  return seq;
}

std::vector<JournalRecord> Journal::peek(std::size_t max) const {
  std::vector<Entry> entries;
  {
    std::lock_guard lock(mu_);
    auto n = std::min(max, pending_.size());
    entries.assign(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::vector<JournalRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Bytes raw(e.length);
    if (!pread_all(fd_, raw.data(), raw.size(), e.offset)) fail(Errc::io, "journal read failed");
    ByteReader r(raw);
    JournalRecord rec;
    rec.sequence = r.u64be();
    rec.name = BlockName::decode(r);
    auto len = r.u32be();
    auto payload = r.raw(len);
    rec.payload.assign(payload.begin(), payload.end());
    out.push_back(std::move(rec));
  }
  return out;
}

void Journal::acknowledge(std::size_t count) {
  std::lock_guard lock(mu_);
  count = std::min(count, pending_.size());
  if (count == 0) return;
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(count));
  if (!pending_.empty()) {
    write_checkpoint(pending_.front().offset);
    return;
  }
  write_checkpoint(end_offset_);
  if (::ftruncate(fd_, 0) != 0) fail(Errc::io, "cannot truncate journal");
  end_offset_ = 0;
  write_checkpoint(0);
}

std::optional<Bytes> Journal::find(const BlockName& name) const {
  std::optional<Entry> hit;
  {
    std::lock_guard lock(mu_);
    for (const auto& e : pending_)
      if (e.name == name) {
        hit = e;
        break;
      }
  }
  if (!hit) return std::nullopt;
  Bytes raw(hit->length);
  if (!pread_all(fd_, raw.data(), raw.size(), hit->offset)) fail(Errc::io, "journal read failed");
  ByteReader r(raw);
  r.u64be();
  BlockName::decode(r);
  auto payload = r.raw(r.u32be());
  return Bytes(payload.begin(), payload.end());
}

std::size_t Journal::pending() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

// ---------------------------------------------------------------------------

CachingStore::CachingStore(StorePtr near, StorePtr far, CachingOptions options)
    : near_(std::move(near)),
      far_(std::move(far)),
      options_(std::move(options)),
      journal_(options_.journal_path, options_.sync_each_append) {
  if (near_->block_size() != far_->block_size())
    fail(Errc::invalid_argument, "near and far stores disagree on block size");
  if (options_.drain_batch == 0) options_.drain_batch = 1;
  if (options_.drain_concurrency == 0) options_.drain_concurrency = 1;

  // Outstanding records must stay readable until they reach the far store.
  std::size_t replayed = 0;
  while (replayed < journal_.pending()) {
    auto records = journal_.peek(journal_.pending());
    for (const auto& r : records) near_->put(r.payload);
    replayed = records.size();
  }
  if (options_.background_drain) worker_ = std::thread([this] { drain_loop(); });
}

CachingStore::~CachingStore() {
  {
    std::lock_guard lock(wake_mu_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void CachingStore::do_put(const BlockName& name, ByteView block) {
  // A block already in the near store was either journaled before it got
  // there or was fetched from the far store, so it needs no new record.
  if (near_->contains(name)) return;
  journal_.append(name, block);
  near_->put(block);
  wake_.notify_one();
}

Bytes CachingStore::do_get(const BlockName& name) {
  try {
    return near_->get(name);
  } catch (const Error& e) {
    if (e.code() != Errc::not_found) throw;
  }
  Bytes block;
  try {
    block = far_->get(name);
  } catch (const Error& e) {
    // A near copy lost before draining is still in the journal.
    auto pending = journal_.find(name);
    if (!pending || e.code() != Errc::not_found) throw;
    block = std::move(*pending);
  }
  try {
    near_->put(block);
  } catch (const Error&) {
    // The read succeeded; a failed repopulation only costs a future miss.
  }
  return block;
}

bool CachingStore::contains(const BlockName& name) {
  return near_->contains(name) || far_->contains(name);
}

std::size_t CachingStore::drain(std::size_t batch) {
  std::lock_guard lock(drain_mu_);
  auto records = journal_.peek(batch);
  if (records.empty()) return 0;

  std::vector<char> ok(records.size(), 0);
  auto push = [&](std::size_t i) {
    try {
      far_->put(records[i].payload);
      ok[i] = 1;
    } catch (const std::exception&) {
      ok[i] = 0;
    }
  };

  auto workers = std::min(options_.drain_concurrency, records.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      push(i);
      if (!ok[i]) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (auto i = next++; i < records.size(); i = next++) push(i);
      });
    for (auto& t : pool) t.join();
  }

  std::size_t acked = 0;
  while (acked < records.size() && ok[acked]) ++acked;
  journal_.acknowledge(acked);
  return acked;
}

void CachingStore::drain_loop() {
  std::unique_lock lock(wake_mu_);
  while (!stopping_) {
    if (journal_.pending() == 0) {
      drained_.notify_all();
      wake_.wait_for(lock, options_.retry_delay);
      continue;
    }
    lock.unlock();
    std::size_t moved = 0;
    try {
      moved = drain(options_.drain_batch);
    } catch (const std::exception&) {
      moved = 0;
    }
    lock.lock();
    if (journal_.pending() == 0) drained_.notify_all();
    if (moved == 0 && !stopping_) wake_.wait_for(lock, options_.retry_delay);
  }
}

bool CachingStore::flush(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  if (!options_.background_drain) {
    while (journal_.pending() > 0) {
      if (drain(options_.drain_batch) == 0) {
        if (std::chrono::steady_clock::now() >= deadline) return false;
        std::this_thread::sleep_for(options_.retry_delay);
      }
    }
    return true;
  }
  std::unique_lock lock(wake_mu_);
  wake_.notify_all();
  return drained_.wait_until(lock, deadline, [&] { return journal_.pending() == 0; });
}

}  // namespace upss
