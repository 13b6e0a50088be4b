#include "upss/blockstore.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "upss/error.hpp"

namespace upss {

namespace fs = std::filesystem;

void validate_block_size(std::size_t size) {
  if (size == 0 || size % 512 != 0)
    fail(Errc::invalid_argument, "block size " + std::to_string(size) + " is not a multiple of 512");
}

BlockName BlockStore::put(ByteView block) {
  if (block.size() != block_size())
    fail(Errc::invalid_argument, "block of " + std::to_string(block.size()) +
                                     " bytes does not match store block size " +
                                     std::to_string(block_size()));
  BlockName name(hash_alg(), hash(hash_alg(), block));
  do_put(name, block);
  return name;
}

Bytes BlockStore::get(const BlockName& name) {
  auto block = do_get(name);
  verify_block(block, name);
  return block;
}

bool BlockStore::contains(const BlockName& name) {
  try {
    do_get(name);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) return false;
    throw;
  }
}

// ---------------------------------------------------------------------------

MemoryStore::MemoryStore(std::size_t block_size) : block_size_(block_size) {
  validate_block_size(block_size);
}

void MemoryStore::do_put(const BlockName& name, ByteView block) {
  std::unique_lock lock(mu_);
  blocks_.try_emplace(name, block.begin(), block.end());
}

Bytes MemoryStore::do_get(const BlockName& name) {
  std::shared_lock lock(mu_);
  auto it = blocks_.find(name);
  if (it == blocks_.end()) fail(Errc::not_found, "block " + name.to_text() + " not found");
  return it->second;
}

bool MemoryStore::contains(const BlockName& name) {
  std::shared_lock lock(mu_);
  return blocks_.contains(name);
}

std::optional<std::uint64_t> MemoryStore::block_count() const {
  std::shared_lock lock(mu_);
  return blocks_.size();
}

std::vector<BlockName> MemoryStore::names() const {
  std::shared_lock lock(mu_);
  std::vector<BlockName> out;
  out.reserve(blocks_.size());
  for (const auto& [name, block] : blocks_) out.push_back(name);
  return out;
}

void MemoryStore::clear() {
  std::unique_lock lock(mu_);
  blocks_.clear();
}

void MemoryStore::overwrite_unchecked(const BlockName& name, Bytes bytes) {
  std::unique_lock lock(mu_);
  blocks_[name] = std::move(bytes);
}

bool MemoryStore::erase(const BlockName& name) {
  std::unique_lock lock(mu_);
  return blocks_.erase(name) > 0;
}

// ---------------------------------------------------------------------------

namespace {

void write_file_atomic(const fs::path& path, ByteView data, bool sync) {
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail(Errc::io, "cannot create " + tmp.string());
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      ::unlink(tmp.c_str());
      fail(Errc::io, "write failed for " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (sync) ::fdatasync(fd);
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    fail(Errc::io, "rename failed for " + path.string());
  }
}

}  // namespace

FileStore::FileStore(fs::path root, std::size_t block_size)
    : root_(std::move(root)), block_size_(block_size) {
  validate_block_size(block_size);
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(Errc::io, "cannot create store directory " + root_.string() + ": " + ec.message());
  auto marker = root_ / "block_size";
  if (fs::exists(marker)) {
    std::ifstream in(marker);
    std::size_t recorded = 0;
    if (!(in >> recorded)) fail(Errc::malformed, "unreadable block size marker in " + root_.string());
    if (recorded != block_size_)
      fail(Errc::invalid_argument, "store at " + root_.string() + " uses block size " +
                                       std::to_string(recorded));
  } else {
    auto text = std::to_string(block_size_) + "\n";
    write_file_atomic(marker, as_bytes(text), true);
  }
}

fs::path FileStore::path_for(const BlockName& name) const {
  auto hex = name.to_hex();
  return root_ / hex.substr(0, 2) / hex.substr(2, 2) / hex;
}

void FileStore::do_put(const BlockName& name, ByteView block) {
  auto path = path_for(name);
  if (fs::exists(path)) return;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) fail(Errc::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  write_file_atomic(path, block, false);
}

Bytes FileStore::do_get(const BlockName& name) {
  auto path = path_for(name);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::not_found, "block " + name.to_text() + " not found");
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io, "read failed for " + path.string());
  return data;
}

bool FileStore::contains(const BlockName& name) { return fs::exists(path_for(name)); }

std::optional<std::uint64_t> FileStore::block_count() const {
  std::uint64_t n = 0;
  for (auto& level1 : fs::directory_iterator(root_)) {
    if (!level1.is_directory()) continue;
    for (auto& level2 : fs::directory_iterator(level1.path())) {
      if (!level2.is_directory()) continue;
      for (auto& f : fs::directory_iterator(level2.path()))
        if (f.is_regular_file() && f.path().filename().string().find('.') == std::string::npos) ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------

LatencyStore::LatencyStore(StorePtr inner, std::chrono::microseconds delay)
    : inner_(std::move(inner)), delay_(delay) {}

void LatencyStore::do_put(const BlockName& name, ByteView block) {
  std::this_thread::sleep_for(delay_);
  auto stored = inner_->put(block);
  if (stored != name) fail(Errc::integrity, "inner store named block differently");
}

Bytes LatencyStore::do_get(const BlockName& name) {
  std::this_thread::sleep_for(delay_);
  return inner_->get(name);
}

}  // namespace upss
