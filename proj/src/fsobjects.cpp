#include "upss/fsobjects.hpp"

#include <algorithm>

#include "upss/error.hpp"

namespace upss {

ObjectContext ObjectContext::make(StorePtr store, PaddingMode padding, CipherAlg cipher) {
  if (!store) fail(Errc::invalid_argument, "object context needs a store");
  SealOptions seal{store->block_size(), padding, store->hash_alg(), cipher};
  return ObjectContext{std::move(store), seal, true};
}

// ---------------------------------------------------------------------------
// Blob

Blob::Blob(ObjectContext ctx, ObjectKind kind) : ctx_(std::move(ctx)), kind_(kind) {}

Blob::Blob(ObjectContext ctx, const BlockPointer& ptr) : ctx_(std::move(ctx)) {
  auto v = decode_version(ptr, *ctx_.store);
  kind_ = v.kind;
  set_base(ptr, std::move(v));
}

Blob::Blob(ObjectContext ctx, const BlockPointer& ptr, Version v)
    : ctx_(std::move(ctx)), kind_(v.kind) {
  set_base(ptr, std::move(v));
}

void Blob::set_base(const BlockPointer& ptr, Version v) {
  starts_.clear();
  starts_.reserve(v.extents.size());
  std::uint64_t pos = 0;
  for (const auto& x : v.extents) {
    starts_.push_back(pos);
    pos += x.length;
  }
  base_limit_ = v.size;
  size_ = v.size;
  base_ = std::move(v);
  base_ptr_ = ptr;
  overlay_.clear();
  dirty_ = false;
}

std::uint64_t Blob::block_len(std::uint64_t idx) const {
  return std::min<std::uint64_t>(bs(), size_ - idx * bs());
}

std::size_t Blob::extent_index(std::uint64_t offset) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
  return static_cast<std::size_t>(it - starts_.begin()) - 1;
}

Bytes Blob::read_base(std::uint64_t a, std::uint64_t b) const {
  Bytes out(b - a, 0);
  std::uint64_t lim = std::min(b, base_limit_);
  if (!base_ || a >= lim) return out;
  for (auto i = extent_index(a); i < base_->extents.size() && starts_[i] < lim; ++i) {
    const auto& x = base_->extents[i];
    std::uint64_t s = starts_[i], e = s + x.length;
    std::uint64_t from = std::max(a, s), to = std::min(lim, e);
    if (from >= to) continue;
    if (!x.ref.readable())
      fail(Errc::redacted, "bytes at offset " + std::to_string(from) + " are redacted");
    auto data = read_extent(x, *ctx_.store);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(from - s),
              data.begin() + static_cast<std::ptrdiff_t>(to - s),
              out.begin() + static_cast<std::ptrdiff_t>(from - a));
  }
  return out;
}

Bytes Blob::read(std::uint64_t offset, std::uint64_t len) const {
  if (offset > size_ || len > size_ - offset)
    fail(Errc::out_of_range, "read of " + std::to_string(len) + " bytes at " +
                                 std::to_string(offset) + " past end of " +
                                 std::to_string(size_) + "-byte object");
  Bytes out;
  out.reserve(len);
  const std::uint64_t end = offset + len;
  for (std::uint64_t pos = offset; pos < end;) {
    std::uint64_t idx = pos / bs(), bstart = idx * bs();
    std::uint64_t bend = std::min(bstart + bs(), end);
    if (auto it = overlay_.find(idx); it != overlay_.end()) {
      out.insert(out.end(), it->second.begin() + static_cast<std::ptrdiff_t>(pos - bstart),
                 it->second.begin() + static_cast<std::ptrdiff_t>(bend - bstart));
    } else {
      auto part = read_base(pos, bend);
      out.insert(out.end(), part.begin(), part.end());
    }
    pos = bend;
  }
  return out;
}

void Blob::write(std::uint64_t offset, ByteView data) {
  if (data.empty()) return;
  const std::uint64_t end = offset + data.size();
  if (end < offset) fail(Errc::out_of_range, "write offset overflows");
  const std::uint64_t old_size = size_;
  for (std::uint64_t idx = offset / bs(); idx <= (end - 1) / bs(); ++idx) {
    std::uint64_t bstart = idx * bs();
    std::uint64_t ws = std::max(offset, bstart), we = std::min(end, bstart + bs());
    auto it = overlay_.find(idx);
    if (it == overlay_.end()) {
      Bytes buf(bs(), 0);
      std::uint64_t valid_end = std::min(bstart + bs(), old_size);
      if (valid_end > bstart && (ws > bstart || we < valid_end)) {
        auto existing = read_base(bstart, valid_end);
        std::copy(existing.begin(), existing.end(), buf.begin());
      }
      it = overlay_.emplace(idx, std::move(buf)).first;
    }
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(ws - offset),
              data.begin() + static_cast<std::ptrdiff_t>(we - offset),
              it->second.begin() + static_cast<std::ptrdiff_t>(ws - bstart));
  }
  size_ = std::max(size_, end);
  dirty_ = true;
}

void Blob::truncate(std::uint64_t len) {
  if (len == size_) return;
  if (len < size_) {
    overlay_.erase(overlay_.lower_bound((len + bs() - 1) / bs()), overlay_.end());
    if (len % bs() != 0) {
      if (auto it = overlay_.find(len / bs()); it != overlay_.end())
        std::fill(it->second.begin() + static_cast<std::ptrdiff_t>(len % bs()), it->second.end(), 0);
    }
    base_limit_ = std::min(base_limit_, len);
  }
  size_ = len;
  dirty_ = true;
}

std::optional<BlockReference> Blob::reusable(std::uint64_t idx) const {
  if (!base_ || base_->extents.empty()) return std::nullopt;
  std::uint64_t bstart = idx * bs(), len = block_len(idx);
  if (bstart + len > base_limit_) return std::nullopt;
  auto i = extent_index(bstart);
  if (starts_[i] != bstart || base_->extents[i].length != len) return std::nullopt;
  return base_->extents[i].ref;
}

BlockPointer Blob::persist() {
  if (!dirty_ && base_ptr_) return *base_ptr_;
  std::optional<BlockReference> prev;
  if (ctx_.chain_history && base_ptr_) prev = BlockReference::full(*base_ptr_);
  return persist_with_prev(std::move(prev));
}

BlockPointer Blob::persist_with_prev(std::optional<BlockReference> prev) {
  auto& store = *ctx_.store;
  Version v{kind_, size_, {}, std::move(prev)};
  const std::uint64_t blocks = (size_ + bs() - 1) / bs();
  v.extents.reserve(blocks);
  for (std::uint64_t idx = 0; idx < blocks; ++idx) {
    auto len = block_len(idx);
    std::optional<BlockReference> ref;
    auto it = overlay_.find(idx);
    if (it == overlay_.end()) ref = reusable(idx);
    if (!ref) {
      Bytes fresh;
      ByteView content;
      if (it != overlay_.end()) {
        content = ByteView(it->second).first(len);
      } else {
        fresh = read_base(idx * bs(), idx * bs() + len);
        content = fresh;
      }
      auto sealed = seal(content, ctx_.seal);
      if (store.put(sealed.block) != sealed.pointer.name)
        fail(Errc::integrity, "store returned an unexpected name for a data block");
      ref = BlockReference::full(std::move(sealed.pointer));
    }
    v.extents.push_back(Extent{std::move(*ref), static_cast<std::uint32_t>(len)});
  }
  auto ptr = encode_version(v, store, ctx_.seal.cipher);
  set_base(ptr, std::move(v));
  return ptr;
}

// ---------------------------------------------------------------------------
// Node

void Node::mark_dirty() {
  if (!updater_) return;
  auto parent = updater_->parent.lock();
  if (!parent || parent->structure_dirty_) return;
  parent->structure_dirty_ = true;
  parent->mark_dirty();
}

void Node::notify_persisted(const BlockPointer& ptr) {
  if (!updater_) return;
  if (auto parent = updater_->parent.lock()) parent->child_persisted(updater_->name, ptr);
}

Snapshot Node::snapshot() {
  auto ptr = persist();
  return Snapshot{ptr.name.to_text(), pointer_to_hex(ptr), ptr};
}

History Node::history(std::optional<std::size_t> max_depth) {
  return upss::history(persist(), *context().store, max_depth);
}

std::shared_ptr<FileObject> Node::as_file() {
  if (kind() != ObjectKind::file) fail(Errc::invalid_argument, "not a file");
  return std::static_pointer_cast<FileObject>(shared_from_this());
}

std::shared_ptr<DirectoryObject> Node::as_directory() {
  if (kind() != ObjectKind::directory) fail(Errc::invalid_argument, "not a directory");
  return std::static_pointer_cast<DirectoryObject>(shared_from_this());
}

NodePtr open_object(const ObjectContext& ctx, const BlockPointer& ptr) {
  auto v = decode_version(ptr, *ctx.store);
  if (v.kind == ObjectKind::directory) return DirectoryObject::open(ctx, ptr);
  return FileObject::open(ctx, ptr);
}

// ---------------------------------------------------------------------------
// FileObject

std::shared_ptr<FileObject> FileObject::create(const ObjectContext& ctx) {
  return std::shared_ptr<FileObject>(new FileObject(Blob(ctx, ObjectKind::file)));
}

std::shared_ptr<FileObject> FileObject::open(const ObjectContext& ctx, const BlockPointer& ptr) {
  Blob blob(ctx, ptr);
  if (blob.kind() != ObjectKind::file) fail(Errc::invalid_argument, "pointer names a directory");
  return std::shared_ptr<FileObject>(new FileObject(std::move(blob)));
}

void FileObject::write(std::uint64_t offset, ByteView data) {
  blob_.write(offset, data);
  if (blob_.dirty()) mark_dirty();
}

void FileObject::append(ByteView data) { write(blob_.size(), data); }

void FileObject::truncate(std::uint64_t len) {
  blob_.truncate(len);
  if (blob_.dirty()) mark_dirty();
}

BlockPointer FileObject::persist() {
  if (!blob_.dirty() && blob_.pointer()) return *blob_.pointer();
  auto ptr = blob_.persist();
  notify_persisted(ptr);
  return ptr;
}

std::shared_ptr<FileObject> FileObject::redact(std::uint64_t start, std::uint64_t end) {
  auto original = persist();
  if (start > end || end >= size())
    fail(Errc::out_of_range, "redaction range [" + std::to_string(start) + ", " +
                                 std::to_string(end) + "] outside " + std::to_string(size()) +
                                 "-byte file");
  Version v = *blob_.base();
  std::uint64_t pos = 0;
  for (auto& x : v.extents) {
    if (pos <= end && pos + x.length > start) x.ref = x.ref.blinded();
    pos += x.length;
  }
  v.prev = BlockReference::blind(original.name);
  const auto& ctx = context();
  auto ptr = encode_version(v, *ctx.store, ctx.seal.cipher);
  return std::shared_ptr<FileObject>(new FileObject(Blob(ctx, ptr, std::move(v))));
}

// ---------------------------------------------------------------------------
// Directory format

void validate_name(std::string_view name) {
  if (name.empty()) fail(Errc::invalid_argument, "empty name");
  if (name == "." || name == "..") fail(Errc::invalid_argument, "reserved name '" + std::string(name) + "'");
  if (name.size() > 255) fail(Errc::invalid_argument, "name longer than 255 bytes");
  if (name.find('/') != std::string_view::npos || name.find('\0') != std::string_view::npos)
    fail(Errc::invalid_argument, "name contains '/' or NUL");
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    auto part = path.substr(pos, next - pos);
    if (!part.empty()) {
      validate_name(part);
      parts.emplace_back(part);
    }
    pos = next + 1;
  }
  return parts;
}

Bytes encode_directory(const std::vector<DirectoryRecord>& sorted_entries) {
  ByteWriter w;
  w.varint(sorted_entries.size());
  const std::string* last = nullptr;
  for (const auto& e : sorted_entries) {
    if (last && !(*last < e.name))
      fail(Errc::invalid_argument, "directory entries not strictly sorted");
    last = &e.name;
    w.varint(e.name.size());
    w.raw(e.name);
    w.u8(static_cast<std::uint8_t>(e.kind));
    w.raw(encode_pointer(e.pointer));
  }
  return std::move(w).take();
}

std::vector<DirectoryRecord> decode_directory(ByteView content) {
  ByteReader r(content);
  auto count = r.varint();
  if (count > content.size()) fail(Errc::malformed, "directory entry count too large");
  std::vector<DirectoryRecord> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = r.varint();
    if (len > r.remaining()) fail(Errc::malformed, "directory name overruns content");
    std::string name = to_string(r.raw(len));
    try {
      validate_name(name);
    } catch (const Error& e) {
      fail(Errc::malformed, std::string("directory entry: ") + e.what());
    }
    if (!out.empty() && !(out.back().name < name))
      fail(Errc::malformed, "directory entries not strictly sorted");
    auto kind = r.u8();
    if (kind != static_cast<std::uint8_t>(ObjectKind::file) &&
        kind != static_cast<std::uint8_t>(ObjectKind::directory))
      fail(Errc::malformed, "invalid directory entry kind");
    out.push_back(DirectoryRecord{std::move(name), static_cast<ObjectKind>(kind), decode_pointer(r)});
  }
  if (!r.empty()) fail(Errc::malformed, "trailing bytes after directory entries");
  return out;
}

// ---------------------------------------------------------------------------
// DirectoryObject

std::shared_ptr<DirectoryObject> DirectoryObject::create(const ObjectContext& ctx) {
  auto d = std::shared_ptr<DirectoryObject>(new DirectoryObject(Blob(ctx, ObjectKind::directory)));
  d->structure_dirty_ = true;
  return d;
}

std::shared_ptr<DirectoryObject> DirectoryObject::open(const ObjectContext& ctx,
                                                       const BlockPointer& ptr) {
  Blob blob(ctx, ptr);
  if (blob.kind() != ObjectKind::directory) fail(Errc::invalid_argument, "pointer names a file");
  auto d = std::shared_ptr<DirectoryObject>(new DirectoryObject(std::move(blob)));
  d->load_entries();
  return d;
}

void DirectoryObject::load_entries() {
  serialized_ = blob_.read_all();
  entries_.clear();
  for (auto& rec : decode_directory(serialized_))
    entries_.emplace(std::move(rec.name), DirectoryEntry{rec.kind, rec.pointer, nullptr});
}

bool DirectoryObject::dirty() const { return structure_dirty_ || blob_.dirty(); }

BlockPointer DirectoryObject::persist() {
  for (auto& [name, entry] : entries_)
    if (entry.live && (entry.live->dirty() || !entry.pointer)) entry.pointer = entry.live->persist();

  if (!dirty() && blob_.pointer()) return *blob_.pointer();

  std::vector<DirectoryRecord> records;
  records.reserve(entries_.size());
  for (const auto& [name, entry] : entries_)
    records.push_back(DirectoryRecord{name, entry.kind, *entry.pointer});
  auto bytes = encode_directory(records);

  if (bytes != serialized_) {
    const std::size_t bs = context().block_size();
    if (bytes.size() < blob_.size()) blob_.truncate(bytes.size());
    for (std::size_t off = 0; off < bytes.size(); off += bs) {
      auto n = std::min(bs, bytes.size() - off);
      bool same = off + n <= serialized_.size() &&
                  std::equal(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                             bytes.begin() + static_cast<std::ptrdiff_t>(off + n),
                             serialized_.begin() + static_cast<std::ptrdiff_t>(off));
      if (!same) blob_.write(off, ByteView(bytes).subspan(off, n));
    }
    serialized_ = std::move(bytes);
  }
  structure_dirty_ = false;

  if (!blob_.dirty() && blob_.pointer()) return *blob_.pointer();
  auto ptr = blob_.persist();
  notify_persisted(ptr);
  return ptr;
}

std::vector<std::string> DirectoryObject::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

NodePtr DirectoryObject::child(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(Errc::not_found, "no entry named '" + name + "'");
  auto& entry = it->second;
  if (entry.live) return entry.live;
  auto node = open_object(context(), *entry.pointer);
  if (node->kind() != entry.kind)
    fail(Errc::malformed, "entry '" + name + "' kind does not match its Version");
  node->updater_ = Updater{std::static_pointer_cast<DirectoryObject>(shared_from_this()), name};
  entry.live = node;
  return node;
}

void DirectoryObject::check_new(const std::string& name) const {
  validate_name(name);
  if (entries_.count(name)) fail(Errc::already_exists, "entry '" + name + "' already exists");
}

void DirectoryObject::attach(const std::string& name, const NodePtr& node) {
  node->updater_ = Updater{std::static_pointer_cast<DirectoryObject>(shared_from_this()), name};
  entries_[name] = DirectoryEntry{node->kind(), node->pointer(), node};
  structure_dirty_ = true;
  mark_dirty();
}

std::shared_ptr<DirectoryObject> DirectoryObject::mkdir(const std::string& name) {
  check_new(name);
  auto d = create(context());
  attach(name, d);
  return d;
}

std::shared_ptr<FileObject> DirectoryObject::create_file(const std::string& name) {
  check_new(name);
  auto f = FileObject::create(context());
  attach(name, f);
  return f;
}

void DirectoryObject::insert(const std::string& name, const NodePtr& node) {
  check_new(name);
  if (node->updater_ && !node->updater_->parent.expired())
    fail(Errc::invalid_argument, "object is already attached to a directory");
  attach(name, node);
}

void DirectoryObject::link(const std::string& name, ObjectKind kind, const BlockPointer& ptr) {
  check_new(name);
  entries_[name] = DirectoryEntry{kind, ptr, nullptr};
  structure_dirty_ = true;
  mark_dirty();
}

void DirectoryObject::remove(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(Errc::not_found, "no entry named '" + name + "'");
  if (it->second.live) it->second.live->updater_.reset();
  entries_.erase(it);
  structure_dirty_ = true;
  mark_dirty();
}

NodePtr DirectoryObject::lookup(std::string_view path) {
  NodePtr cur = shared_from_this();
  for (const auto& part : split_path(path)) {
    if (cur->kind() != ObjectKind::directory)
      fail(Errc::not_found, "'" + std::string(path) + "': a path component is not a directory");
    cur = cur->as_directory()->child(part);
  }
  return cur;
}

void DirectoryObject::child_persisted(const std::string& name, const BlockPointer& ptr) {
  auto it = entries_.find(name);
  if (it == entries_.end()) return;
  if (it->second.pointer == ptr) return;
  it->second.pointer = ptr;
  structure_dirty_ = true;
  mark_dirty();
}

// ---------------------------------------------------------------------------

VerifyReport verify_tree(const BlockReference& root, BlockStore& store,
                         std::optional<std::size_t> history_depth) {
  VerifyOptions opts;
  opts.history_depth = history_depth;
  opts.children = [](const Version& v, const Bytes& content) {
    std::vector<BlockReference> refs;
    if (v.kind != ObjectKind::directory) return refs;
    for (auto& rec : decode_directory(content)) refs.push_back(BlockReference::full(rec.pointer));
    return refs;
  };
  return verify(root, store, opts);
}

// ---------------------------------------------------------------------------
// diff

namespace {

constexpr std::size_t kMergeGap = 8;

struct Located {
  const Version& v;
  std::vector<std::uint64_t> starts;

  explicit Located(const Version& version) : v(version) {
    std::uint64_t pos = 0;
    for (const auto& x : v.extents) {
      starts.push_back(pos);
      pos += x.length;
    }
  }
  // The extent holding `offset` and its start.
  std::pair<const Extent*, std::uint64_t> at(std::uint64_t offset) const {
    auto it = std::upper_bound(starts.begin(), starts.end(), offset);
    auto i = static_cast<std::size_t>(it - starts.begin()) - 1;
    return {&v.extents[i], starts[i]};
  }
};

DiffHunk redacted_hunk(std::uint64_t off, std::uint64_t a_len, std::uint64_t b_len) {
  return DiffHunk{DiffHunk::Kind::redacted, off, a_len, off, b_len, {}, {}};
}

void compare_bytes(std::uint64_t base, const Bytes& a, const Bytes& b, std::vector<DiffHunk>& out) {
  std::size_t i = 0;
  const std::size_t n = a.size();
  while (i < n) {
    if (a[i] == b[i]) {
      ++i;
      continue;
    }
    std::size_t start = i, last = i;
    for (std::size_t j = i + 1; j < n && j - last <= kMergeGap; ++j)
      if (a[j] != b[j]) last = j;
    std::size_t end = last + 1;
    out.push_back(DiffHunk{DiffHunk::Kind::replace, base + start, end - start, base + start,
                           end - start, Bytes(a.begin() + static_cast<std::ptrdiff_t>(start),
                                              a.begin() + static_cast<std::ptrdiff_t>(end)),
                           Bytes(b.begin() + static_cast<std::ptrdiff_t>(start),
                                 b.begin() + static_cast<std::ptrdiff_t>(end))});
    i = end;
  }
}

std::string quote(const Bytes& data) {
  static const char* hex = "0123456789abcdef";
  std::string out = "\"";
  for (auto c : data) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c >= 0x20 && c < 0x7f) {
          out += static_cast<char>(c);
        } else {
          out += "\\x";
          out += hex[c >> 4];
          out += hex[c & 0xf];
        }
    }
  }
  return out + "\"";
}

}  // namespace

std::vector<DiffHunk> diff(FileObject& original, FileObject& other) {
  original.persist();
  other.persist();
  auto& store = *original.context().store;
  const Version& va = *original.blob().base();
  const Version& vb = *other.blob().base();
  Located la(va), lb(vb);
  const std::uint64_t bs = original.context().block_size();
  const std::uint64_t common = std::min(va.size, vb.size);

  std::vector<DiffHunk> out;
  for (std::uint64_t s = 0; s < common; s += bs) {
    std::uint64_t e = std::min(s + bs, common);
    auto [xa, sa] = la.at(s);
    auto [xb, sb] = lb.at(s);
    bool same_extent = sa == sb && xa->length == xb->length && sa + xa->length >= e;
    // A block blinded only on the other side keeps its name but is reported.
    bool newly_blind = xa->ref.readable() && !xb->ref.readable();
    if (same_extent && xa->ref.name == xb->ref.name && !newly_blind) continue;
    if (!xa->ref.readable() || !xb->ref.readable()) {
      out.push_back(redacted_hunk(s, e - s, e - s));
      continue;
    }
    try {
      auto a = read_range(va, s, e - s, store);
      auto b = read_range(vb, s, e - s, store);
      compare_bytes(s, a, b, out);
    } catch (const Error& err) {
      if (err.code() != Errc::redacted) throw;
      out.push_back(redacted_hunk(s, e - s, e - s));
    }
  }

  auto tail = [&](const Version& longer, bool added) {
    std::uint64_t len = longer.size - common;
    try {
      auto bytes = read_range(longer, common, len, store);
      if (added)
        out.push_back(DiffHunk{DiffHunk::Kind::add, common, 0, common, len, {}, std::move(bytes)});
      else
        out.push_back(DiffHunk{DiffHunk::Kind::remove, common, len, common, 0, std::move(bytes), {}});
    } catch (const Error& err) {
      if (err.code() != Errc::redacted) throw;
      out.push_back(redacted_hunk(common, added ? 0 : len, added ? len : 0));
    }
  };
  if (vb.size > common) tail(vb, true);
  if (va.size > common) tail(va, false);
  return out;
}

std::string render_diff(const std::vector<DiffHunk>& hunks, std::string_view a_label,
                        std::string_view b_label) {
  std::string out = "--- " + std::string(a_label) + "\n+++ " + std::string(b_label) + "\n";
  for (const auto& h : hunks) {
    out += "\n@@ -" + std::to_string(h.a_offset) + "," + std::to_string(h.a_len) + " +" +
           std::to_string(h.b_offset) + "," + std::to_string(h.b_len) + " @@\n";
    switch (h.kind) {
      case DiffHunk::Kind::redacted:
        out += "+++ Redacted\n";
        break;
      case DiffHunk::Kind::replace:
        out += "- " + quote(h.a_bytes) + "\n+ " + quote(h.b_bytes) + "\n";
        break;
      case DiffHunk::Kind::add:
        out += "+ " + quote(h.b_bytes) + "\n";
        break;
      case DiffHunk::Kind::remove:
        out += "- " + quote(h.a_bytes) + "\n";
        break;
    }
  }
  return out;
}

}  // namespace upss
