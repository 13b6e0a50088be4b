#include "upss/dag.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "upss/error.hpp"

namespace upss {

namespace {

constexpr std::string_view kHeadMagic = "VR";
constexpr std::string_view kNodeMagic = "VC";
constexpr std::size_t kMaxEntrySize = 112;     // kind + largest pointer + varint
constexpr std::size_t kHeadReserve = 128;      // header fields + prev
constexpr std::size_t kMaxManifestDepth = 12;

struct Entry {
  RefKind kind;
  BlockReference ref;
  std::uint64_t length;  // extent length, or bytes covered by a subtree
};

struct ParsedHead {
  ObjectKind kind;
  std::uint64_t size;
  std::vector<Entry> entries;
  std::optional<BlockReference> prev;
};

void write_entry(ByteWriter& w, const Entry& e) {
  w.u8(static_cast<std::uint8_t>(e.kind));
  if (e.kind == RefKind::name_only)
    w.raw(e.ref.name.encode());
  else
    w.raw(encode_pointer(e.ref.pointer()));
  w.varint(e.length);
}

Entry read_entry(ByteReader& r) {
  auto tag = r.u8();
  switch (static_cast<RefKind>(tag)) {
    case RefKind::full:
    case RefKind::continuation: {
      auto ptr = decode_pointer(r);
      auto len = r.varint();
      return Entry{static_cast<RefKind>(tag), BlockReference::full(std::move(ptr)), len};
    }
    case RefKind::name_only: {
      auto name = BlockName::decode(r);
      auto len = r.varint();
      return Entry{RefKind::name_only, BlockReference::blind(std::move(name)), len};
    }
    default:
      fail(Errc::malformed, "invalid manifest entry kind " + std::to_string(tag));
  }
}

void expect_zero_tail(const ByteReader& r) {
  for (auto b : r.rest())
    if (b != 0) fail(Errc::malformed, "non-zero bytes after manifest");
}

ParsedHead parse_head(ByteView plain) {
  ByteReader r(plain);
  r.expect(kHeadMagic, "version manifest");
  if (r.u8() != kVersionFormat) fail(Errc::unsupported, "unknown version manifest format");
  auto kind = r.u8();
  if (kind != static_cast<std::uint8_t>(ObjectKind::file) &&
      kind != static_cast<std::uint8_t>(ObjectKind::directory))
    fail(Errc::malformed, "invalid object kind " + std::to_string(kind));
  ParsedHead h{static_cast<ObjectKind>(kind), r.varint(), {}, std::nullopt};
  auto count = r.varint();
  if (count > plain.size()) fail(Errc::malformed, "manifest entry count too large");
  h.entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) h.entries.push_back(read_entry(r));
  auto prev = r.u8();
  switch (static_cast<RefKind>(prev)) {
    case RefKind::none:
      break;
    case RefKind::full:
      h.prev = BlockReference::full(decode_pointer(r));
      break;
    case RefKind::name_only:
      h.prev = BlockReference::blind(BlockName::decode(r));
      break;
    default:
      fail(Errc::malformed, "invalid prev kind " + std::to_string(prev));
  }
  expect_zero_tail(r);
  return h;
}

std::vector<Entry> parse_node(ByteView plain) {
  ByteReader r(plain);
  r.expect(kNodeMagic, "manifest continuation");
  if (r.u8() != kVersionFormat) fail(Errc::unsupported, "unknown continuation format");
  auto count = r.varint();
  if (count > plain.size()) fail(Errc::malformed, "continuation entry count too large");
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) entries.push_back(read_entry(r));
  expect_zero_tail(r);
  return entries;
}

Bytes fetch_plain(const BlockPointer& ptr, BlockStore& store) {
  auto block = store.get(ptr.name);
  return open(block, ptr, block.size());
}

void check_data_length(std::uint64_t len, std::size_t block_size, Errc code = Errc::malformed) {
  if (len == 0 || len > block_size)
    fail(code, "extent length " + std::to_string(len) + " outside (0, block size]");
}

// Appends the data extents reachable from `entries`; returns bytes covered.
std::uint64_t flatten(const std::vector<Entry>& entries, BlockStore& store, std::size_t depth,
                      std::vector<Extent>& out) {
  if (depth > kMaxManifestDepth) fail(Errc::malformed, "manifest tree too deep");
  std::uint64_t total = 0;
  for (const auto& e : entries) {
    if (e.kind == RefKind::continuation) {
      auto sub = parse_node(fetch_plain(e.ref.pointer(), store));
      auto covered = flatten(sub, store, depth + 1, out);
      if (covered != e.length) fail(Errc::malformed, "continuation length mismatch");
      total += covered;
    } else {
      check_data_length(e.length, store.block_size());
      out.push_back(Extent{e.ref, static_cast<std::uint32_t>(e.length)});
      total += e.length;
    }
  }
  return total;
}

Entry data_entry(const Extent& x) {
  return Entry{x.ref.readable() ? RefKind::full : RefKind::name_only, x.ref, x.length};
}

Bytes serialize_head(ObjectKind kind, std::uint64_t size, const std::vector<Entry>& entries,
                     const std::optional<BlockReference>& prev) {
  ByteWriter w;
  w.raw(kHeadMagic);
  w.u8(kVersionFormat);
  w.u8(static_cast<std::uint8_t>(kind));
  w.varint(size);
  w.varint(entries.size());
  for (const auto& e : entries) write_entry(w, e);
  if (!prev) {
    w.u8(static_cast<std::uint8_t>(RefKind::none));
  } else if (prev->readable()) {
    w.u8(static_cast<std::uint8_t>(RefKind::full));
    w.raw(encode_pointer(prev->pointer()));
  } else {
    w.u8(static_cast<std::uint8_t>(RefKind::name_only));
    w.raw(prev->name.encode());
  }
  return std::move(w).take();
}

Bytes serialize_node(const std::vector<Entry>& entries) {
  ByteWriter w;
  w.raw(kNodeMagic);
  w.u8(kVersionFormat);
  w.varint(entries.size());
  for (const auto& e : entries) write_entry(w, e);
  return std::move(w).take();
}

BlockPointer store_manifest(ByteView bytes, BlockStore& store, CipherAlg cipher) {
  SealOptions opts{store.block_size(), PaddingMode::deterministic, store.hash_alg(), cipher};
  auto sealed = seal(bytes, opts);
  if (store.put(sealed.block) != sealed.pointer.name)
    fail(Errc::integrity, "store returned an unexpected name for a manifest block");
  return sealed.pointer;
}

}  // namespace

std::string_view to_string(ObjectKind kind) {
  return kind == ObjectKind::directory ? "directory" : "file";
}

BlockPointer BlockReference::pointer() const {
  if (!key) fail(Errc::redacted, "block " + name.to_text() + " is referenced by name only");
  return BlockPointer{name, *key};
}

std::size_t manifest_fanout(std::size_t block_size) {
  if (block_size <= kHeadReserve + 2 * kMaxEntrySize)
    fail(Errc::invalid_argument, "block size too small for manifests");
  return (block_size - kHeadReserve) / kMaxEntrySize;
}

Bytes serialize_single_block(const Version& v) {
  std::vector<Entry> entries;
  for (const auto& x : v.extents) entries.push_back(data_entry(x));
  return serialize_head(v.kind, v.size, entries, v.prev);
}

BlockPointer encode_version(const Version& v, BlockStore& store, CipherAlg cipher) {
  auto fanout = manifest_fanout(store.block_size());
  std::uint64_t total = 0;
  std::vector<Entry> level;
  level.reserve(v.extents.size());
  for (const auto& x : v.extents) {
    check_data_length(x.length, store.block_size(), Errc::invalid_argument);
    total += x.length;
    level.push_back(data_entry(x));
  }
  if (total != v.size) fail(Errc::invalid_argument, "extent lengths do not sum to version size");

  while (level.size() > fanout) {
    std::vector<Entry> parents;
    for (std::size_t i = 0; i < level.size(); i += fanout) {
      std::vector<Entry> chunk(level.begin() + static_cast<std::ptrdiff_t>(i),
                               level.begin() + static_cast<std::ptrdiff_t>(std::min(i + fanout, level.size())));
      std::uint64_t covered = 0;
      for (const auto& e : chunk) covered += e.length;
      auto ptr = store_manifest(serialize_node(chunk), store, cipher);
      parents.push_back(Entry{RefKind::continuation, BlockReference::full(std::move(ptr)), covered});
    }
    level = std::move(parents);
  }
  return store_manifest(serialize_head(v.kind, v.size, level, v.prev), store, cipher);
}

Version decode_version(const BlockPointer& ptr, BlockStore& store) {
  auto head = parse_head(fetch_plain(ptr, store));
  Version v{head.kind, head.size, {}, std::move(head.prev)};
  auto covered = flatten(head.entries, store, 0, v.extents);
  if (covered != v.size) fail(Errc::malformed, "extent lengths do not sum to version size");
  return v;
}

Version decode_version(const BlockReference& ref, BlockStore& store) {
  return decode_version(ref.pointer(), store);
}

Bytes read_extent(const Extent& extent, BlockStore& store) {
  auto ptr = extent.ref.pointer();
  auto block = store.get(ptr.name);
  return open(block, ptr, extent.length);
}

Bytes read_range(const Version& v, std::uint64_t offset, std::uint64_t len, BlockStore& store) {
  if (offset > v.size || len > v.size - offset)
    fail(Errc::out_of_range, "read of " + std::to_string(len) + " bytes at " + std::to_string(offset) +
                                 " past end of " + std::to_string(v.size) + "-byte object");
  Bytes out;
  out.reserve(len);
  std::uint64_t pos = 0;
  const std::uint64_t end = offset + len;
  for (const auto& x : v.extents) {
    if (pos >= end) break;
    std::uint64_t next = pos + x.length;
    if (next > offset) {
      if (!x.ref.readable())
        fail(Errc::redacted, "range [" + std::to_string(offset) + ", " + std::to_string(end) +
                                 ") touches a redacted block");
      auto data = read_extent(x, store);
      auto from = std::max(offset, pos) - pos;
      auto to = std::min(end, next) - pos;
      out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(from),
                 data.begin() + static_cast<std::ptrdiff_t>(to));
    }
    pos = next;
  }
  return out;
}

History history(const BlockPointer& ptr, BlockStore& store, std::optional<std::size_t> max_depth) {
  History h;
  std::optional<BlockReference> cur = BlockReference::full(ptr);
  while (cur) {
    if (max_depth && h.entries.size() >= *max_depth) {
      h.truncated = true;
      break;
    }
    if (!cur->readable()) {
      h.entries.push_back(HistoryEntry{*cur, std::nullopt});
      break;
    }
    try {
      auto v = decode_version(*cur, store);
      auto next = v.prev;
      h.entries.push_back(HistoryEntry{*cur, std::move(v)});
      cur = std::move(next);
    } catch (const Error& e) {
      h.broken_at = cur->name;
      h.error = e.what();
      break;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

namespace {

class Verifier {
 public:
  Verifier(BlockStore& store, const VerifyOptions& options) : store_(store), options_(options) {}

  void version(const BlockReference& ref, std::size_t hops) {
    if (!seen_versions_.insert(ref.name).second) return;
    auto block = check(ref.name);
    if (!block || !ref.readable()) return;

    std::vector<Extent> extents;
    ParsedHead head;
    try {
      head = parse_head(open(*block, ref.pointer(), block->size()));
      if (!entries(head.entries, 0, extents)) return;
    } catch (const Error& e) {
      issue(VerifyIssue::Kind::malformed, ref.name, e.what());
      return;
    }

    bool all_readable = std::all_of(extents.begin(), extents.end(),
                                    [](const Extent& x) { return x.ref.readable(); });
    if (options_.children && all_readable && head.kind == ObjectKind::directory) {
      Version v{head.kind, head.size, extents, head.prev};
      try {
        Bytes content;
        for (const auto& x : extents) {
          auto part = read_extent(x, store_);
          content.insert(content.end(), part.begin(), part.end());
        }
        for (const auto& child : options_.children(v, content)) version(child, 0);
      } catch (const Error& e) {
        issue(VerifyIssue::Kind::malformed, ref.name, std::string("children: ") + e.what());
      }
    }

    if (head.prev) {
      bool follow = !options_.history_depth || hops < *options_.history_depth;
      if (follow)
        version(*head.prev, hops + 1);
      else
        check(head.prev->name);
    }
  }

  VerifyReport take() && { return std::move(report_); }

 private:
  // Returns false if a manifest node could not be traversed.
  bool entries(const std::vector<Entry>& list, std::size_t depth, std::vector<Extent>& out) {
    if (depth > kMaxManifestDepth) fail(Errc::malformed, "manifest tree too deep");
    for (const auto& e : list) {
      if (e.kind == RefKind::continuation) {
        auto block = check(e.ref.name);
        if (!block) return false;
        auto sub = parse_node(open(*block, e.ref.pointer(), block->size()));
        if (!entries(sub, depth + 1, out)) return false;
      } else {
        check(e.ref.name);
        out.push_back(Extent{e.ref, static_cast<std::uint32_t>(e.length)});
      }
    }
    return true;
  }

  std::optional<Bytes> check(const BlockName& name) {
    auto it = checked_.find(name);
    if (it != checked_.end() && !it->second) return std::nullopt;
    if (it == checked_.end()) ++report_.blocks_checked;
    try {
      auto block = store_.get(name);
      checked_[name] = true;
      return block;
    } catch (const Error& e) {
      checked_[name] = false;
      auto kind = e.code() == Errc::not_found   ? VerifyIssue::Kind::missing
                  : e.code() == Errc::integrity ? VerifyIssue::Kind::corrupt
                                                : VerifyIssue::Kind::io;
      issue(kind, name, e.what());
      return std::nullopt;
    }
  }

  void issue(VerifyIssue::Kind kind, const BlockName& name, std::string detail) {
    report_.issues.push_back(VerifyIssue{kind, name, std::move(detail)});
  }

  BlockStore& store_;
  const VerifyOptions& options_;
  VerifyReport report_;
  std::unordered_map<BlockName, bool> checked_;
  std::unordered_set<BlockName> seen_versions_;
};

}  // namespace

VerifyReport verify(const BlockReference& root, BlockStore& store, const VerifyOptions& options) {
  Verifier v(store, options);
  v.version(root, 0);
  return std::move(v).take();
}

}  // namespace upss
