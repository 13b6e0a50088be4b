#pragma once

// Version manifests: the immutable Merkle-DAG layer.
//
// A Version lists the blocks of one file or directory in order, its logical
// size and, optionally, the Version it was derived from. Versions are sealed
// into blocks with deterministic padding, so equal Versions share a name.
//
// Head block layout (integers are LEB128 varints unless noted):
//   "VR" | 0x01 | kind u8 | size | entry count | entries... | prev
// Continuation block layout:
//   "VC" | 0x01 | entry count | entries...
// Entries:
//   0x01 <encoded pointer> <length>    readable data extent
//   0x02 <encoded name>    <length>    name-only (blind) data extent
//   0x03 <encoded pointer> <covered>   continuation subtree
// prev:
//   0x04 (none) | 0x01 <encoded pointer> | 0x02 <encoded name>
// Trailing bytes up to the block size are zero.
//
// A manifest with more extents than one block holds is split into
// continuation blocks of a fixed fan-out, chunked from the start of the
// extent list, so editing one extent rewrites one leaf plus its ancestors.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "upss/blockstore.hpp"

namespace upss {

enum class ObjectKind : std::uint8_t {
  file = 0x01,
  directory = 0x02,
};

std::string_view to_string(ObjectKind kind);

/// Either a full pointer (readable) or a bare name (existence and integrity
/// only).
struct BlockReference {
  BlockName name;
  std::optional<BlockKey> key;

  static BlockReference full(BlockPointer ptr) {
    return {std::move(ptr.name), std::move(ptr.key)};
  }
  static BlockReference blind(BlockName name) { return {std::move(name), std::nullopt}; }

  bool readable() const { return key.has_value(); }
  /// Throws Errc::redacted for a name-only reference.
  BlockPointer pointer() const;
  BlockReference blinded() const { return blind(name); }

  bool operator==(const BlockReference&) const = default;
};

struct Extent {
  BlockReference ref;
  std::uint32_t length = 0;

  bool operator==(const Extent&) const = default;
};

struct Version {
  ObjectKind kind = ObjectKind::file;
  std::uint64_t size = 0;
  std::vector<Extent> extents;
  std::optional<BlockReference> prev;

  bool operator==(const Version&) const = default;
};

enum class RefKind : std::uint8_t {
  full = 0x01,
  name_only = 0x02,
  continuation = 0x03,
  none = 0x04,
};

inline constexpr std::uint8_t kVersionFormat = 0x01;

/// Entries per manifest block for a given block size.
std::size_t manifest_fanout(std::size_t block_size);

/// Serializes, seals and stores `v`; returns the pointer to the head block.
/// Uses the store's block size and hash, with deterministic padding.
BlockPointer encode_version(const Version& v, BlockStore& store,
                            CipherAlg cipher = CipherAlg::aes128_ctr);

Version decode_version(const BlockPointer& ptr, BlockStore& store);
/// Throws Errc::redacted for a name-only reference.
Version decode_version(const BlockReference& ref, BlockStore& store);

/// The unsealed head-block bytes for a Version whose extents fit in one
/// block (exposed for format tests).
Bytes serialize_single_block(const Version& v);

/// Fetches and decrypts one extent.
Bytes read_extent(const Extent& extent, BlockStore& store);

/// Reads `len` bytes at `offset`. Throws Errc::out_of_range past the end and
/// Errc::redacted if the range touches a name-only extent.
Bytes read_range(const Version& v, std::uint64_t offset, std::uint64_t len, BlockStore& store);

struct HistoryEntry {
  BlockReference ref;
  std::optional<Version> version;  // absent when the reference is blind
};

struct History {
  std::vector<HistoryEntry> entries;
  /// Set when the walk stopped at a block it could not fetch or decode.
  std::optional<BlockName> broken_at;
  std::string error;
  bool truncated = false;  // stopped by max_depth
};

/// Walks the prev chain from `ptr`. A blind prev is recorded as a final
/// entry without a Version.
History history(const BlockPointer& ptr, BlockStore& store,
                std::optional<std::size_t> max_depth = std::nullopt);

struct VerifyIssue {
  enum class Kind { missing, corrupt, malformed, io };
  Kind kind;
  BlockName name;
  std::string detail;
};

struct VerifyReport {
  std::size_t blocks_checked = 0;
  std::vector<VerifyIssue> issues;

  bool ok() const { return issues.empty(); }
};

/// Given a decoded directory Version and its full content, returns the
/// Versions it references beyond its own extents.
using ChildEnumerator =
    std::function<std::vector<BlockReference>(const Version& v, const Bytes& content)>;

struct VerifyOptions {
  /// Follow prev links up to this many hops; nullopt means no limit.
  std::optional<std::size_t> history_depth;
  ChildEnumerator children;
};

/// Fetches every block reachable from `root` and checks it against its
/// name. Name-only references are checked for existence and integrity only.
/// Problems are collected in the report rather than thrown.
VerifyReport verify(const BlockReference& root, BlockStore& store, const VerifyOptions& options = {});

}  // namespace upss
