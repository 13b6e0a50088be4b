#pragma once

// Mutable filesystem objects over immutable Versions.
//
// A Blob is an edit session: a block-granular overlay on top of an optional
// base Version. Persisting folds the overlay into new blocks, reusing every
// base extent that was not touched, and records the base as `prev`.
//
// Files and directories wrap a Blob. A directory's content is its sorted
// entry table:
//   count | { name_len | name | kind u8 | encoded pointer }...   (varints)
// Children hold an Updater (weak parent link plus entry name) so a persisted
// child installs its new pointer in the parent and dirties the path to root.
//
// Object trees are single-writer.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "upss/dag.hpp"

namespace upss {

struct ObjectContext {
  StorePtr store;
  SealOptions seal;
  /// Record the previous Version as `prev` on each persist.
  bool chain_history = true;

  /// Takes block size and hash from the store.
  static ObjectContext make(StorePtr store, PaddingMode padding = PaddingMode::random,
                            CipherAlg cipher = CipherAlg::aes128_ctr);
  std::size_t block_size() const { return seal.block_size; }
};

class Blob {
 public:
  Blob(ObjectContext ctx, ObjectKind kind);
  Blob(ObjectContext ctx, const BlockPointer& ptr);
  Blob(ObjectContext ctx, const BlockPointer& ptr, Version v);

  ObjectKind kind() const { return kind_; }
  std::uint64_t size() const { return size_; }
  bool dirty() const { return dirty_; }
  const ObjectContext& context() const { return ctx_; }

  /// Pointer of the base Version; absent until first persist.
  const std::optional<BlockPointer>& pointer() const { return base_ptr_; }
  const std::optional<Version>& base() const { return base_; }

  /// Throws Errc::out_of_range past the end, Errc::redacted for blind data.
  Bytes read(std::uint64_t offset, std::uint64_t len) const;
  Bytes read_all() const { return read(0, size_); }

  /// Writing past the end zero-fills the gap.
  void write(std::uint64_t offset, ByteView data);
  void append(ByteView data) { write(size_, data); }
  void truncate(std::uint64_t len);

  /// Returns the existing pointer when clean.
  BlockPointer persist();
  /// Like persist, but with an explicit prev.
  BlockPointer persist_with_prev(std::optional<BlockReference> prev);

 private:
  std::size_t bs() const { return ctx_.seal.block_size; }
  void set_base(const BlockPointer& ptr, Version v);
  std::uint64_t block_len(std::uint64_t idx) const;
  /// Base bytes in [a, b); bytes at or past base_limit_ read as zero.
  Bytes read_base(std::uint64_t a, std::uint64_t b) const;
  /// Index into base_->extents of the extent holding `offset`.
  std::size_t extent_index(std::uint64_t offset) const;
  std::optional<BlockReference> reusable(std::uint64_t idx) const;

  ObjectContext ctx_;
  ObjectKind kind_;
  std::optional<Version> base_;
  std::optional<BlockPointer> base_ptr_;
  std::vector<std::uint64_t> starts_;  // start offset of each base extent
  std::uint64_t base_limit_ = 0;
  std::map<std::uint64_t, Bytes> overlay_;  // block index -> block_size bytes
  std::uint64_t size_ = 0;
  bool dirty_ = false;
};

class DirectoryObject;
class FileObject;

struct Updater {
  std::weak_ptr<DirectoryObject> parent;
  std::string name;
};

struct Snapshot {
  std::string name;         // sha3-512:<base64>
  std::string pointer_hex;  // encoded pointer
  BlockPointer pointer;
};

class Node : public std::enable_shared_from_this<Node> {
 public:
  virtual ~Node() = default;

  ObjectKind kind() const { return blob_.kind(); }
  virtual bool dirty() const { return blob_.dirty(); }
  virtual BlockPointer persist() = 0;
  const std::optional<BlockPointer>& pointer() const { return blob_.pointer(); }
  const ObjectContext& context() const { return blob_.context(); }
  std::uint64_t size() const { return blob_.size(); }

  Snapshot snapshot();
  History history(std::optional<std::size_t> max_depth = std::nullopt);

  std::shared_ptr<FileObject> as_file();
  std::shared_ptr<DirectoryObject> as_directory();

  const std::optional<Updater>& updater() const { return updater_; }
  const Blob& blob() const { return blob_; }

 protected:
  explicit Node(Blob blob) : blob_(std::move(blob)) {}
  void mark_dirty();
  void notify_persisted(const BlockPointer& ptr);

  Blob blob_;
  std::optional<Updater> updater_;

  friend class DirectoryObject;
};

using NodePtr = std::shared_ptr<Node>;

/// Opens a persisted object of either kind.
NodePtr open_object(const ObjectContext& ctx, const BlockPointer& ptr);

class FileObject final : public Node {
 public:
  static std::shared_ptr<FileObject> create(const ObjectContext& ctx);
  static std::shared_ptr<FileObject> open(const ObjectContext& ctx, const BlockPointer& ptr);

  Bytes read(std::uint64_t offset, std::uint64_t len) const { return blob_.read(offset, len); }
  Bytes read_all() const { return blob_.read_all(); }
  void write(std::uint64_t offset, ByteView data);
  void append(ByteView data);
  void truncate(std::uint64_t len);
  BlockPointer persist() override;

  /// Persists, then returns a detached object whose Version blinds every
  /// block overlapping [start, end] and whose prev names this Version only.
  std::shared_ptr<FileObject> redact(std::uint64_t start, std::uint64_t end);

 private:
  explicit FileObject(Blob blob) : Node(std::move(blob)) {}
};

struct DirectoryEntry {
  ObjectKind kind;
  std::optional<BlockPointer> pointer;  // absent for never-persisted children
  NodePtr live;                         // loaded child, if any
};

class DirectoryObject final : public Node {
 public:
  static std::shared_ptr<DirectoryObject> create(const ObjectContext& ctx);
  static std::shared_ptr<DirectoryObject> open(const ObjectContext& ctx, const BlockPointer& ptr);

  bool dirty() const override;
  BlockPointer persist() override;

  std::vector<std::string> names() const;
  const std::map<std::string, DirectoryEntry>& entries() const { return entries_; }
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  /// Loads a child. Throws Errc::not_found.
  NodePtr child(const std::string& name);
  std::shared_ptr<DirectoryObject> mkdir(const std::string& name);
  std::shared_ptr<FileObject> create_file(const std::string& name);
  /// Adopts a detached object under `name`.
  void insert(const std::string& name, const NodePtr& node);
  /// Adds an entry for an already-persisted object.
  void link(const std::string& name, ObjectKind kind, const BlockPointer& ptr);
  /// Drops the entry; a live child becomes detached.
  void remove(const std::string& name);

  /// Resolves a `/`-separated path relative to this directory.
  NodePtr lookup(std::string_view path);

  void child_persisted(const std::string& name, const BlockPointer& ptr);

 private:
  friend class Node;
  explicit DirectoryObject(Blob blob) : Node(std::move(blob)) {}
  void load_entries();
  void attach(const std::string& name, const NodePtr& node);
  void check_new(const std::string& name) const;

  std::map<std::string, DirectoryEntry> entries_;
  Bytes serialized_;  // content of the base Version
  bool structure_dirty_ = false;
};

/// Empty, over-long, "." / ".." and names containing '/' or NUL are rejected.
void validate_name(std::string_view name);
std::vector<std::string> split_path(std::string_view path);

struct DirectoryRecord {
  std::string name;
  ObjectKind kind;
  BlockPointer pointer;
};
Bytes encode_directory(const std::vector<DirectoryRecord>& sorted_entries);
std::vector<DirectoryRecord> decode_directory(ByteView content);

/// Verifies a tree, descending into directory entries.
VerifyReport verify_tree(const BlockReference& root, BlockStore& store,
                         std::optional<std::size_t> history_depth = std::nullopt);

struct DiffHunk {
  enum class Kind { replace, redacted, add, remove };
  Kind kind;
  std::uint64_t a_offset, a_len;
  std::uint64_t b_offset, b_len;
  Bytes a_bytes, b_bytes;
};

/// Persists both objects and compares them block by block.
std::vector<DiffHunk> diff(FileObject& original, FileObject& other);
std::string render_diff(const std::vector<DiffHunk>& hunks, std::string_view a_label = "a/file",
                        std::string_view b_label = "b/file");

}  // namespace upss
