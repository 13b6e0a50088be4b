#pragma once

// Private version control over shared encrypted storage.
//
// Clients and the repository service share one block store. The service
// only ever sees block pointers: it keeps a single head (the current root
// directory Version) and advances it by compare-and-swap.
//
// Frames reuse the netstore protocol:
//   HEAD  request empty             -> OK, encoded pointer (empty: no head)
//   PUSH  request pointer [name]    -> OK, 0x00 (accepted)
//                                      OK, 0x01 | u16 len | head pointer | reason
//   LOG   request empty             -> OK, u32 count | { kind u8 | encoded }...
//         where kind 1 carries a pointer and kind 2 a name.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "upss/fsobjects.hpp"
#include "upss/netstore.hpp"

namespace upss::uvc {

/// Root-level file holding commit metadata.
inline constexpr std::string_view kCommitFile = ".uvc-commit";

struct PushRequest {
  BlockPointer proposed;
  std::optional<BlockName> expected_parent;  // absent for the first push
};

struct PushResult {
  bool accepted = false;
  std::optional<BlockPointer> head;  // current head after the call
  std::string reason;
};

Bytes encode_push_request(const PushRequest& req);
PushRequest decode_push_request(ByteView payload);
Bytes encode_push_response(const PushResult& res);
PushResult decode_push_response(ByteView payload);
Bytes encode_log(const std::vector<BlockReference>& entries);
std::vector<BlockReference> decode_log(ByteView payload);

/// Server-side state: the accepted head and the store it lives in.
class Repository {
 public:
  /// With a head file, the head survives restarts; the file is replaced
  /// atomically on each accepted push.
  explicit Repository(StorePtr store, std::optional<std::filesystem::path> head_file = {});

  std::optional<BlockPointer> head() const;
  std::uint64_t accepted() const;
  /// Accepts iff expected_parent names the head, proposed.prev is the head
  /// (absent for the first push) and every block of the proposed tree is
  /// present and intact.
  PushResult push(const PushRequest& req);
  /// Head first, following prev links.
  std::vector<BlockReference> log() const;

 private:
  void save_head() const;

  StorePtr store_;
  std::optional<std::filesystem::path> head_file_;
  mutable std::mutex mu_;
  std::optional<BlockPointer> head_;
  std::uint64_t accepted_ = 0;
};

net::Handler make_repository_handler(std::shared_ptr<Repository> repo);

class RepositoryClient {
 public:
  explicit RepositoryClient(net::Endpoint endpoint) : client_(std::move(endpoint)) {}
  std::optional<BlockPointer> head();
  PushResult push(const PushRequest& req);
  std::vector<BlockReference> log();

 private:
  net::Client client_;
};

struct AddStats {
  std::size_t files_written = 0;
  std::size_t files_unchanged = 0;
  std::size_t directories = 0;
  std::vector<std::string> errors;  // "path: message" per skipped entry
};

/// Copies a worktree into `dir`. Files whose content already matches are
/// left untouched; entries absent from the worktree are kept. Per-entry
/// I/O failures are recorded and skipped.
AddStats add(const std::filesystem::path& worktree, DirectoryObject& dir);

/// Writes a tree out as plain files under `dest`.
void materialize(DirectoryObject& dir, const std::filesystem::path& dest);

/// Client working copy of one repository.
class Workspace {
 public:
  Workspace(ObjectContext ctx, net::Endpoint repo);

  /// Reopens the tree at the current repository head (empty when none).
  void checkout_head();
  AddStats add(const std::filesystem::path& worktree);
  /// Records the commit file and persists the tree; the new Version's prev
  /// is the head the tree was checked out from.
  BlockPointer commit(std::string_view message);
  PushResult push();
  /// checkout_head() followed by add(worktree).
  AddStats rebase(const std::filesystem::path& worktree);

  const std::shared_ptr<DirectoryObject>& tree() const { return tree_; }
  const std::optional<BlockPointer>& base() const { return base_; }

 private:
  ObjectContext ctx_;
  RepositoryClient client_;
  std::shared_ptr<DirectoryObject> tree_;
  std::optional<BlockPointer> base_;
  std::optional<BlockPointer> committed_;
};

/// Fetches the head tree into `dest` and returns the head pointer. Throws
/// Errc::not_found for an empty repository or a missing block.
BlockPointer clone(const ObjectContext& ctx, const net::Endpoint& repo,
                   const std::filesystem::path& dest);

std::vector<BlockReference> log(const net::Endpoint& repo);

}  // namespace upss::uvc
