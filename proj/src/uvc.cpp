#include "upss/uvc.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "upss/error.hpp"

namespace upss::uvc {

namespace fs = std::filesystem;
using net::Frame;

namespace {

constexpr std::uint8_t kAccept = 0x00, kReject = 0x01;
constexpr std::uint8_t kLogPointer = 0x01, kLogName = 0x02;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::io, "cannot write " + path.string());
}

Frame checked(const Frame& resp) {
  if (resp.code != static_cast<std::uint8_t>(net::Status::ok)) net::throw_for_status(resp);
  return resp;
}

}  // namespace

// ---------------------------------------------------------------------------
// Wire encodings

Bytes encode_push_request(const PushRequest& req) {
  ByteWriter w;
  w.raw(encode_pointer(req.proposed));
  if (req.expected_parent) w.raw(req.expected_parent->encode());
  return std::move(w).take();
}

PushRequest decode_push_request(ByteView payload) {
  ByteReader r(payload);
  PushRequest req{decode_pointer(r), std::nullopt};
  if (!r.empty()) req.expected_parent = BlockName::decode(r);
  if (!r.empty()) fail(Errc::malformed, "trailing bytes in push request");
  return req;
}

Bytes encode_push_response(const PushResult& res) {
  ByteWriter w;
  if (res.accepted) {
    w.u8(kAccept);
    return std::move(w).take();
  }
  w.u8(kReject);
  Bytes head = res.head ? encode_pointer(*res.head) : Bytes{};
  w.u16be(static_cast<std::uint16_t>(head.size()));
  w.raw(head);
  w.raw(res.reason);
  return std::move(w).take();
}

PushResult decode_push_response(ByteView payload) {
  ByteReader r(payload);
  PushResult res;
  auto tag = r.u8();
  if (tag == kAccept) {
    if (!r.empty()) fail(Errc::malformed, "trailing bytes in push response");
    res.accepted = true;
    return res;
  }
  if (tag != kReject) fail(Errc::malformed, "invalid push response tag");
  auto len = r.u16be();
  if (len) res.head = decode_pointer(r.raw(len));
  res.reason = to_string(r.rest());
  return res;
}

Bytes encode_log(const std::vector<BlockReference>& entries) {
  ByteWriter w;
  w.u32be(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.readable()) {
      w.u8(kLogPointer);
      w.raw(encode_pointer(e.pointer()));
    } else {
      w.u8(kLogName);
      w.raw(e.name.encode());
    }
  }
  return std::move(w).take();
}

std::vector<BlockReference> decode_log(ByteView payload) {
  ByteReader r(payload);
  auto count = r.u32be();
  if (count > payload.size()) fail(Errc::malformed, "log entry count too large");
  std::vector<BlockReference> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto kind = r.u8();
    if (kind == kLogPointer)
      out.push_back(BlockReference::full(decode_pointer(r)));
    else if (kind == kLogName)
      out.push_back(BlockReference::blind(BlockName::decode(r)));
    else
      fail(Errc::malformed, "invalid log entry kind");
  }
  if (!r.empty()) fail(Errc::malformed, "trailing bytes in log");
  return out;
}

// ---------------------------------------------------------------------------
// Repository

Repository::Repository(StorePtr store, std::optional<fs::path> head_file)
    : store_(std::move(store)), head_file_(std::move(head_file)) {
  if (head_file_ && fs::exists(*head_file_)) {
    auto bytes = read_file(*head_file_);
    if (!bytes.empty()) head_ = decode_pointer(bytes);
    accepted_ = head_ ? history(*head_, *store_).entries.size() : 0;
  }
}

std::optional<BlockPointer> Repository::head() const {
  std::lock_guard lock(mu_);
  return head_;
}

std::uint64_t Repository::accepted() const {
  std::lock_guard lock(mu_);
  return accepted_;
}

void Repository::save_head() const {
  auto tmp = *head_file_;
  tmp += ".tmp";
  write_file(tmp, head_ ? encode_pointer(*head_) : Bytes{});
  fs::rename(tmp, *head_file_);
}

PushResult Repository::push(const PushRequest& req) {
  std::lock_guard lock(mu_);
  auto reject = [&](std::string reason) { return PushResult{false, head_, std::move(reason)}; };

  std::optional<BlockName> head_name;
  if (head_) head_name = head_->name;
  if (req.expected_parent != head_name) return reject("not based on the current head");

  Version v;
  try {
    v = decode_version(req.proposed, *store_);
  } catch (const Error& e) {
    return reject(std::string("cannot read proposed version: ") + e.what());
  }
  if (v.kind != ObjectKind::directory) return reject("proposed version is not a directory");
  if (head_) {
    if (!v.prev || v.prev->name != head_->name) return reject("prev is not the current head");
  } else if (v.prev) {
    return reject("first version must not have a prev");
  }

  auto report = verify_tree(BlockReference::full(req.proposed), *store_, 0);
  if (!report.ok()) {
    const auto& issue = report.issues.front();
    return reject("missing or corrupt block " + issue.name.to_text() + ": " + issue.detail);
  }

  head_ = req.proposed;
  ++accepted_;
  if (head_file_) save_head();
  return PushResult{true, head_, {}};
}

std::vector<BlockReference> Repository::log() const {
  auto head = this->head();
  if (!head) return {};
  auto h = history(*head, *store_);
  if (h.broken_at) fail(Errc::integrity, "history broken at " + h.broken_at->to_text() + ": " + h.error);
  std::vector<BlockReference> out;
  for (auto& e : h.entries) out.push_back(std::move(e.ref));
  return out;
}

net::Handler make_repository_handler(std::shared_ptr<Repository> repo) {
  return [repo = std::move(repo)](const Frame& req) -> std::optional<Frame> {
    switch (static_cast<net::Opcode>(req.code)) {
      case net::Opcode::head: {
        auto head = repo->head();
        return net::ok_response(head ? encode_pointer(*head) : Bytes{});
      }
      case net::Opcode::push:
        return net::ok_response(encode_push_response(repo->push(decode_push_request(req.payload))));
      case net::Opcode::log:
        return net::ok_response(encode_log(repo->log()));
      default:
        return std::nullopt;
    }
  };
}

std::optional<BlockPointer> RepositoryClient::head() {
  auto resp = checked(client_.call(net::Opcode::head, {}));
  if (resp.payload.empty()) return std::nullopt;
  return decode_pointer(resp.payload);
}

PushResult RepositoryClient::push(const PushRequest& req) {
  auto resp = checked(client_.call(net::Opcode::push, encode_push_request(req)));
  return decode_push_response(resp.payload);
}

std::vector<BlockReference> RepositoryClient::log() {
  return decode_log(checked(client_.call(net::Opcode::log, {})).payload);
}

// ---------------------------------------------------------------------------
// Worktrees

AddStats add(const fs::path& worktree, DirectoryObject& dir) {
  AddStats stats;
  auto walk = [&](auto& self, const fs::path& src, DirectoryObject& target) -> void {
    std::vector<fs::directory_entry> items;
    for (const auto& item : fs::directory_iterator(src)) items.push_back(item);
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    for (const auto& item : items) {
      auto name = item.path().filename().string();
      try {
        if (item.is_directory()) {
          std::shared_ptr<DirectoryObject> sub;
          if (target.contains(name) && target.entries().at(name).kind == ObjectKind::directory) {
            sub = target.child(name)->as_directory();
          } else {
            if (target.contains(name)) target.remove(name);
            sub = target.mkdir(name);
          }
          ++stats.directories;
          self(self, item.path(), *sub);
        } else if (item.is_regular_file()) {
          auto bytes = read_file(item.path());
          std::shared_ptr<FileObject> file;
          if (target.contains(name) && target.entries().at(name).kind == ObjectKind::file) {
            file = target.child(name)->as_file();
            if (file->size() == bytes.size() && file->read_all() == bytes) {
              ++stats.files_unchanged;
              continue;
            }
          } else {
            if (target.contains(name)) target.remove(name);
            file = target.create_file(name);
          }
          file->write(0, bytes);
          file->truncate(bytes.size());
          ++stats.files_written;
        }
      } catch (const std::exception& e) {
        stats.errors.push_back(item.path().string() + ": " + e.what());
      }
    }
  };
  walk(walk, worktree, dir);
  return stats;
}

void materialize(DirectoryObject& dir, const fs::path& dest) {
  fs::create_directories(dest);
  for (const auto& name : dir.names()) {
    auto node = dir.child(name);
    if (node->kind() == ObjectKind::directory)
      materialize(*node->as_directory(), dest / name);
    else
      write_file(dest / name, node->as_file()->read_all());
  }
}

Workspace::Workspace(ObjectContext ctx, net::Endpoint repo)
    : ctx_(std::move(ctx)), client_(std::move(repo)) {
  checkout_head();
}

void Workspace::checkout_head() {
  base_ = client_.head();
  tree_ = base_ ? DirectoryObject::open(ctx_, *base_) : DirectoryObject::create(ctx_);
  committed_.reset();
}

AddStats Workspace::add(const fs::path& worktree) { return uvc::add(worktree, *tree_); }

BlockPointer Workspace::commit(std::string_view message) {
  std::shared_ptr<FileObject> meta;
  std::string name(kCommitFile);
  if (tree_->contains(name))
    meta = tree_->child(name)->as_file();
  else
    meta = tree_->create_file(name);
  meta->write(0, as_bytes(message));
  meta->truncate(message.size());
  committed_ = tree_->persist();
  return *committed_;
}

PushResult Workspace::push() {
  if (!committed_) fail(Errc::invalid_argument, "nothing committed");
  PushRequest req{*committed_, std::nullopt};
  if (base_) req.expected_parent = base_->name;
  auto res = client_.push(req);
  if (res.accepted) base_ = committed_;
  return res;
}

AddStats Workspace::rebase(const fs::path& worktree) {
  checkout_head();
  return add(worktree);
}

BlockPointer clone(const ObjectContext& ctx, const net::Endpoint& repo, const fs::path& dest) {
  RepositoryClient client(repo);
  auto head = client.head();
  if (!head) fail(Errc::not_found, "repository has no head");
  auto tree = DirectoryObject::open(ctx, *head);
  materialize(*tree, dest);
  return *head;
}

std::vector<BlockReference> log(const net::Endpoint& repo) {
  return RepositoryClient(repo).log();
}

}  // namespace upss::uvc
