#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"
#include "test_vectors.hpp"
#include "upss/error.hpp"
#include "upss/fsobjects.hpp"

using namespace upss;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io;
}

struct Env {
  std::shared_ptr<MemoryStore> store = std::make_shared<MemoryStore>();
  ObjectContext ctx;
  explicit Env(PaddingMode padding = PaddingMode::random) : ctx(ObjectContext::make(store, padding)) {}
  std::uint64_t blocks() const { return *store->block_count(); }
};

Bytes text(std::string_view s) { return Bytes(s.begin(), s.end()); }

Bytes alnum(std::mt19937_64& rng, std::size_t n) {
  static const char set[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(set[rng() % 36]);
  return out;
}

/// Reference model for a file's bytes.
void model_write(Bytes& m, std::uint64_t off, ByteView data) {
  if (data.empty()) return;
  if (m.size() < off + data.size()) m.resize(off + data.size(), 0);
  std::copy(data.begin(), data.end(), m.begin() + static_cast<std::ptrdiff_t>(off));
}

}  // namespace

TEST(Blob, MatchesByteArrayModel) {
  Env env;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    auto f = FileObject::create(env.ctx);
    Bytes model;
    for (int step = 0; step < 40; ++step) {
      switch (rng() % 6) {
        case 0:
        case 1: {
          auto off = model.empty() ? 0 : rng() % (model.size() + 9000);
          auto data = test::random_bytes(rng, rng() % 10000);
          f->write(off, data);
          model_write(model, off, data);
          break;
        }
        case 2: {
          auto data = test::random_bytes(rng, rng() % 5000);
          f->append(data);
          model.insert(model.end(), data.begin(), data.end());
          break;
        }
        case 3: {
          auto len = rng() % (model.size() + 5000);
          f->truncate(len);
          model.resize(len, 0);
          break;
        }
        case 4:
          f->persist();
          if (rng() % 2) f = FileObject::open(env.ctx, *f->pointer());
          break;
        default:
          if (!model.empty()) {
            auto off = rng() % model.size();
            auto len = rng() % (model.size() - off + 1);
            ASSERT_EQ(f->read(off, len), Bytes(model.begin() + off, model.begin() + off + len));
          }
      }
      ASSERT_EQ(f->size(), model.size());
    }
    ASSERT_EQ(f->read_all(), model);
    auto reopened = FileObject::open(env.ctx, f->persist());
    ASSERT_EQ(reopened->read_all(), model);
  }
}

TEST(Blob, SparseWriteZeroFills) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->write(10000, text("tail"));
  EXPECT_EQ(f->size(), 10004u);
  EXPECT_EQ(f->read(0, 10000), Bytes(10000, 0));
  auto g = FileObject::open(env.ctx, f->persist());
  EXPECT_EQ(g->read(9998, 6), (Bytes{0, 0, 't', 'a', 'i', 'l'}));
}

TEST(Blob, EmptyWriteDoesNotExtend) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(text("abc"));
  f->persist();
  f->write(100, {});
  EXPECT_EQ(f->size(), 3u);
  EXPECT_FALSE(f->dirty());
}

TEST(Blob, TruncateThenGrowReadsZeros) {
  Env env;
  std::mt19937_64 rng(2);
  auto f = FileObject::create(env.ctx);
  auto data = test::random_bytes(rng, 3 * 4096);
  f->write(0, data);
  f->persist();
  f->truncate(5000);
  f->truncate(9000);
  EXPECT_EQ(f->read(0, 5000), Bytes(data.begin(), data.begin() + 5000));
  EXPECT_EQ(f->read(5000, 4000), Bytes(4000, 0));
  auto g = FileObject::open(env.ctx, f->persist());
  EXPECT_EQ(g->read(4990, 20), f->read(4990, 20));
}

TEST(Blob, ReadPastEnd) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(text("abc"));
  EXPECT_EQ(code_of([&] { f->read(2, 2); }), Errc::out_of_range);
  EXPECT_TRUE(f->read(3, 0).empty());
}

TEST(Persist, EmptyFile) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(text("gone"));
  f->persist();
  f->truncate(0);
  auto v = decode_version(f->persist(), *env.store);
  EXPECT_EQ(v.size, 0u);
  EXPECT_TRUE(v.extents.empty());
  ASSERT_TRUE(v.prev);
}

TEST(Persist, CopyOnWriteMinimality) {
  Env env;
  std::mt19937_64 rng(3);
  auto f = FileObject::create(env.ctx);
  auto data = test::random_bytes(rng, 100 * 4096);
  f->write(0, data);
  auto first = f->persist();
  auto before = env.blocks();
  f->write(50 * 4096 + 7, text("X"));
  auto second = f->persist();
  auto v1 = decode_version(first, *env.store), v2 = decode_version(second, *env.store);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < 100; ++i) changed += v1.extents[i].ref != v2.extents[i].ref;
  EXPECT_EQ(changed, 1u);
  EXPECT_LE(env.blocks() - before, 1u + 4u);  // data + head + up to 3 continuation nodes
  EXPECT_EQ(FileObject::open(env.ctx, first)->read_all(), data);
  EXPECT_EQ(v2.prev, BlockReference::full(first));
}

TEST(Persist, KDirtyRegionsMakeKDataBlocks) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Env env;
    auto f = FileObject::create(env.ctx);
    f->write(0, test::random_bytes(rng, 40 * 4096));
    auto base = decode_version(f->persist(), *env.store);
    std::set<std::uint64_t> dirty;
    for (int i = 0, n = 1 + rng() % 10; i < n; ++i) {
      auto off = rng() % (40 * 4096 - 100);
      auto len = 1 + rng() % 100;
      f->write(off, test::random_bytes(rng, len));
      for (auto b = off / 4096; b <= (off + len - 1) / 4096; ++b) dirty.insert(b);
    }
    auto v = decode_version(f->persist(), *env.store);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 40; ++i) changed += base.extents[i].ref != v.extents[i].ref;
    EXPECT_EQ(changed, dirty.size());
  }
}

TEST(Persist, IdempotentWhenClean) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(text("stable"));
  auto p = f->persist();
  auto n = env.blocks();
  EXPECT_EQ(f->persist(), p);
  EXPECT_EQ(f->snapshot().pointer, p);
  EXPECT_EQ(env.blocks(), n);
}

TEST(Persist, FailureLeavesObjectDirty) {
  auto inner = std::make_shared<MemoryStore>();
  auto faulty = std::make_shared<test::FaultyStore>(inner);
  auto ctx = ObjectContext::make(faulty);
  auto f = FileObject::create(ctx);
  f->append(text("pending"));
  faulty->fail_puts = true;
  EXPECT_EQ(code_of([&] { f->persist(); }), Errc::io);
  EXPECT_TRUE(f->dirty());
  faulty->fail_puts = false;
  auto p = f->persist();
  EXPECT_FALSE(f->dirty());
  EXPECT_EQ(FileObject::open(ctx, p)->read_all(), text("pending"));
}

TEST(Persist, SecondIngestDedupsData) {
  Env env;
  std::mt19937_64 rng(5);
  auto data = test::random_bytes(rng, 1 << 20);
  auto root = DirectoryObject::create(env.ctx);
  root->create_file("a")->write(0, data);
  root->persist();
  auto before = env.blocks();
  root->create_file("b")->write(0, data);
  root->persist();
  EXPECT_LE(env.blocks() - before, 3u);
}

TEST(Directory, CreateLookupAndErrors) {
  Env env;
  auto root = DirectoryObject::create(env.ctx);
  auto docs = root->mkdir("docs");
  auto f = docs->create_file("x.txt");
  EXPECT_EQ(root->lookup("docs/x.txt"), f);
  EXPECT_EQ(root->lookup("/docs//x.txt"), f);
  EXPECT_EQ(root->lookup(""), root);
  EXPECT_EQ(code_of([&] { docs->create_file("x.txt"); }), Errc::already_exists);
  EXPECT_EQ(code_of([&] { docs->mkdir("x.txt"); }), Errc::already_exists);
  EXPECT_EQ(code_of([&] { root->lookup("docs/missing"); }), Errc::not_found);
  EXPECT_EQ(code_of([&] { root->lookup("docs/x.txt/deeper"); }), Errc::not_found);
  for (const std::string& bad : std::vector<std::string>{"", ".", "..", "a/b", std::string("a\0b", 3), std::string(256, 'n')})
    EXPECT_EQ(code_of([&] { root->create_file(bad); }), Errc::invalid_argument) << bad.size();
  EXPECT_NO_THROW(root->create_file(std::string(255, 'n')));
  root->remove("docs");
  EXPECT_FALSE(root->contains("docs"));
  EXPECT_EQ(code_of([&] { root->remove("docs"); }), Errc::not_found);
}

TEST(Directory, HierarchyRoundTrip) {
  Env env;
  auto root = DirectoryObject::create(env.ctx);
  auto home = root->mkdir("home");
  auto alice = home->mkdir("alice");
  auto bob = home->mkdir("bob");
  alice->create_file("notes.txt")->append(text("alice's notes"));
  bob->create_file("todo")->append(text("1. ship"));
  root->mkdir("etc")->create_file("hosts")->append(text("127.0.0.1 localhost\n"));
  auto ptr = root->persist();

  auto reopened = DirectoryObject::open(env.ctx, ptr);
  EXPECT_EQ(reopened->names(), (std::vector<std::string>{"etc", "home"}));
  EXPECT_EQ(reopened->lookup("home/alice/notes.txt")->as_file()->read_all(), text("alice's notes"));
  EXPECT_EQ(reopened->lookup("home/bob/todo")->as_file()->read_all(), text("1. ship"));
  // Any directory can serve as a root.
  auto sub = DirectoryObject::open(env.ctx, *reopened->lookup("home")->pointer());
  EXPECT_EQ(sub->lookup("alice/notes.txt")->as_file()->read_all(), text("alice's notes"));
  EXPECT_TRUE(verify_tree(BlockReference::full(ptr), *env.store).ok());
}

TEST(Directory, UpdaterPropagatesToRoot) {
  Env env;
  auto root = DirectoryObject::create(env.ctx);
  auto leaf = root->mkdir("a")->mkdir("b")->create_file("leaf");
  leaf->append(text("v1"));
  auto old_root = root->persist();
  EXPECT_FALSE(root->dirty());

  leaf->write(0, text("v2"));
  EXPECT_TRUE(root->dirty());
  auto leaf_ptr = leaf->persist();
  auto b = root->lookup("a/b")->as_directory();
  EXPECT_EQ(b->entries().at("leaf").pointer, leaf_ptr);
  EXPECT_TRUE(b->dirty());
  auto new_root = root->persist();
  EXPECT_NE(new_root, old_root);

  auto fresh = DirectoryObject::open(env.ctx, new_root);
  EXPECT_EQ(fresh->lookup("a/b/leaf")->as_file()->read_all(), text("v2"));
  auto old = DirectoryObject::open(env.ctx, old_root);
  EXPECT_EQ(old->lookup("a/b/leaf")->as_file()->read_all(), text("v1"));
}

TEST(Directory, OrderInsensitive) {
  std::mt19937_64 rng(6);
  std::vector<std::string> names;
  for (int i = 0; i < 30; ++i) names.push_back("f" + std::to_string(rng() % 1000000));
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::optional<BlockPointer> expected;
  for (int trial = 0; trial < 5; ++trial) {
    Env env(PaddingMode::deterministic);
    std::shuffle(names.begin(), names.end(), rng);
    auto root = DirectoryObject::create(env.ctx);
    for (const auto& n : names) root->create_file(n)->append(text(n));
    auto p = root->persist();
    if (expected)
      EXPECT_EQ(p, *expected);
    else
      expected = p;
  }
}

TEST(Directory, Golden) {
  Env env(PaddingMode::deterministic);
  auto root = DirectoryObject::create(env.ctx);
  auto f = root->create_file("x.txt");
  f->append(text("This is some file content!\n"));
  auto p = root->persist();
  EXPECT_EQ(pointer_to_hex(*f->pointer()), test::kSampleVersionPointer);
  EXPECT_EQ(to_hex(root->blob().read_all()), test::kDirectoryContent);
  EXPECT_EQ(pointer_to_hex(p), test::kDirectoryVersionPointer);
}

TEST(Directory, CodecRejectsMalformed) {
  auto good = from_hex(test::kDirectoryContent);
  EXPECT_EQ(decode_directory(good).size(), 1u);
  auto extra = good;
  extra.push_back(0);
  EXPECT_EQ(code_of([&] { decode_directory(extra); }), Errc::malformed);
  auto kind = good;
  kind[7] = 0x05;
  EXPECT_EQ(code_of([&] { decode_directory(kind); }), Errc::malformed);
  auto name = good;
  name[2] = '/';
  EXPECT_EQ(code_of([&] { decode_directory(name); }), Errc::malformed);
  auto ptr = pointer_from_hex(test::kSamplePointer);
  EXPECT_EQ(code_of([&] { encode_directory({{"b", ObjectKind::file, ptr}, {"a", ObjectKind::file, ptr}}); }),
            Errc::invalid_argument);
}

TEST(Directory, LinkSharedPointer) {
  Env env;
  auto alice = DirectoryObject::create(env.ctx);
  auto shared = alice->create_file("shared");
  shared->append(text("original"));
  auto snap = shared->snapshot();
  shared->write(0, text("modified"));
  auto after = shared->snapshot();
  EXPECT_NE(snap.pointer, after.pointer);
  EXPECT_EQ(snap.name.rfind("sha3-512:", 0), 0u);
  EXPECT_EQ(pointer_from_hex(snap.pointer_hex), snap.pointer);

  auto bob = DirectoryObject::create(env.ctx);
  bob->link("from-alice", ObjectKind::file, snap.pointer);
  auto p = bob->persist();
  EXPECT_EQ(DirectoryObject::open(env.ctx, p)->lookup("from-alice")->as_file()->read_all(), text("original"));
}

TEST(Snapshot, HistoryGrows) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(text("a"));
  f->persist();
  f->append(text("b"));
  f->persist();
  f->append(text("c"));
  auto h = f->history();
  ASSERT_EQ(h.entries.size(), 3u);
  EXPECT_EQ(h.entries[0].version->size, 3u);
  EXPECT_EQ(h.entries[2].version->size, 1u);
}

// ---------------------------------------------------------------------------
// Redaction and diff

namespace {

struct Listing {
  Env env;
  std::mt19937_64 rng{42};
  std::shared_ptr<FileObject> original;
  std::shared_ptr<FileObject> redacted;
  Bytes data;
  Bytes edit;
  Bytes extra;

  Listing() {
    original = FileObject::create(env.ctx);
    data = alnum(rng, 4 * 4096);
    original->write(0, data);
    redacted = original->redact(4096, 8191);
    edit = data;
    edit.resize(16);
    std::copy(data.end() - 16, data.end(), edit.begin());
    for (auto& c : edit) c = static_cast<std::uint8_t>(std::tolower(c) == c ? '#' : std::tolower(c));
    redacted->write(redacted->size() - 16, edit);
    extra = text("added bytes");
    redacted->append(extra);
  }
};

}  // namespace

TEST(Redact, BlindsWholeBlocks) {
  Listing l;
  l.redacted->persist();
  auto v = *l.redacted->blob().base();
  auto orig = decode_version(*l.original->pointer(), *l.env.store);
  ASSERT_EQ(v.extents.size(), 5u);
  EXPECT_TRUE(v.extents[0].ref.readable());
  EXPECT_FALSE(v.extents[1].ref.readable());
  EXPECT_TRUE(v.extents[2].ref.readable());
  EXPECT_EQ(v.extents[1].ref.name, orig.extents[1].ref.name);
  EXPECT_EQ(code_of([&] { l.redacted->read(4096, 1); }), Errc::redacted);
  EXPECT_EQ(code_of([&] { l.redacted->read(4000, 200); }), Errc::redacted);
  EXPECT_EQ(l.redacted->read(0, 4096), Bytes(l.data.begin(), l.data.begin() + 4096));

  auto ptr = l.redacted->persist();
  EXPECT_TRUE(verify_tree(BlockReference::full(ptr), *l.env.store).ok());
  auto h = history(ptr, *l.env.store);
  ASSERT_EQ(h.entries.size(), 3u);  // edited, redacted, blind original
  EXPECT_FALSE(h.entries[2].version);
  EXPECT_EQ(h.entries[2].ref.name, l.original->pointer()->name);
}

TEST(Redact, WholeFileAndBounds) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(Bytes(5000, 1));
  auto r = f->redact(0, 4999);
  EXPECT_EQ(r->size(), 5000u);
  for (const auto& x : r->blob().base()->extents) EXPECT_FALSE(x.ref.readable());
  EXPECT_EQ(code_of([&] { f->redact(0, 5000); }), Errc::out_of_range);
  EXPECT_EQ(code_of([&] { f->redact(10, 9); }), Errc::out_of_range);
}

TEST(Diff, ListingScenario) {
  Listing l;
  auto hunks = diff(*l.original, *l.redacted);
  ASSERT_EQ(hunks.size(), 3u);
  EXPECT_EQ(hunks[0].kind, DiffHunk::Kind::redacted);
  EXPECT_EQ(hunks[0].a_offset, 4096u);
  EXPECT_EQ(hunks[0].a_len, 4096u);
  EXPECT_EQ(hunks[1].kind, DiffHunk::Kind::replace);
  EXPECT_EQ(hunks[1].a_offset, 16368u);
  EXPECT_EQ(hunks[1].a_len, 16u);
  EXPECT_EQ(hunks[1].b_bytes, l.edit);
  EXPECT_EQ(hunks[2].kind, DiffHunk::Kind::add);
  EXPECT_EQ(hunks[2].b_offset, 16384u);
  EXPECT_EQ(hunks[2].b_len, 11u);
  EXPECT_EQ(hunks[2].b_bytes, l.extra);

  auto rendered = render_diff(hunks);
  auto old16 = std::string(l.data.end() - 16, l.data.end());
  auto expected = "--- a/file\n+++ b/file\n\n@@ -4096,4096 +4096,4096 @@\n+++ Redacted\n\n"
                  "@@ -16368,16 +16368,16 @@\n- \"" + old16 + "\"\n+ \"" +
                  std::string(l.edit.begin(), l.edit.end()) +
                  "\"\n\n@@ -16384,0 +16384,11 @@\n+ \"added bytes\"\n";
  EXPECT_EQ(rendered, expected);
}

TEST(Diff, IdenticalAndBlindEqual) {
  Env env;
  auto f = FileObject::create(env.ctx);
  f->append(Bytes(9000, 3));
  EXPECT_TRUE(diff(*f, *f).empty());
  auto r1 = f->redact(0, 100);
  auto r2 = f->redact(5, 6);
  EXPECT_TRUE(diff(*r1, *r2).empty());
}

TEST(Diff, Removal) {
  Env env;
  auto a = FileObject::create(env.ctx);
  a->append(text("hello world"));
  auto b = FileObject::create(env.ctx);
  b->append(text("hello"));
  auto hunks = diff(*a, *b);
  ASSERT_EQ(hunks.size(), 1u);
  EXPECT_EQ(hunks[0].kind, DiffHunk::Kind::remove);
  EXPECT_EQ(hunks[0].a_bytes, text(" world"));
  EXPECT_EQ(render_diff(hunks), "--- a/file\n+++ b/file\n\n@@ -5,6 +5,0 @@\n- \" world\"\n");
}

TEST(Diff, ApplyingHunksReproducesReadableBytes) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    Env env;
    auto original = FileObject::create(env.ctx);
    auto data = test::random_bytes(rng, 1 + rng() % (6 * 4096));
    original->write(0, data);
    auto s = rng() % data.size();
    auto e = s + rng() % (data.size() - s);
    auto other = original->redact(s, e);
    // Edits outside the blinded blocks.
    for (int i = 0; i < 3; ++i) {
      auto off = rng() % (other->size() + 100);
      auto len = 1 + rng() % 300;
      bool blind = false;
      for (auto b = off / 4096; b <= (off + len - 1) / 4096; ++b)
        blind |= b >= s / 4096 && b <= e / 4096 && b * 4096 < data.size();
      if (!blind) other->write(off, test::random_bytes(rng, len));
    }
    if (rng() % 3 == 0 && other->size() > (e / 4096 + 1) * 4096) other->truncate((e / 4096 + 1) * 4096);

    auto hunks = diff(*original, *other);
    Bytes patched = data;
    for (const auto& h : hunks) {
      if (h.kind == DiffHunk::Kind::replace || h.kind == DiffHunk::Kind::add)
        model_write(patched, h.b_offset, h.b_bytes);
      if (h.kind == DiffHunk::Kind::remove) patched.resize(h.b_offset);
    }
    ASSERT_EQ(patched.size(), other->size());
    for (std::uint64_t b = 0; b * 4096 < other->size(); ++b) {
      auto len = std::min<std::uint64_t>(4096, other->size() - b * 4096);
      try {
        auto bytes = other->read(b * 4096, len);
        ASSERT_EQ(bytes, Bytes(patched.begin() + b * 4096, patched.begin() + b * 4096 + len)) << trial;
      } catch (const Error& err) {
        ASSERT_EQ(err.code(), Errc::redacted);
      }
    }
  }
}
