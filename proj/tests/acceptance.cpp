// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "test_util.hpp"
#include "upss/bench.hpp"
#include "upss/caching_store.hpp"
#include "upss/crypto.hpp"
#include "upss/dag.hpp"
#include "upss/error.hpp"
#include "upss/fsobjects.hpp"
#include "upss/netstore.hpp"
#include "upss/uvc.hpp"

using namespace upss;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<BlockName> names_in(const MemoryStore& store) {
  auto names = store.names();
  return {names.begin(), names.end()};
}

// 1. Convergence and dedup of a second identical ingest.
void convergence(Outcome& o) {
  auto t0 = Clock::now();
  auto store = std::make_shared<MemoryStore>();
  auto ctx = ObjectContext::make(store);
  std::mt19937_64 rng(1);
  auto data = test::random_bytes(rng, 1 << 20);
  auto root = DirectoryObject::create(ctx);
  root->create_file("first")->write(0, data);
  root->persist();
  auto before = names_in(*store);

  auto second = root->create_file("second");
  second->write(0, data);
  root->persist();
  auto version = decode_version(*second->pointer(), *store);
  std::set<BlockName> data_names;
  for (const auto& x : version.extents) data_names.insert(x.ref.name);

  std::size_t new_data = 0, new_meta = 0;
  for (const auto& n : names_in(*store)) {
    if (before.count(n)) continue;
    (data_names.count(n) ? new_data : new_meta)++;
  }
  double secs = seconds_since(t0);
  o.detail << "new data blocks " << new_data << ", new meta blocks " << new_meta << ", " << secs << " s";
  o.require(new_data == 0, "0 new data blocks");
  o.require(new_meta <= 3, "<= 3 new meta blocks");
  o.require(secs < 5, "runtime < 5 s");
  o.require(second->read_all() == data, "content");
}

// 2. Guessing exponent and pointer payload size.
void guesses(Outcome& o) {
  auto g = expected_guesses(40, 3984);
  auto ptr = seal(as_bytes("x")).pointer;
  o.detail << "exponent " << g << ", pointer payload " << ptr.payload_size() << " bytes";
  o.require(g == 32191, "exponent 32191");
  o.require(ptr.payload_size() == 80, "80-byte payload");
}

// 3. Random edit sessions against a byte-array oracle.
void round_trip(Outcome& o) {
  auto t0 = Clock::now();
  auto store = std::make_shared<MemoryStore>();
  auto ctx = ObjectContext::make(store);
  std::mt19937_64 rng(3);
  const std::uint64_t max_size = 1 << 20;
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    auto target = rng() % (max_size + 1);
    auto f = FileObject::create(ctx);
    Bytes model;
    for (int step = 0, steps = 1 + rng() % 8; step < steps; ++step) {
      switch (rng() % 3) {
        case 0: {
          auto off = rng() % (target + 1);
          auto len = rng() % (target - off + 1);
          auto bytes = test::random_bytes(rng, len);
          f->write(off, bytes);
          // An empty write does not extend the file.
          if (len && model.size() < off + len) model.resize(off + len, 0);
          std::copy(bytes.begin(), bytes.end(), model.begin() + static_cast<std::ptrdiff_t>(off));
          break;
        }
        case 1: {
          auto len = rng() % (target + 1);
          f->truncate(len);
          model.resize(len, 0);
          break;
        }
        default: {
          auto room = model.size() < target ? target - model.size() : 0;
          auto bytes = test::random_bytes(rng, rng() % (room + 1));
          f->append(bytes);
          model.insert(model.end(), bytes.begin(), bytes.end());
        }
      }
      if (rng() % 3 == 0) f->persist();
    }
    auto reopened = FileObject::open(ctx, f->persist());
    if (reopened->read_all() != model || f->read_all() != model) ++mismatches;
  }
  double secs = seconds_since(t0);
  o.detail << "1000 files, " << mismatches << " mismatches, " << secs << " s";
  o.require(mismatches == 0, "no mismatches");
  o.require(secs < 60, "runtime < 60 s");
}

// 4. One-byte edit of a 100-block file.
void cow_minimality(Outcome& o) {
  auto store = std::make_shared<MemoryStore>();
  auto ctx = ObjectContext::make(store);
  std::mt19937_64 rng(4);
  auto data = test::random_bytes(rng, 100 * 4096);
  auto f = FileObject::create(ctx);
  f->write(0, data);
  auto old_ptr = f->persist();
  auto old_version = decode_version(old_ptr, *store);
  auto before = names_in(*store);

  f->write(37 * 4096 + 1000, Bytes{static_cast<std::uint8_t>(data[37 * 4096 + 1000] ^ 0xff)});
  auto new_ptr = f->persist();
  auto new_version = decode_version(new_ptr, *store);
  std::set<BlockName> data_names;
  for (const auto& x : new_version.extents) data_names.insert(x.ref.name);
  std::size_t new_data = 0, new_meta = 0;
  for (const auto& n : names_in(*store)) {
    if (before.count(n)) continue;
    (data_names.count(n) ? new_data : new_meta)++;
  }
  // Levels of continuation nodes below the head.
  std::size_t depth = 0;
  for (std::size_t cap = manifest_fanout(4096); cap < 100; cap *= manifest_fanout(4096)) ++depth;
  std::size_t bound = 1 + (depth + 2);

  bool old_intact = FileObject::open(ctx, old_ptr)->read_all() == data;
  std::size_t pos = 0;
  for (const auto& x : old_version.extents) {
    auto bytes = read_extent(x, *store);
    old_intact &= std::equal(bytes.begin(), bytes.end(), data.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += x.length;
  }
  o.detail << "new data blocks " << new_data << ", total new " << new_data + new_meta
           << " (bound " << bound << ", tree depth " << depth << ")";
  o.require(new_data == 1, "exactly 1 new data block");
  o.require(new_data + new_meta <= bound, "total within bound");
  o.require(old_intact, "old pointers resolve to original bytes");
}

// 5. Caching store against a 10 ms far store, plus a crash variant.
void caching(Outcome& o) {
  const int n = 5000;
  std::mt19937_64 rng(5);
  std::vector<Bytes> blocks;
  blocks.reserve(n);
  for (int i = 0; i < n; ++i) blocks.push_back(seal(test::random_bytes(rng, 64)).block);

  auto direct_far = std::make_shared<LatencyStore>(std::make_shared<MemoryStore>(), std::chrono::milliseconds(10));
  auto t0 = Clock::now();
  for (const auto& b : blocks) direct_far->put(b);
  double direct = seconds_since(t0);

  test::TempDir dir;
  auto far_inner = std::make_shared<MemoryStore>();
  auto far = std::make_shared<LatencyStore>(far_inner, std::chrono::milliseconds(10));
  auto near = std::make_shared<MemoryStore>();
  CachingOptions opts;
  opts.journal_path = dir / "journal";
  opts.drain_concurrency = 16;
  opts.drain_batch = 256;
  double cached = 0;
  std::size_t verified = 0;
  {
    CachingStore store(near, far, opts);
    t0 = Clock::now();
    std::vector<BlockName> names;
    names.reserve(n);
    for (const auto& b : blocks) names.push_back(store.put(b));
    cached = seconds_since(t0);
    o.require(store.flush(std::chrono::minutes(2)), "drain completes");
    near->clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        if (store.get(names[i]) == blocks[i]) ++verified;
      } catch (const Error&) {
      }
    }
  }
  double speedup = cached > 0 ? direct / cached : 0;

  // Crash variant: the child journals every block, then dies before draining.
  std::size_t recovered = 0;
  const int crash_n = 500;
  pid_t pid = ::fork();
  if (pid == 0) {
    CachingOptions c;
    c.journal_path = dir / "crash-journal";
    c.background_drain = false;
    CachingStore store(std::make_shared<MemoryStore>(), std::make_shared<FileStore>(dir / "crash-far"), c);
    for (int i = 0; i < crash_n; ++i) store.put(blocks[i]);
    ::kill(::getpid(), SIGKILL);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  {
    CachingOptions c;
    c.journal_path = dir / "crash-journal";
    c.background_drain = false;
    auto crash_far = std::make_shared<FileStore>(dir / "crash-far");
    CachingStore store(std::make_shared<MemoryStore>(), crash_far, c);
    store.flush(std::chrono::minutes(1));
    for (int i = 0; i < crash_n; ++i) {
      try {
        crash_far->get(BlockName(HashAlg::sha3_512, hash(HashAlg::sha3_512, blocks[i])));
        ++recovered;
      } catch (const Error&) {
      }
    }
  }
  o.detail << "direct " << direct << " s, cached " << cached << " s (" << speedup << "x), "
           << verified << "/" << n << " verified after drain+clear, crash: " << recovered << "/"
           << crash_n << " recovered";
  o.require(speedup >= 10, ">= 10x");
  o.require(verified == static_cast<std::size_t>(n), "all blocks readable");
  o.require(WIFSIGNALED(status), "child killed");
  o.require(recovered == crash_n, "zero lost blocks");
}

// 6. Redaction and diff at the listing's scale.
void redaction(Outcome& o) {
  auto store = std::make_shared<MemoryStore>();
  auto ctx = ObjectContext::make(store);
  std::mt19937_64 rng(6);
  Bytes data(4 * 4096);
  for (auto& b : data) b = static_cast<std::uint8_t>('A' + rng() % 26);
  auto f = FileObject::create(ctx);
  f->write(0, data);
  auto r = f->redact(4096, 8191);
  Bytes edit(16);
  for (auto& b : edit) b = static_cast<std::uint8_t>('a' + rng() % 26);
  r->write(r->size() - 16, edit);
  r->append(as_bytes("added bytes"));
  auto hunks = diff(*f, *r);

  bool shape = hunks.size() == 3 && hunks[0].kind == DiffHunk::Kind::redacted &&
               hunks[0].a_offset == 4096 && hunks[0].a_len == 4096 &&
               hunks[1].kind == DiffHunk::Kind::replace && hunks[1].a_offset == 16368 &&
               hunks[1].a_len == 16 && hunks[2].kind == DiffHunk::Kind::add &&
               hunks[2].b_offset == 16384 && hunks[2].b_len == 11;
  bool read_errors = false;
  try {
    r->read(5000, 10);
  } catch (const Error& e) {
    read_errors = e.code() == Errc::redacted;
  }
  auto report = verify_tree(BlockReference::full(r->persist()), *store);
  o.detail << hunks.size() << " hunks";
  o.require(shape, "three hunks: Redacted@4096, replace 16@16368, add 11@16384");
  o.require(read_errors, "redacted read errors");
  o.require(report.ok(), "verify passes");
}

// 7. Two clients racing to push over loopback.
void uvc_race(Outcome& o) {
  auto t0 = Clock::now();
  auto blocks = std::make_shared<MemoryStore>();
  auto repo = std::make_shared<uvc::Repository>(blocks);
  net::Server server({"127.0.0.1", 0}, {net::make_store_handler(blocks), uvc::make_repository_handler(repo)});
  auto ctx = [&] { return ObjectContext::make(std::make_shared<net::RemoteStore>(server.endpoint())); };
  test::TempDir dir;
  auto put = [](const fs::path& p, std::string_view s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << s;
  };
  put(dir / "seed/README", "project\n");
  uvc::Workspace seed(ctx(), server.endpoint());
  seed.add(dir / "seed");
  seed.commit("seed");
  seed.push();

  uvc::Workspace a(ctx(), server.endpoint()), b(ctx(), server.endpoint());
  put(dir / "a/README", "project\n");
  put(dir / "a/a.txt", "from a\n");
  put(dir / "b/README", "project\n");
  put(dir / "b/b.txt", "from b\n");
  a.add(dir / "a");
  a.commit("a");
  b.add(dir / "b");
  b.commit("b");

  std::optional<uvc::PushResult> ra, rb;
  std::thread ta([&] { ra = a.push(); });
  std::thread tb([&] { rb = b.push(); });
  ta.join();
  tb.join();
  int accepted = ra->accepted + rb->accepted;
  auto& loser = ra->accepted ? b : a;
  auto& loser_result = ra->accepted ? *rb : *ra;
  bool reject_has_head = !loser_result.accepted && loser_result.head == repo->head();

  loser.rebase(dir / (ra->accepted ? "b" : "a"));
  loser.commit("rebased");
  bool second_accepted = loser.push().accepted;

  auto head = *repo->head();
  auto cloned = uvc::clone(ctx(), server.endpoint(), dir / "clone");
  auto tree = DirectoryObject::open(ctx(), cloned);
  uvc::add(dir / "clone", *tree);
  bool identical = tree->persist() == head;
  bool both_files = fs::exists(dir / "clone/a.txt") && fs::exists(dir / "clone/b.txt");
  double secs = seconds_since(t0);
  o.detail << accepted << " of 2 accepted, rebase push " << (second_accepted ? "accepted" : "rejected")
           << ", " << secs << " s";
  o.require(accepted == 1, "exactly one accepted");
  o.require(reject_has_head, "reject carries current head");
  o.require(second_accepted, "push after rebase accepted");
  o.require(identical && both_files, "clone re-persists to the same root");
  o.require(secs < 10, "runtime < 10 s");
}

// 8. A server that substitutes blocks.
void byzantine(Outcome& o) {
  auto backing = std::make_shared<MemoryStore>();
  auto honest = net::make_store_handler(backing);
  std::mt19937_64 rng(8);
  std::atomic<int> mode{0};
  net::Handler liar = [&](const net::Frame& req) -> std::optional<net::Frame> {
    auto resp = honest(req);
    if (!resp || resp->code != 0 || req.code != static_cast<std::uint8_t>(net::Opcode::get)) return resp;
    switch (mode.load()) {
      case 0: resp->payload[rng() % resp->payload.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255); break;
      case 1: resp->payload = seal(test::random_bytes(rng, 100)).block; break;
      default: resp->payload.resize(resp->payload.size() / 2);
    }
    return resp;
  };
  net::Server server({"127.0.0.1", 0}, {liar});
  net::RemoteStore remote(server.endpoint());
  int detected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto block = seal(test::random_bytes(rng, 200)).block;
    auto name = remote.put(block);
    mode = trial % 3;
    try {
      remote.get(name);
    } catch (const Error& e) {
      if (e.code() == Errc::integrity) ++detected;
    }
  }
  o.detail << detected << "/100 substitutions detected";
  o.require(detected == 100, "100/100");
}

// 9. Benchmark harness accounting and storage report.
void bench_harness(Outcome& o) {
  for (auto w : {bench::Workload::make_file, bench::Workload::make_dir, bench::Workload::read_file,
                 bench::Workload::write_file}) {
    bench::BenchSpec spec;
    spec.workload = w;
    spec.ops = 100000;
    auto r = bench::run(spec, std::make_shared<MemoryStore>());
    bool monotone = !r.series.empty() && r.series.front().completed == 0;
    for (std::size_t i = 1; i < r.series.size(); ++i)
      monotone &= r.series[i].completed > r.series[i - 1].completed &&
                  r.series[i].elapsed_ms >= r.series[i - 1].elapsed_ms;
    bool exact = r.completed == spec.ops && r.series.back().completed == spec.ops;
    o.detail << bench::to_string(w) << " " << static_cast<long>(r.ops_per_sec) << " ops/s; ";
    o.require(monotone, std::string(bench::to_string(w)) + " monotone");
    o.require(exact, std::string(bench::to_string(w)) + " exact count");
  }
  auto store = std::make_shared<MemoryStore>();
  auto f = FileObject::create(ObjectContext::make(store));
  std::mt19937_64 rng(9);
  f->write(0, test::random_bytes(rng, 1 << 20));
  f->persist();
  auto report = bench::storage_report(*store, 1 << 20);
  o.detail << "1 MiB: s_t/s = " << report.ratio;
  o.require(report.store_bytes >= report.content_bytes, "s_t >= s");
  o.require(report.ratio <= 2.0, "s_t <= 2 s");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"convergent dedup of a second 1 MiB ingest", convergence},
      {"guessing exponent and pointer size", guesses},
      {"1000-file random round trip", round_trip},
      {"copy-on-write minimality", cow_minimality},
      {"caching store speedup and crash recovery", caching},
      {"redaction and diff", redaction},
      {"version control push serialization", uvc_race},
      {"byzantine store detection", byzantine},
      {"benchmark harness accounting", bench_harness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": "
              << o.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
