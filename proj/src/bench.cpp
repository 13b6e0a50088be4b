#include "upss/bench.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "upss/error.hpp"

namespace upss::bench {

namespace {

using Clock = std::chrono::steady_clock;

Bytes random_buffer(std::size_t len, std::mt19937_64& rng) {
  Bytes out(len);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

double percentile(std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0;
  auto idx = static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1) + 0.5);
  return sorted[std::min(idx, sorted.size() - 1)];
}

// Spreads objects over bucket directories so no single directory grows
// without bound.
class Tree {
 public:
  Tree(const ObjectContext& ctx, std::size_t per_dir)
      : root_(DirectoryObject::create(ctx)), per_dir_(per_dir) {}

  DirectoryObject& bucket(std::uint64_t i) {
    auto b = static_cast<std::size_t>(i / per_dir_);
    if (b >= buckets_.size()) {
      while (buckets_.size() <= b) buckets_.push_back(root_->mkdir("b" + std::to_string(buckets_.size())));
    }
    return *buckets_[b];
  }
  DirectoryObject& root() { return *root_; }

 private:
  std::shared_ptr<DirectoryObject> root_;
  std::vector<std::shared_ptr<DirectoryObject>> buckets_;
  std::size_t per_dir_;
};

}  // namespace

Workload parse_workload(std::string_view name) {
  if (name == "makedir" || name == "MakeDir") return Workload::make_dir;
  if (name == "makefile" || name == "MakeFile") return Workload::make_file;
  if (name == "readfile" || name == "ReadFile") return Workload::read_file;
  if (name == "writefile" || name == "WriteFile") return Workload::write_file;
  if (name == "macro") return Workload::macro;
  if (name == "noop") return Workload::noop;
  fail(Errc::invalid_argument, "unknown workload '" + std::string(name) + "'");
}

std::string_view to_string(Workload w) {
  switch (w) {
    case Workload::make_dir: return "MakeDir";
    case Workload::make_file: return "MakeFile";
    case Workload::read_file: return "ReadFile";
    case Workload::write_file: return "WriteFile";
    case Workload::macro: return "macro";
    case Workload::noop: return "noop";
  }
  return "?";
}

std::vector<std::size_t> op_sequence(const BenchSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, spec.population ? spec.population - 1 : 0);
  std::vector<std::size_t> seq(spec.ops);
  for (auto& s : seq) s = pick(rng);
  return seq;
}

BenchResult run(const BenchSpec& spec, StorePtr store) {
  if (spec.files_per_dir == 0) fail(Errc::invalid_argument, "files_per_dir must be positive");
  auto ctx = ObjectContext::make(std::move(store), spec.padding);
  Tree tree(ctx, spec.files_per_dir);
  std::mt19937_64 rng(spec.seed ^ 0x5eedULL);

  const bool random_access = spec.workload == Workload::read_file ||
                             spec.workload == Workload::write_file ||
                             spec.workload == Workload::macro;
  const std::size_t file_size =
      spec.workload == Workload::macro ? std::max(spec.file_size, spec.io_size) : spec.file_size;
  std::vector<std::shared_ptr<FileObject>> files;
  std::vector<std::size_t> sequence;
  if (random_access) {
    if (spec.population == 0) fail(Errc::invalid_argument, "workload needs a file population");
    files.reserve(spec.population);
    for (std::size_t i = 0; i < spec.population; ++i) {
      auto f = tree.bucket(i).create_file("f" + std::to_string(i));
      f->write(0, random_buffer(file_size, rng));
      files.push_back(f);
    }
    tree.root().persist();
    sequence = op_sequence(spec);
  }

  // A pool of random bytes so data generation stays out of the timed path.
  const std::size_t io = spec.workload == Workload::macro ? spec.io_size : file_size;
  Bytes pool = random_buffer(io * 64 + 1, rng);
  std::size_t pool_pos = 0;
  auto next_payload = [&]() {
    ByteView v(pool.data() + pool_pos, io);
    pool_pos = (pool_pos + io + 1) % (pool.size() - io);
    return v;
  };
  std::uniform_int_distribution<std::size_t> offset_pick(0, (file_size - std::min(file_size, io)) / 512);

  BenchResult result;
  std::vector<double> latencies;
  latencies.reserve(spec.ops);
  std::uint64_t dirty = 0;
  const auto start = Clock::now();
  auto last_sync = start;
  auto next_sample = start + spec.sample_interval;
  result.series.push_back({0, 0});

  for (std::uint64_t i = 0; i < spec.ops; ++i) {
    auto t0 = Clock::now();
    switch (spec.workload) {
      case Workload::make_dir:
        tree.bucket(i).mkdir("d" + std::to_string(i));
        break;
      case Workload::make_file:
        tree.bucket(i).create_file("f" + std::to_string(i));
        break;
      case Workload::read_file: {
        auto& f = *files[sequence[i]];
        auto data = f.read(0, f.size());
        if (data.size() != file_size) fail(Errc::integrity, "short read");
        break;
      }
      case Workload::write_file:
        files[sequence[i]]->write(0, next_payload());
        break;
      case Workload::macro: {
        auto& f = *files[sequence[i]];
        for (int k = 0; k < 5; ++k) {
          auto off = offset_pick(rng) * 512;
          auto data = f.read(off, io);
          if (data.size() != io) fail(Errc::integrity, "short read");
          f.write(offset_pick(rng) * 512, next_payload());
        }
        break;
      }
      case Workload::noop:
        break;
    }
    const bool mutating = spec.workload != Workload::read_file && spec.workload != Workload::noop;
    if (mutating) ++dirty;
    auto now = Clock::now();
    if (mutating && (dirty >= spec.sync.dirty_ops || now - last_sync >= spec.sync.interval)) {
      tree.root().persist();
      ++result.syncs;
      dirty = 0;
      now = Clock::now();
      last_sync = now;
    }
    latencies.push_back(std::chrono::duration<double, std::micro>(now - t0).count());
    if (now >= next_sample) {
      result.series.push_back({std::chrono::duration<double, std::milli>(now - start).count(), i + 1});
      next_sample = now + spec.sample_interval;
    }
  }
  auto end = Clock::now();
  if (result.series.back().completed != spec.ops)
    result.series.push_back({std::chrono::duration<double, std::milli>(end - start).count(), spec.ops});
  if (dirty) {
    tree.root().persist();
    ++result.syncs;
  }

  result.completed = spec.ops;
  result.seconds = std::chrono::duration<double>(end - start).count();
  result.ops_per_sec = result.seconds > 0 ? static_cast<double>(spec.ops) / result.seconds : 0;
  std::sort(latencies.begin(), latencies.end());
  result.p50_us = percentile(latencies, 0.50);
  result.p90_us = percentile(latencies, 0.90);
  result.p99_us = percentile(latencies, 0.99);
  result.max_us = latencies.empty() ? 0 : latencies.back();
  result.content_bytes = files.size() * file_size;
  return result;
}

std::string to_csv(const std::vector<Sample>& series) {
  std::ostringstream out;
  out << "elapsed_ms,completed_ops\n";
  out.setf(std::ios::fixed);
  out.precision(3);
  for (const auto& s : series) out << s.elapsed_ms << ',' << s.completed << '\n';
  return out.str();
}

std::string summary(const BenchSpec& spec, const BenchResult& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "workload=" << to_string(spec.workload) << "\n"
      << "ops=" << r.completed << "\n"
      << "seconds=" << r.seconds << "\n"
      << "ops_per_sec=" << r.ops_per_sec << "\n"
      << "p50_us=" << r.p50_us << "\n"
      << "p90_us=" << r.p90_us << "\n"
      << "p99_us=" << r.p99_us << "\n"
      << "max_us=" << r.max_us << "\n"
      << "syncs=" << r.syncs << "\n";
  return out.str();
}

double predicted_store_bytes(std::uint64_t content_bytes) {
  auto s = static_cast<double>(content_bytes);
  return (1.09 + 0.001613 * s) * s;
}

StorageReport storage_report(const BlockStore& store, std::uint64_t content_bytes) {
  auto count = store.block_count();
  if (!count) fail(Errc::unsupported, "store cannot count its blocks");
  StorageReport r;
  r.content_bytes = content_bytes;
  r.store_bytes = *count * store.block_size();
  r.ratio = content_bytes ? static_cast<double>(r.store_bytes) / static_cast<double>(content_bytes) : 0;
  r.predicted_bytes = predicted_store_bytes(content_bytes);
  return r;
}

Calibration calibrate(std::uint64_t ops) {
  BenchSpec spec;
  spec.ops = ops;
  spec.workload = Workload::noop;
  auto noop = run(spec, std::make_shared<MemoryStore>());
  spec.workload = Workload::make_file;
  auto make = run(spec, std::make_shared<MemoryStore>());
  Calibration c;
  c.harness_ns_per_op = noop.seconds * 1e9 / static_cast<double>(ops);
  c.make_file_ns_per_op = make.seconds * 1e9 / static_cast<double>(ops);
  c.ratio = c.make_file_ns_per_op > 0 ? c.harness_ns_per_op / c.make_file_ns_per_op : 0;
  return c;
}

}  // namespace upss::bench
