#pragma once

// Benchmark harness for the object layer.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "upss/fsobjects.hpp"

namespace upss::bench {

enum class Workload { make_dir, make_file, read_file, write_file, macro, noop };

Workload parse_workload(std::string_view name);
std::string_view to_string(Workload w);

/// Persist the tree after `interval` or `dirty_ops` operations, whichever
/// comes first.
struct SyncPolicy {
  std::chrono::milliseconds interval{5000};
  std::uint64_t dirty_ops = 15000;
};

struct BenchSpec {
  Workload workload = Workload::make_file;
  std::uint64_t ops = 10000;
  SyncPolicy sync;
  std::size_t population = 1000;   // files created before timing (read/write/macro)
  std::size_t file_size = 4096;
  std::size_t io_size = 4096;      // macro: bytes per read or write
  std::size_t files_per_dir = 1000;
  std::uint64_t seed = 1;
  std::chrono::milliseconds sample_interval{100};
  PaddingMode padding = PaddingMode::random;
};

struct Sample {
  double elapsed_ms = 0;
  std::uint64_t completed = 0;
};

struct BenchResult {
  std::vector<Sample> series;
  std::uint64_t completed = 0;
  std::uint64_t syncs = 0;
  double seconds = 0;
  double ops_per_sec = 0;
  double p50_us = 0, p90_us = 0, p99_us = 0, max_us = 0;
  /// Bytes of file content present when the run finished.
  std::uint64_t content_bytes = 0;
};

/// Runs the workload against a fresh tree in `store`.
BenchResult run(const BenchSpec& spec, StorePtr store);

/// The sequence of file indices a random-access workload visits.
std::vector<std::size_t> op_sequence(const BenchSpec& spec);

/// `elapsed_ms,completed_ops` with one line per sample.
std::string to_csv(const std::vector<Sample>& series);
std::string summary(const BenchSpec& spec, const BenchResult& result);

struct StorageReport {
  std::uint64_t content_bytes = 0;  // s
  std::uint64_t store_bytes = 0;    // s_t, measured
  double ratio = 0;                 // s_t / s (0 when s = 0)
  double predicted_bytes = 0;       // reference curve, not a pass/fail bound
};

/// Reference storage curve: (1.09 + 0.001613 s) s.
double predicted_store_bytes(std::uint64_t content_bytes);
StorageReport storage_report(const BlockStore& store, std::uint64_t content_bytes);

struct Calibration {
  double harness_ns_per_op = 0;   // no-op workload
  double make_file_ns_per_op = 0;  // MakeFile on a memory store
  double ratio = 0;
};

Calibration calibrate(std::uint64_t ops = 20000);

}  // namespace upss::bench
