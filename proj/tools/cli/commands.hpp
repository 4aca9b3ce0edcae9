#pragma once

// Command implementations behind the `bnn` executable. Each command is a
// plain function so tests can drive the end-to-end flow in-process.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bnn/engine.hpp"
#include "bnn/error.hpp"
#include "bnn/mapper.hpp"
#include "bnn/modelio.hpp"
#include "bnn/profiler.hpp"

namespace bnn::cli {

/// Process exit code for each error category (0 is success, 1 is usage).
int exit_code(ErrorCode code) noexcept;

struct EngineFlags {
  std::size_t threads = default_worker_count();
  std::size_t window_rows = 1;
  bool fuse_transfers = false;

  EngineConfig engine_config() const;
};

/// Relative slack under which near-equal timings count as ties, so repeated
/// tuning on a noisy host settles on the same plan.
inline constexpr double kDefaultTieTolerance = 0.10;

struct TuneOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  int batch_lower = 0;
  int batch_upper = 7;
  std::size_t warmups = 2;
  std::size_t reps = 5;
  double tie_tolerance = kDefaultTieTolerance;
  EngineFlags engine;
};

struct TuneResult {
  ExecPlan plan;
  ProfileTable table;
  std::vector<std::string> warnings;  // unstable cells
};

/// Profiles every layer under every configuration and batch size, then
/// selects the plan. `progress` (may be null) receives one line per cell.
TuneResult tune(const TuneOptions& options, std::ostream* progress = nullptr);

/// Human-readable per-layer mapping table.
std::string render_plan_summary(const ModelSpec& model, const ExecPlan& plan);

/// Short layer label in the C64 / MP14 / S / FLAT / FC2048 notation.
std::string layer_label(const LayerSpec& layer);

struct DatasetRun {
  std::size_t images = 0;
  std::size_t batch_size = 0;
  std::vector<std::size_t> batches;  // size of every executed batch
  std::int64_t total_ns = 0;         // wall time of the whole pass
  std::vector<LayerTiming> per_layer;
  std::vector<std::size_t> predictions;
  double accuracy = 0.0;
};

/// Runs a dataset through `assignments` in batches of `batch_size`; the
/// final batch may be smaller. Throws InvalidArgument on an empty dataset.
DatasetRun execute_dataset(Engine& engine, const PreparedModel& model, const Dataset& data,
                           const std::vector<ParallelConfig>& assignments, std::size_t batch_size);

struct RunOptions {
  std::filesystem::path plan;
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::size_t> threads;  // defaults to the tuned worker count
  std::optional<std::size_t> window_rows;
  bool fuse_transfers = false;
};

struct RunReport {
  ExecPlan plan;
  DatasetRun run;
  std::vector<std::string> warnings;
};

RunReport run(const RunOptions& options);

struct CompareOptions {
  TuneOptions tune;
  std::optional<std::filesystem::path> profile;  // reuse a recorded table instead of profiling
  std::size_t measure_reps = 3;                   // full-dataset passes per cell, median taken
};

struct CompareRow {
  std::size_t batch = 0;
  std::int64_t cpu_only_ns = 0;
  std::int64_t naive_x_ns = 0;
  std::int64_t full_xyz_ns = 0;
  std::int64_t efficient_ns = 0;
  std::vector<ParallelConfig> efficient;  // per-layer choice at this batch size
};

struct CompareReport {
  ExecPlan plan;
  std::vector<CompareRow> rows;
  std::vector<std::string> warnings;

  std::string csv() const;
  std::string markdown() const;
};

/// Measures CPU-only, naive X, full XYZ and the tuned assignment end-to-end
/// at every batch size of the sweep.
CompareReport compare(const CompareOptions& options, std::ostream* progress = nullptr);

/// Argument parsing and dispatch for the `bnn` executable.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace bnn::cli
