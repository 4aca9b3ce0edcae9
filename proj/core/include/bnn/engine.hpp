#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bnn/layers.hpp"
#include "bnn/partition.hpp"
#include "bnn/worker_pool.hpp"

namespace bnn {

/// Monotonic nanosecond clock; replaceable in tests.
using Clock = std::function<std::int64_t()>;
Clock steady_clock();

struct EngineConfig {
  std::size_t workers = default_worker_count();
  std::size_t window_rows = 1;
  std::size_t neuron_band = 64;
  /// Skip the per-layer staging copies where the kernel layout allows it.
  bool fuse_transfers = false;
};

struct TimedResult {
  Activation output;
  std::int64_t overhead_ns = 0;  // staging in, partitioning, copy-back
  std::int64_t compute_ns = 0;   // dispatch to join of the worker pool

  std::int64_t total_ns() const noexcept { return overhead_ns + compute_ns; }
};

struct LayerTiming {
  std::int64_t overhead_ns = 0;
  std::int64_t compute_ns = 0;
};

struct PlannedInference {
  InferenceResult result;
  std::vector<LayerTiming> layers;
};

/// Executes layers under any of the eight configurations.
///
/// Non-CPU calls copy their input into engine-owned staging buffers, run the
/// partitioned kernel on the worker pool, and copy the result back, on every
/// call. The CPU configuration runs the reference path directly.
/// Externally synchronized: one layer in flight at a time.
class Engine {
 public:
  explicit Engine(EngineConfig config = {}, Clock clock = steady_clock());

  const EngineConfig& config() const noexcept { return config_; }
  std::size_t workers() const noexcept { return pool_.size(); }

  /// Throws ConfigNotApplicable / ShapeMismatch.
  TimedResult execute_layer(const PreparedLayer& layer, const Activation& input, ParallelConfig config);

  /// Runs a whole batch with one configuration per layer.
  PlannedInference infer(const PreparedModel& model, std::span<const ParallelConfig> assignments,
                         const IntTensor& batch);

 private:
  EngineConfig config_;
  Clock clock_;
  WorkerPool pool_;
  std::vector<std::int32_t> staged_ints_;
  std::vector<Word> staged_words_;
  std::vector<std::int32_t> device_ints_;
  std::vector<std::uint8_t> device_bytes_;
};

}  // namespace bnn
