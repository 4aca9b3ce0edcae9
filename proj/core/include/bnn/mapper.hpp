#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bnn/model.hpp"
#include "bnn/profiler.hpp"

namespace bnn {

/// Per-layer implementation choice plus batch size for a model.
struct ExecPlan {
  std::string model_name;
  std::string model_hash;
  std::size_t batch_size = 1;
  std::vector<ParallelConfig> assignments;
  std::int64_t predicted_batch_ns = 0;  // sum of per-layer (overhead + compute) for one batch
  std::int64_t predicted_total_ns = 0;  // batch time times ceil(dataset_images / batch_size)
  std::size_t dataset_images = 0;
  std::size_t workers = 1;
  std::size_t window_rows = 1;

  friend bool operator==(const ExecPlan&, const ExecPlan&) = default;
};

struct MapperOptions {
  /// Slack on predicted time, relative to the exact optimum. Non-CPU layers
  /// fall back to CPU, smallest loss first, while the batch total stays within
  /// (1 + tolerance) of the optimum; the smallest batch whose per-image time
  /// is within the same band of the best one wins. Zero is the exact minimum
  /// with ties going to CPU, X, Y, Z, XY, XZ, YZ, XYZ and then the smaller batch.
  double tie_tolerance = 0.0;
};

/// Chosen configuration of every layer at one batch size.
struct BatchChoice {
  std::size_t batch = 0;
  std::vector<ParallelConfig> assignments;
  std::int64_t batch_ns = 0;    // sum of the chosen cells
  std::int64_t optimal_ns = 0;  // sum of the per-layer minima
};

/// Greedy per-layer argmin at every batch size of the table, in sweep order.
/// Throws IncompleteTable listing missing cells.
std::vector<BatchChoice> per_batch_choices(const ProfileTable& table, std::span<const LayerKind> kinds,
                                           const MapperOptions& options = {});

/// Picks the batch size with the lowest per-image time (batch_ns / batch)
/// and returns its per-layer assignments.
ExecPlan select_plan(const ProfileTable& table, std::span<const LayerKind> kinds, const MapperOptions& options = {});
ExecPlan select_plan(const ProfileTable& table, const ModelSpec& model, const MapperOptions& options = {});

std::vector<LayerKind> layer_kinds(const ModelSpec& model);

/// Same configuration on every layer, with Flatten pinned to CPU.
std::vector<ParallelConfig> uniform_assignment(std::span<const LayerKind> kinds, ParallelConfig config);

struct Baselines {
  std::vector<ParallelConfig> cpu_only;
  std::vector<ParallelConfig> naive_x;
  std::vector<ParallelConfig> full_xyz;
};

Baselines baseline_plans(const ModelSpec& model);

/// Sum of table times of `assignments` at `batch`. Throws IncompleteTable.
std::int64_t predicted_batch_ns(const ProfileTable& table, std::span<const ParallelConfig> assignments,
                                std::size_t batch);

/// Batch time scaled to a dataset: batch_ns * ceil(images / batch).
std::int64_t scale_to_dataset(std::int64_t batch_ns, std::size_t batch, std::size_t images);

/// Powers of two 2^lower_exp .. 2^upper_exp inclusive. Throws BadRange
/// unless 0 <= lower_exp <= upper_exp <= 16.
std::vector<std::size_t> batch_sweep(int lower_exp, int upper_exp);

}  // namespace bnn
