#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bnn/layers.hpp"
#include "bnn/model.hpp"

namespace bnn {

/// Granularity knobs for the Window (Y) axis.
struct PartitionOptions {
  std::size_t window_rows = 1;   // output rows per window on image layers
  std::size_t neuron_band = 64;  // contiguous neurons per window on 1-D layers
};

/// Regular decomposition of a layer's output space into boxes.
///
/// Data (X) splits the batch into single images, Window (Y) splits rows into
/// bands of `window_rows` (1-D layers: neuron bands of `neuron_band`), Neuron
/// (Z) splits channels/neurons into singletons. Composite configurations take
/// the product of their axes; where two axes cut the same dimension the finer
/// cut wins. Items are numbered batch-major, then row, then channel.
class PartitionGrid {
 public:
  PartitionGrid(OutputSpace space, std::size_t batch_step, std::size_t row_step, std::size_t channel_step);

  const OutputSpace& space() const noexcept { return space_; }
  std::size_t count() const noexcept { return nb_ * nr_ * nc_; }
  Box item(std::size_t index) const noexcept;

 private:
  OutputSpace space_;
  std::size_t bs_, rs_, cs_;
  std::size_t nb_, nr_, nc_;
};

/// Throws ConfigNotApplicable for CPU or for kinds that only run sequentially.
PartitionGrid partition_grid(const LayerSpec& layer, ParallelConfig config, std::size_t batch,
                             const PartitionOptions& options = {});

struct WorkItem {
  Box box;
  std::size_t worker = 0;
};

/// Materialized partition with static round-robin assignment to `workers`.
std::vector<WorkItem> partition_work(const LayerSpec& layer, ParallelConfig config, std::size_t batch,
                                     std::size_t workers, const PartitionOptions& options = {});

struct CoverageViolation {
  enum class Kind { Gap, Overlap, OutOfRange };
  Kind kind;
  std::size_t index;  // linear index (batch-major, row, channel) into the space
};

/// nullopt iff the items cover every index of `space` exactly once.
std::optional<CoverageViolation> coverage_check(const std::vector<WorkItem>& items, const OutputSpace& space);

}  // namespace bnn
