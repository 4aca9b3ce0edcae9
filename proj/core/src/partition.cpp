#include "bnn/partition.hpp"

#include <algorithm>
#include <string>

#include "bnn/error.hpp"

namespace bnn {

namespace {

std::size_t pieces(std::size_t extent, std::size_t step) { return extent == 0 ? 0 : (extent + step - 1) / step; }

}  // namespace

PartitionGrid::PartitionGrid(OutputSpace space, std::size_t batch_step, std::size_t row_step,
                             std::size_t channel_step)
    : space_(space),
      bs_(std::max<std::size_t>(1, batch_step)),
      rs_(std::max<std::size_t>(1, row_step)),
      cs_(std::max<std::size_t>(1, channel_step)),
      nb_(pieces(space.batch, bs_)),
      nr_(pieces(space.rows, rs_)),
      nc_(pieces(space.channels, cs_)) {}

Box PartitionGrid::item(std::size_t index) const noexcept {
  const std::size_t c = index % nc_;
  const std::size_t r = (index / nc_) % nr_;
  const std::size_t b = index / (nc_ * nr_);
  Box box;
  box.b0 = b * bs_;
  box.b1 = std::min(space_.batch, box.b0 + bs_);
  box.r0 = r * rs_;
  box.r1 = std::min(space_.rows, box.r0 + rs_);
  box.c0 = c * cs_;
  box.c1 = std::min(space_.channels, box.c0 + cs_);
  return box;
}

PartitionGrid partition_grid(const LayerSpec& layer, ParallelConfig config, std::size_t batch,
                             const PartitionOptions& options) {
  if (config == ParallelConfig::CPU || !is_applicable(layer.kind, config)) {
    fail(ErrorCode::ConfigNotApplicable, std::string("configuration ") + std::string(to_string(config)) +
                                             " is not applicable to " + std::string(to_string(layer.kind)));
  }
  const OutputSpace space = output_space(layer, batch);
  const bool x = uses_data_axis(config), y = uses_window_axis(config), z = uses_neuron_axis(config);
  const bool one_dimensional = space.rows == 1;

  const std::size_t batch_step = x ? 1 : space.batch;
  const std::size_t row_step = (y && !one_dimensional) ? options.window_rows : space.rows;
  std::size_t channel_step = space.channels;
  if (y && one_dimensional) channel_step = options.neuron_band;
  if (z) channel_step = 1;
  return PartitionGrid(space, batch_step, row_step, channel_step);
}

std::vector<WorkItem> partition_work(const LayerSpec& layer, ParallelConfig config, std::size_t batch,
                                     std::size_t workers, const PartitionOptions& options) {
  if (workers == 0) fail(ErrorCode::InvalidArgument, "partition_work: zero workers");
  const PartitionGrid grid = partition_grid(layer, config, batch, options);
  std::vector<WorkItem> items(grid.count());
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = {grid.item(i), i % workers};
  return items;
}

std::optional<CoverageViolation> coverage_check(const std::vector<WorkItem>& items, const OutputSpace& space) {
  std::vector<unsigned char> hits(space.size(), 0);
  for (const WorkItem& item : items) {
    const Box& b = item.box;
    if (b.b1 > space.batch || b.r1 > space.rows || b.c1 > space.channels) {
      return CoverageViolation{CoverageViolation::Kind::OutOfRange,
                               (b.b0 * space.rows + b.r0) * space.channels + b.c0};
    }
    for (std::size_t n = b.b0; n < b.b1; ++n) {
      for (std::size_t r = b.r0; r < b.r1; ++r) {
        for (std::size_t c = b.c0; c < b.c1; ++c) {
          const std::size_t idx = (n * space.rows + r) * space.channels + c;
          if (hits[idx]++ != 0) return CoverageViolation{CoverageViolation::Kind::Overlap, idx};
        }
      }
    }
  }
  const auto gap = std::find(hits.begin(), hits.end(), 0);
  if (gap != hits.end()) {
    return CoverageViolation{CoverageViolation::Kind::Gap, static_cast<std::size_t>(gap - hits.begin())};
  }
  return std::nullopt;
}

}  // namespace bnn
