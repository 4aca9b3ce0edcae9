#include "bnn/profiler.hpp"

#include <algorithm>
#include <map>

#include "bnn/error.hpp"

namespace bnn {

const ProfileEntry* ProfileTable::find(const ProfileKey& key) const {
  const auto it = entries.find(key);
  return it == entries.end() ? nullptr : &it->second;
}

std::vector<ProfileKey> ProfileTable::missing_cells(std::span<const LayerKind> kinds) const {
  std::vector<ProfileKey> missing;
  for (std::size_t batch : metadata.batch_sizes) {
    for (std::size_t layer = 0; layer < kinds.size(); ++layer) {
      for (ParallelConfig c : metadata.configs) {
        if (!is_applicable(kinds[layer], c)) continue;
        const ProfileKey key{layer, c, batch};
        if (!find(key)) missing.push_back(key);
      }
    }
  }
  return missing;
}

std::int64_t median(std::vector<std::int64_t> values) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const std::int64_t upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const std::int64_t lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2;
}

ProfileEntry summarize(std::span<const TimingSample> samples) {
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "at least one timed repetition is required");
  std::vector<std::int64_t> overhead, compute, total;
  overhead.reserve(samples.size());
  compute.reserve(samples.size());
  total.reserve(samples.size());
  for (const TimingSample& s : samples) {
    overhead.push_back(s.overhead_ns);
    compute.push_back(s.compute_ns);
    total.push_back(s.overhead_ns + s.compute_ns);
  }
  ProfileEntry e;
  e.overhead_ns = median(overhead);
  e.compute_ns = median(compute);
  e.reps = samples.size();
  const auto [lo, hi] = std::minmax_element(total.begin(), total.end());
  const std::int64_t mid = median(total);
  e.spread = mid > 0 ? static_cast<double>(*hi - *lo) / static_cast<double>(mid) : 0.0;
  return e;
}

ProfileEntry measure_repeated(std::size_t warmups, std::size_t reps, const std::function<TimingSample()>& run) {
  if (reps == 0) fail(ErrorCode::InvalidArgument, "at least one timed repetition is required");
  for (std::size_t i = 0; i < warmups; ++i) run();
  std::vector<TimingSample> samples;
  samples.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) samples.push_back(run());
  return summarize(samples);
}

ProfileEntry profile_layer(Engine& engine, const PreparedLayer& layer, const Activation& input, ParallelConfig config,
                           std::size_t warmups, std::size_t reps) {
  return measure_repeated(warmups, reps, [&] {
    const TimedResult r = engine.execute_layer(layer, input, config);
    return TimingSample{r.overhead_ns, r.compute_ns};
  });
}

IntTensor take_batch(const IntTensor& images, std::size_t start, std::size_t batch) {
  if (images.dims.size() != 4 || images.dims[0] == 0) fail(ErrorCode::InvalidArgument, "take_batch: empty image set");
  const std::size_t n = images.dims[0];
  const std::size_t per_image = images.dims[1] * images.dims[2] * images.dims[3];
  IntTensor out(Dims{batch, images.dims[1], images.dims[2], images.dims[3]});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto src = images.values.begin() + static_cast<std::ptrdiff_t>(((start + b) % n) * per_image);
    std::copy(src, src + static_cast<std::ptrdiff_t>(per_image),
              out.values.begin() + static_cast<std::ptrdiff_t>(b * per_image));
  }
  return out;
}

ProfileTable profile_model(Engine& engine, const PreparedModel& model, const IntTensor& images,
                           const ProfileRequest& request, const ProfileObserver& observer) {
  if (images.dims.size() != 4 || images.dims[0] == 0) fail(ErrorCode::InvalidArgument, "profiling needs a non-empty dataset");
  if (request.batch_sizes.empty()) fail(ErrorCode::InvalidArgument, "profiling needs at least one batch size");

  ProfileTable table;
  auto& meta = table.metadata;
  meta.model_name = model.spec().name;
  meta.layer_count = model.layers().size();
  meta.workers = engine.workers();
  meta.window_rows = engine.config().window_rows;
  meta.fuse_transfers = engine.config().fuse_transfers;
  meta.warmups = request.warmups;
  meta.reps = request.reps;
  meta.dataset_images = images.dims[0];
  meta.configs = request.configs;
  meta.batch_sizes = request.batch_sizes;

  if (request.reps == 0) fail(ErrorCode::InvalidArgument, "at least one timed repetition is required");

  // One timed sample per cell per round, so slow stretches on the host spread
  // over every cell instead of landing on a single batch column.
  std::map<ProfileKey, std::vector<TimingSample>> samples;
  std::vector<std::size_t> order = request.batch_sizes;
  for (std::size_t round = 0; round < request.reps; ++round) {
    for (std::size_t batch : order) {
      Activation act = input_activation(model.spec(), take_batch(images, 0, batch));
      for (std::size_t i = 0; i < model.layers().size(); ++i) {
        const PreparedLayer& layer = model.layers()[i];
        for (ParallelConfig c : request.configs) {
          if (!is_applicable(layer.spec->kind, c)) continue;
          if (round == 0) {
            for (std::size_t k = 0; k < request.warmups; ++k) engine.execute_layer(layer, act, c);
          }
          const TimedResult r = engine.execute_layer(layer, act, c);
          samples[{i, c, batch}].push_back({r.overhead_ns, r.compute_ns});
        }
        act = reference_forward(layer, act);
      }
    }
    std::reverse(order.begin(), order.end());
  }

  for (const auto& [key, s] : samples) {
    const ProfileEntry entry = summarize(s);
    table.entries[key] = entry;
    if (observer) observer(key, entry);
  }
  return table;
}

}  // namespace bnn
