#include "bnn/engine.hpp"

#include <chrono>
#include <optional>
#include <string>

#include "bnn/error.hpp"

namespace bnn {

Clock steady_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

Engine::Engine(EngineConfig config, Clock clock)
    : config_(config), clock_(std::move(clock)), pool_(config.workers) {
  config_.workers = pool_.size();
  if (config_.window_rows == 0 || config_.neuron_band == 0) {
    fail(ErrorCode::InvalidArgument, "window_rows and neuron_band must be positive");
  }
}

TimedResult Engine::execute_layer(const PreparedLayer& layer, const Activation& input, ParallelConfig config) {
  const LayerSpec& l = *layer.spec;
  if (!is_applicable(l.kind, config)) {
    fail(ErrorCode::ConfigNotApplicable, std::string(to_string(l.kind)) + " does not accept configuration " +
                                             std::string(to_string(config)));
  }
  check_layer_input(l, input);

  if (config == ParallelConfig::CPU) {
    const std::int64_t t0 = clock_();
    Activation out = reference_forward(layer, input);
    const std::int64_t t1 = clock_();
    return {std::move(out), 0, t1 - t0};
  }

  const std::size_t batch = input.batch();
  const bool binary_out = produces_binary(l, input.is_binary());
  const Dims out_dims = l.out_shape.batched(batch);
  const std::size_t out_count = element_count(out_dims);

  // Stage the input into engine-owned buffers and size the output buffer.
  const std::int64_t t0 = clock_();
  KernelInput staged;
  if (input.is_binary()) {
    const BinaryTensor& bits = input.binary();
    if (config_.fuse_transfers && kernel_words_is_identity(l)) {
      staged.words = bits.words();
    } else if (kernel_words_is_identity(l)) {
      staged_words_.assign(bits.words().begin(), bits.words().end());
      staged.words = staged_words_;
    } else {
      staged_words_ = kernel_words(l, bits, batch);
      staged.words = staged_words_;
    }
  } else if (config_.fuse_transfers) {
    staged.ints = input.integer().values;
  } else {
    const auto& values = input.integer().values;
    staged_ints_.assign(values.begin(), values.end());
    staged.ints = staged_ints_;
  }
  std::span<std::int32_t> int_out;
  std::span<std::uint8_t> bin_out;
  if (binary_out) {
    device_bytes_.resize(out_count);
    bin_out = device_bytes_;
  } else {
    device_ints_.resize(out_count);
    int_out = device_ints_;
  }
  const PartitionGrid grid =
      partition_grid(l, config, batch, PartitionOptions{config_.window_rows, config_.neuron_band});
  const std::size_t items = grid.count();
  const std::size_t workers = pool_.size();

  const std::int64_t t1 = clock_();
  pool_.run([&](std::size_t w) {
    for (std::size_t i = w; i < items; i += workers) run_kernel(layer, staged, grid.item(i), int_out, bin_out);
  });
  const std::int64_t t2 = clock_();

  // Copy the result back out of the device buffer.
  std::optional<Activation> out;
  if (binary_out) {
    out.emplace(pack_bytes(device_bytes_, out_dims), l.out_shape);
  } else if (config_.fuse_transfers) {
    out.emplace(IntTensor(out_dims, std::move(device_ints_)), l.out_shape);
    device_ints_ = {};
  } else {
    out.emplace(IntTensor(out_dims, device_ints_), l.out_shape);
  }
  const std::int64_t t3 = clock_();
  return {std::move(*out), (t1 - t0) + (t3 - t2), t2 - t1};
}

PlannedInference Engine::infer(const PreparedModel& model, std::span<const ParallelConfig> assignments,
                               const IntTensor& batch) {
  const auto& layers = model.layers();
  if (assignments.size() != layers.size()) {
    fail(ErrorCode::InvalidArgument, "assignment count " + std::to_string(assignments.size()) +
                                         " does not match layer count " + std::to_string(layers.size()));
  }
  PlannedInference run;
  run.layers.reserve(layers.size());
  Activation act = input_activation(model.spec(), batch);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    TimedResult r = execute_layer(layers[i], act, assignments[i]);
    run.layers.push_back({r.overhead_ns, r.compute_ns});
    act = std::move(r.output);
  }
  run.result.logits = act.integer();
  run.result.predictions = argmax_rows(run.result.logits);
  return run;
}

}  // namespace bnn
