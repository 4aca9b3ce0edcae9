#pragma once

// Sequential reference implementation of every layer kind. The region
// kernels declared here compute an arbitrary box of a layer's output and are
// shared by the reference path (one box covering everything) and by the
// parallel executors (one box per work item).

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "bnn/bits.hpp"
#include "bnn/model.hpp"

namespace bnn {

/// Inter-layer value: packed ±1 or integer, batched over the layer boundary shape.
class Activation {
 public:
  Activation(IntTensor t, Shape shape);
  Activation(BinaryTensor t, Shape shape);

  bool is_binary() const noexcept { return std::holds_alternative<BinaryTensor>(data_); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t batch() const noexcept { return batch_; }

  const IntTensor& integer() const;
  const BinaryTensor& binary() const;

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  std::variant<IntTensor, BinaryTensor> data_;
  Shape shape_;
  std::size_t batch_ = 0;
};

/// Half-open box over a layer's output index space (batch, row, channel).
/// One-dimensional layers have a single row and index neurons as channels.
struct Box {
  std::size_t b0 = 0, b1 = 0;
  std::size_t r0 = 0, r1 = 0;
  std::size_t c0 = 0, c1 = 0;

  std::size_t volume() const noexcept { return (b1 - b0) * (r1 - r0) * (c1 - c0); }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Extents of a layer's output index space for a given batch.
struct OutputSpace {
  std::size_t batch = 0;
  std::size_t rows = 0;
  std::size_t channels = 0;

  Box all() const noexcept { return {0, batch, 0, rows, 0, channels}; }
  std::size_t size() const noexcept { return batch * rows * channels; }
};

OutputSpace output_space(const LayerSpec& layer, std::size_t batch) noexcept;

// Kernel-ready weight layouts, derived once per layer.

struct ConvIntWeights {
  std::size_t out_channels = 0, in_channels = 0;
  std::vector<std::int32_t> signs;  // [K][C][9], entries ±1
};

struct ConvBinWeights {
  std::size_t out_channels = 0, in_channels = 0, channel_words = 0;
  std::vector<Word> words;  // [K][9][channel_words], channel bits packed per tap
};

struct FcWeights {
  std::size_t neurons = 0, length = 0, row_words = 0;
  std::vector<Word> rows;  // [M][row_words], word-aligned rows
};

ConvIntWeights prepare_conv_int(const BinaryTensor& weights, std::size_t out_channels);
ConvBinWeights prepare_conv_bin(const BinaryTensor& weights, std::size_t out_channels);
FcWeights prepare_fc(const BinaryTensor& weights);

/// Repacks [B][C][H][W] bits so each pixel owns `words_for(C)` channel words.
std::vector<Word> pack_pixels(const BinaryTensor& input, std::size_t batch, const Shape& shape);
/// Repacks [B][L] bits into word-aligned rows.
std::vector<Word> pack_rows(const BinaryTensor& input, std::size_t batch, std::size_t length);
/// Packs a 0/1 byte buffer into a BinaryTensor.
BinaryTensor pack_bytes(std::span<const std::uint8_t> bytes, Dims dims);

namespace kernels {

void conv_int(std::span<const std::int32_t> input, const Shape& in, const ConvIntWeights& w, const Box& box,
              std::span<std::int32_t> out);
void conv_bin(std::span<const Word> pixels, const Shape& in, const ConvBinWeights& w, const Box& box,
              std::span<std::int32_t> out);
void maxpool_int(std::span<const std::int32_t> input, const Shape& in, const Box& box, std::span<std::int32_t> out);
void maxpool_bin(std::span<const Word> input, const Shape& in, const Box& box, std::span<std::uint8_t> out);
void step(std::span<const std::int32_t> input, const Shape& in, std::span<const std::int32_t> thresholds,
          std::span<const StepDirection> directions, const Box& box, std::span<std::uint8_t> out);
void fc(std::span<const Word> rows, const FcWeights& w, const Box& box, std::span<std::int32_t> out);

}  // namespace kernels

// Whole-tensor forward functions. Image tensors are [B][C][H][W], vectors [B][L].

IntTensor conv_int_forward(const IntTensor& input, const BinaryTensor& weights, std::size_t out_channels);
IntTensor conv_bin_forward(const BinaryTensor& input, const BinaryTensor& weights, std::size_t out_channels);
Activation maxpool_forward(const Activation& input);
BinaryTensor step_forward(const IntTensor& input, const IntTensor& thresholds,
                          std::span<const StepDirection> directions);
Activation flatten_forward(const Activation& input);
IntTensor fc_forward(const BinaryTensor& input, const BinaryTensor& weights);

/// A layer together with its kernel-ready weights.
struct PreparedLayer {
  const LayerSpec* spec = nullptr;
  std::variant<std::monostate, ConvIntWeights, ConvBinWeights, FcWeights> weights;
};

/// A validated model with kernel layouts built for every weighted layer.
class PreparedModel {
 public:
  /// Throws Validation when the model violates any invariant.
  explicit PreparedModel(ModelSpec model);

  const ModelSpec& spec() const noexcept { return *model_; }
  const std::vector<PreparedLayer>& layers() const noexcept { return layers_; }

 private:
  std::shared_ptr<const ModelSpec> model_;
  std::vector<PreparedLayer> layers_;
};

/// True when the layer produces packed ±1 output for an input of the given domain.
bool produces_binary(const LayerSpec& layer, bool input_binary) noexcept;

/// Input in the layout a layer's region kernel reads: integer values, or
/// packed words (pixel-packed for conv_bin, word-aligned rows for FC layers,
/// the tensor's own words otherwise).
struct KernelInput {
  std::span<const std::int32_t> ints;
  std::span<const Word> words;
};

/// Bits of `input` rearranged into the kernel layout of `layer`.
std::vector<Word> kernel_words(const LayerSpec& layer, const BinaryTensor& input, std::size_t batch);
/// Whether `kernel_words` would only copy (tensor words are already in kernel layout).
bool kernel_words_is_identity(const LayerSpec& layer) noexcept;

/// Computes one box of the layer output into either an integer buffer or a
/// 0/1 byte buffer, both laid out like the output tensor. Flatten has no kernel.
void run_kernel(const PreparedLayer& layer, const KernelInput& input, const Box& box,
                std::span<std::int32_t> int_out, std::span<std::uint8_t> bin_out);

/// Runs one layer on the sequential reference path.
Activation reference_forward(const PreparedLayer& layer, const Activation& input);

/// Throws ShapeMismatch unless `input` matches the layer's input boundary.
void check_layer_input(const LayerSpec& layer, const Activation& input);

struct InferenceResult {
  IntTensor logits;                  // [B][num_classes]
  std::vector<std::size_t> predictions;
};

/// Lowest class index wins ties.
std::vector<std::size_t> argmax_rows(const IntTensor& logits);

InferenceResult reference_infer(const PreparedModel& model, const IntTensor& batch);
InferenceResult reference_infer(const ModelSpec& model, const IntTensor& batch);

/// Wraps a [B][C][H][W] pixel batch as the model's input activation.
Activation input_activation(const ModelSpec& model, IntTensor batch);

}  // namespace bnn
