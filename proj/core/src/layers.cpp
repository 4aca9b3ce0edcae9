#include "bnn/layers.hpp"

#include <algorithm>
#include <string>

#include "bnn/error.hpp"

namespace bnn {

namespace {

Shape shape_of_dims(const Dims& dims, const char* what) {
  if (dims.size() == 4) return Shape::image(dims[1], dims[2], dims[3]);
  if (dims.size() == 2) return Shape::vector(dims[1]);
  fail(ErrorCode::ShapeMismatch, std::string(what) + ": expected a [B][C][H][W] or [B][L] tensor");
}

void require_image(const Dims& dims, const char* what) {
  if (dims.size() != 4) fail(ErrorCode::ShapeMismatch, std::string(what) + ": expected a [B][C][H][W] tensor");
}

bool bit_at(std::span<const Word> words, std::size_t i) noexcept {
  return (words[i / kWordBits] >> (i % kWordBits)) & 1U;
}

}  // namespace

// ---------------------------------------------------------------------------
// Activation

Activation::Activation(IntTensor t, Shape shape) : data_(std::move(t)), shape_(shape) {
  const auto& dims = std::get<IntTensor>(data_).dims;
  batch_ = dims.empty() ? 0 : dims[0];
  if (dims != shape_.batched(batch_)) fail(ErrorCode::ShapeMismatch, "activation dims do not match " + to_string(shape_));
}

Activation::Activation(BinaryTensor t, Shape shape) : data_(std::move(t)), shape_(shape) {
  const auto& dims = std::get<BinaryTensor>(data_).dims();
  batch_ = dims.empty() ? 0 : dims[0];
  if (dims != shape_.batched(batch_)) fail(ErrorCode::ShapeMismatch, "activation dims do not match " + to_string(shape_));
}

const IntTensor& Activation::integer() const {
  if (is_binary()) fail(ErrorCode::ShapeMismatch, "activation is binary, integer expected");
  return std::get<IntTensor>(data_);
}

const BinaryTensor& Activation::binary() const {
  if (!is_binary()) fail(ErrorCode::ShapeMismatch, "activation is integer, binary expected");
  return std::get<BinaryTensor>(data_);
}

// ---------------------------------------------------------------------------
// Layouts

OutputSpace output_space(const LayerSpec& layer, std::size_t batch) noexcept {
  const Shape& out = layer.out_shape;
  if (out.flat) return {batch, 1, out.channels};
  return {batch, out.rows, out.channels};
}

ConvIntWeights prepare_conv_int(const BinaryTensor& weights, std::size_t out_channels) {
  const Dims& d = weights.dims();
  if (d.size() != 4 || d[0] != out_channels || d[2] != kKernelSize || d[3] != kKernelSize) {
    fail(ErrorCode::ShapeMismatch, "conv weights must be [K][C][3][3]");
  }
  ConvIntWeights w{out_channels, d[1], std::vector<std::int32_t>(weights.size())};
  for (std::size_t i = 0; i < weights.size(); ++i) w.signs[i] = weights.bit(i) ? 1 : -1;
  return w;
}

ConvBinWeights prepare_conv_bin(const BinaryTensor& weights, std::size_t out_channels) {
  const Dims& d = weights.dims();
  if (d.size() != 4 || d[0] != out_channels || d[2] != kKernelSize || d[3] != kKernelSize) {
    fail(ErrorCode::ShapeMismatch, "conv weights must be [K][C][3][3]");
  }
  const std::size_t c_in = d[1];
  ConvBinWeights w{out_channels, c_in, words_for(c_in), {}};
  w.words.assign(out_channels * kKernelTaps * w.channel_words, 0);
  for (std::size_t k = 0; k < out_channels; ++k) {
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t t = 0; t < kKernelTaps; ++t) {
        if (weights.bit((k * c_in + c) * kKernelTaps + t)) {
          w.words[(k * kKernelTaps + t) * w.channel_words + c / kWordBits] |= Word{1} << (c % kWordBits);
        }
      }
    }
  }
  return w;
}

FcWeights prepare_fc(const BinaryTensor& weights) {
  const Dims& d = weights.dims();
  if (d.size() != 2) fail(ErrorCode::ShapeMismatch, "fc weights must be [M][L]");
  FcWeights w{d[0], d[1], words_for(d[1]), {}};
  w.rows.assign(w.neurons * w.row_words, 0);
  for (std::size_t m = 0; m < w.neurons; ++m) {
    extract_bits(weights.words(), m * w.length, w.length, std::span(w.rows).subspan(m * w.row_words, w.row_words));
  }
  return w;
}

std::vector<Word> pack_pixels(const BinaryTensor& input, std::size_t batch, const Shape& shape) {
  const std::size_t c_in = shape.channels;
  const std::size_t plane = shape.rows * shape.cols;
  const std::size_t cw = words_for(c_in);
  std::vector<Word> out(batch * plane * cw, 0);
  const auto words = input.words();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < c_in; ++c) {
      const std::size_t base = (b * c_in + c) * plane;
      const Word channel_bit = Word{1} << (c % kWordBits);
      Word* dst = out.data() + b * plane * cw + c / kWordBits;
      for (std::size_t p = 0; p < plane; ++p) {
        if (bit_at(words, base + p)) dst[p * cw] |= channel_bit;
      }
    }
  }
  return out;
}

std::vector<Word> pack_rows(const BinaryTensor& input, std::size_t batch, std::size_t length) {
  const std::size_t lw = words_for(length);
  std::vector<Word> out(batch * lw, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    extract_bits(input.words(), b * length, length, std::span(out).subspan(b * lw, lw));
  }
  return out;
}

BinaryTensor pack_bytes(std::span<const std::uint8_t> bytes, Dims dims) {
  std::vector<Word> words(words_for(bytes.size()), 0);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    words[i / kWordBits] |= static_cast<Word>(bytes[i] & 1U) << (i % kWordBits);
  }
  return BinaryTensor(std::move(dims), std::move(words));
}

// ---------------------------------------------------------------------------
// Region kernels

namespace kernels {

void conv_int(std::span<const std::int32_t> input, const Shape& in, const ConvIntWeights& w, const Box& box,
              std::span<std::int32_t> out) {
  const std::size_t H = in.rows, W = in.cols, C = in.channels, K = w.out_channels;
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    for (std::size_t k = box.c0; k < box.c1; ++k) {
      for (std::size_t i = box.r0; i < box.r1; ++i) {
        std::int32_t* o = out.data() + ((b * K + k) * H + i) * W;
        std::fill(o, o + W, 0);
        for (std::size_t c = 0; c < C; ++c) {
          const std::int32_t* plane = input.data() + (b * C + c) * H * W;
          const std::int32_t* ws = w.signs.data() + (k * C + c) * kKernelTaps;
          for (std::size_t di = 0; di < kKernelSize; ++di) {
            if (i + di < 1 || i + di - 1 >= H) continue;
            const std::int32_t* row = plane + (i + di - 1) * W;
            for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
              const std::size_t jlo = dj == 0 ? 1 : 0;
              const std::size_t jhi = dj == 2 ? W - 1 : W;
              if (ws[di * kKernelSize + dj] > 0) {
                for (std::size_t j = jlo; j < jhi; ++j) o[j] += row[j + dj - 1];
              } else {
                for (std::size_t j = jlo; j < jhi; ++j) o[j] -= row[j + dj - 1];
              }
            }
          }
        }
      }
    }
  }
}

void conv_bin(std::span<const Word> pixels, const Shape& in, const ConvBinWeights& w, const Box& box,
              std::span<std::int32_t> out) {
  const std::size_t H = in.rows, W = in.cols, C = in.channels, K = w.out_channels, cw = w.channel_words;
  const auto c_bits = static_cast<std::int32_t>(C);
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    const Word* img = pixels.data() + b * H * W * cw;
    for (std::size_t k = box.c0; k < box.c1; ++k) {
      const Word* wk = w.words.data() + k * kKernelTaps * cw;
      for (std::size_t i = box.r0; i < box.r1; ++i) {
        std::int32_t* o = out.data() + ((b * K + k) * H + i) * W;
        for (std::size_t j = 0; j < W; ++j) {
          std::int32_t disagree = 0;
          std::int32_t taps = 0;
          for (std::size_t di = 0; di < kKernelSize; ++di) {
            if (i + di < 1 || i + di - 1 >= H) continue;
            for (std::size_t dj = 0; dj < kKernelSize; ++dj) {
              if (j + dj < 1 || j + dj - 1 >= W) continue;
              const Word* x = img + ((i + di - 1) * W + (j + dj - 1)) * cw;
              const Word* wt = wk + (di * kKernelSize + dj) * cw;
              for (std::size_t q = 0; q < cw; ++q) disagree += std::popcount(x[q] ^ wt[q]);
              ++taps;
            }
          }
          // Padded taps are absent: they add nothing and shrink #bits.
          o[j] = taps * c_bits - 2 * disagree;
        }
      }
    }
  }
}

void maxpool_int(std::span<const std::int32_t> input, const Shape& in, const Box& box, std::span<std::int32_t> out) {
  const std::size_t H = in.rows, W = in.cols, C = in.channels, OH = H / 2, OW = W / 2;
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    for (std::size_t c = box.c0; c < box.c1; ++c) {
      const std::int32_t* plane = input.data() + (b * C + c) * H * W;
      for (std::size_t i = box.r0; i < box.r1; ++i) {
        const std::int32_t* r0 = plane + 2 * i * W;
        const std::int32_t* r1 = r0 + W;
        std::int32_t* o = out.data() + ((b * C + c) * OH + i) * OW;
        for (std::size_t j = 0; j < OW; ++j) {
          o[j] = std::max(std::max(r0[2 * j], r0[2 * j + 1]), std::max(r1[2 * j], r1[2 * j + 1]));
        }
      }
    }
  }
}

void maxpool_bin(std::span<const Word> input, const Shape& in, const Box& box, std::span<std::uint8_t> out) {
  const std::size_t H = in.rows, W = in.cols, C = in.channels, OH = H / 2, OW = W / 2;
  const std::size_t rw = words_for(W);
  std::vector<Word> top(rw), bottom(rw);
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    for (std::size_t c = box.c0; c < box.c1; ++c) {
      const std::size_t plane = (b * C + c) * H * W;
      for (std::size_t i = box.r0; i < box.r1; ++i) {
        extract_bits(input, plane + 2 * i * W, W, top);
        extract_bits(input, plane + (2 * i + 1) * W, W, bottom);
        for (std::size_t q = 0; q < rw; ++q) top[q] |= bottom[q];
        std::uint8_t* o = out.data() + ((b * C + c) * OH + i) * OW;
        for (std::size_t j = 0; j < OW; ++j) {
          o[j] = static_cast<std::uint8_t>(bit_at(top, 2 * j) | bit_at(top, 2 * j + 1));
        }
      }
    }
  }
}

void step(std::span<const std::int32_t> input, const Shape& in, std::span<const std::int32_t> thresholds,
          std::span<const StepDirection> directions, const Box& box, std::span<std::uint8_t> out) {
  const std::size_t C = in.channels, H = in.rows, W = in.cols;
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    for (std::size_t c = box.c0; c < box.c1; ++c) {
      const std::int32_t t = thresholds[c];
      const bool pos = directions[c] == StepDirection::Pos;
      for (std::size_t i = box.r0; i < box.r1; ++i) {
        const std::size_t base = ((b * C + c) * H + i) * W;
        for (std::size_t j = 0; j < W; ++j) {
          const std::int32_t v = input[base + j];
          out[base + j] = static_cast<std::uint8_t>(pos ? v > t : v < t);
        }
      }
    }
  }
}

void fc(std::span<const Word> rows, const FcWeights& w, const Box& box, std::span<std::int32_t> out) {
  const std::size_t lw = w.row_words, M = w.neurons;
  const auto length = static_cast<std::int32_t>(w.length);
  for (std::size_t b = box.b0; b < box.b1; ++b) {
    const Word* x = rows.data() + b * lw;
    for (std::size_t m = box.c0; m < box.c1; ++m) {
      const Word* wr = w.rows.data() + m * lw;
      std::int32_t disagree = 0;
      for (std::size_t q = 0; q < lw; ++q) disagree += std::popcount(x[q] ^ wr[q]);
      out[b * M + m] = length - 2 * disagree;
    }
  }
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Whole-tensor forward functions

IntTensor conv_int_forward(const IntTensor& input, const BinaryTensor& weights, std::size_t out_channels) {
  require_image(input.dims, "conv_int_forward");
  const Shape in = shape_of_dims(input.dims, "conv_int_forward");
  const ConvIntWeights w = prepare_conv_int(weights, out_channels);
  if (w.in_channels != in.channels) fail(ErrorCode::ShapeMismatch, "conv_int_forward: channel count mismatch");
  const std::size_t batch = input.dims[0];
  IntTensor out(Dims{batch, out_channels, in.rows, in.cols});
  kernels::conv_int(input.values, in, w, {0, batch, 0, in.rows, 0, out_channels}, out.values);
  return out;
}

IntTensor conv_bin_forward(const BinaryTensor& input, const BinaryTensor& weights, std::size_t out_channels) {
  require_image(input.dims(), "conv_bin_forward");
  const Shape in = shape_of_dims(input.dims(), "conv_bin_forward");
  const ConvBinWeights w = prepare_conv_bin(weights, out_channels);
  if (w.in_channels != in.channels) fail(ErrorCode::ShapeMismatch, "conv_bin_forward: channel count mismatch");
  const std::size_t batch = input.dims()[0];
  const std::vector<Word> pixels = pack_pixels(input, batch, in);
  IntTensor out(Dims{batch, out_channels, in.rows, in.cols});
  kernels::conv_bin(pixels, in, w, {0, batch, 0, in.rows, 0, out_channels}, out.values);
  return out;
}

Activation maxpool_forward(const Activation& input) {
  const Shape& in = input.shape();
  if (in.flat) fail(ErrorCode::ShapeMismatch, "maxpool_forward: flat input");
  if (in.rows % 2 != 0 || in.cols % 2 != 0) {
    fail(ErrorCode::OddSpatialDim, "maxpool_forward: spatial dims " + to_string(in) + " are not even");
  }
  const Shape out_shape = Shape::image(in.channels, in.rows / 2, in.cols / 2);
  const std::size_t batch = input.batch();
  const Box box{0, batch, 0, out_shape.rows, 0, out_shape.channels};
  if (input.is_binary()) {
    std::vector<std::uint8_t> bytes(batch * out_shape.count());
    kernels::maxpool_bin(input.binary().words(), in, box, bytes);
    return Activation(pack_bytes(bytes, out_shape.batched(batch)), out_shape);
  }
  IntTensor out(out_shape.batched(batch));
  kernels::maxpool_int(input.integer().values, in, box, out.values);
  return Activation(std::move(out), out_shape);
}

BinaryTensor step_forward(const IntTensor& input, const IntTensor& thresholds,
                          std::span<const StepDirection> directions) {
  const Shape in = shape_of_dims(input.dims, "step_forward");
  if (thresholds.size() != in.channels || directions.size() != in.channels) {
    fail(ErrorCode::ShapeMismatch, "step_forward: " + std::to_string(in.channels) + " channels but " +
                                       std::to_string(thresholds.size()) + " thresholds and " +
                                       std::to_string(directions.size()) + " direction flags");
  }
  const std::size_t batch = input.dims[0];
  std::vector<std::uint8_t> bytes(input.size());
  kernels::step(input.values, in, thresholds.values, directions, {0, batch, 0, in.rows, 0, in.channels}, bytes);
  return pack_bytes(bytes, input.dims);
}

Activation flatten_forward(const Activation& input) {
  const Shape out_shape = Shape::vector(input.shape().count());
  const Dims dims = out_shape.batched(input.batch());
  if (input.is_binary()) return Activation(input.binary().reshaped(dims), out_shape);
  return Activation(IntTensor(dims, input.integer().values), out_shape);
}

IntTensor fc_forward(const BinaryTensor& input, const BinaryTensor& weights) {
  if (input.dims().size() != 2 || weights.dims().size() != 2 || input.dims()[1] != weights.dims()[1]) {
    fail(ErrorCode::ShapeMismatch, "fc_forward: expected input [B][L] and weights [M][L]");
  }
  const std::size_t batch = input.dims()[0], length = input.dims()[1];
  const FcWeights w = prepare_fc(weights);
  const std::vector<Word> rows = pack_rows(input, batch, length);
  IntTensor out(Dims{batch, w.neurons});
  kernels::fc(rows, w, {0, batch, 0, 1, 0, w.neurons}, out.values);
  return out;
}

// ---------------------------------------------------------------------------
// Prepared model and reference inference

PreparedModel::PreparedModel(ModelSpec model) : model_(std::make_shared<const ModelSpec>(std::move(model))) {
  const auto violations = validate_model(*model_);
  if (!violations.empty()) {
    std::string msg = "model '" + model_->name + "' is invalid:";
    for (const auto& v : violations) msg += "\n  " + v;
    fail(ErrorCode::Validation, msg);
  }
  layers_.reserve(model_->layers.size());
  for (const LayerSpec& l : model_->layers) {
    PreparedLayer p{&l, {}};
    switch (l.kind) {
      case LayerKind::ConvInt: p.weights = prepare_conv_int(l.weights, l.out_channels); break;
      case LayerKind::ConvBin: p.weights = prepare_conv_bin(l.weights, l.out_channels); break;
      case LayerKind::FcBin:
      case LayerKind::FcIntOut: p.weights = prepare_fc(l.weights); break;
      default: break;
    }
    layers_.push_back(std::move(p));
  }
}

bool produces_binary(const LayerSpec& layer, bool input_binary) noexcept {
  switch (layer.kind) {
    case LayerKind::Step: return true;
    case LayerKind::MaxPool:
    case LayerKind::Flatten: return input_binary;
    default: return false;
  }
}

bool kernel_words_is_identity(const LayerSpec& layer) noexcept {
  switch (layer.kind) {
    case LayerKind::ConvBin: return false;
    case LayerKind::FcBin:
    case LayerKind::FcIntOut: return layer.in_shape.channels % kWordBits == 0;
    default: return true;
  }
}

std::vector<Word> kernel_words(const LayerSpec& layer, const BinaryTensor& input, std::size_t batch) {
  switch (layer.kind) {
    case LayerKind::ConvBin: return pack_pixels(input, batch, layer.in_shape);
    case LayerKind::FcBin:
    case LayerKind::FcIntOut: return pack_rows(input, batch, layer.in_shape.channels);
    default: return {input.words().begin(), input.words().end()};
  }
}

void run_kernel(const PreparedLayer& layer, const KernelInput& input, const Box& box,
                std::span<std::int32_t> int_out, std::span<std::uint8_t> bin_out) {
  const LayerSpec& l = *layer.spec;
  switch (l.kind) {
    case LayerKind::ConvInt:
      kernels::conv_int(input.ints, l.in_shape, std::get<ConvIntWeights>(layer.weights), box, int_out);
      break;
    case LayerKind::ConvBin:
      kernels::conv_bin(input.words, l.in_shape, std::get<ConvBinWeights>(layer.weights), box, int_out);
      break;
    case LayerKind::MaxPool:
      if (!bin_out.empty()) {
        kernels::maxpool_bin(input.words, l.in_shape, box, bin_out);
      } else {
        kernels::maxpool_int(input.ints, l.in_shape, box, int_out);
      }
      break;
    case LayerKind::Step:
      kernels::step(input.ints, l.in_shape, l.thresholds.values, l.directions, box, bin_out);
      break;
    case LayerKind::FcBin:
    case LayerKind::FcIntOut:
      kernels::fc(input.words, std::get<FcWeights>(layer.weights), box, int_out);
      break;
    case LayerKind::Flatten:
      fail(ErrorCode::ConfigNotApplicable, "flatten has no region kernel");
  }
}

void check_layer_input(const LayerSpec& layer, const Activation& input) {
  if (input.shape() != layer.in_shape) {
    fail(ErrorCode::ShapeMismatch, std::string(to_string(layer.kind)) + ": input " + to_string(input.shape()) +
                                       " does not match declared " + to_string(layer.in_shape));
  }
  const bool needs_binary = layer.kind == LayerKind::ConvBin || layer.kind == LayerKind::FcBin ||
                            layer.kind == LayerKind::FcIntOut;
  const bool needs_integer = layer.kind == LayerKind::ConvInt || layer.kind == LayerKind::Step;
  if ((needs_binary && !input.is_binary()) || (needs_integer && input.is_binary())) {
    fail(ErrorCode::ShapeMismatch, std::string(to_string(layer.kind)) + ": wrong activation domain");
  }
}

Activation reference_forward(const PreparedLayer& layer, const Activation& input) {
  const LayerSpec& l = *layer.spec;
  check_layer_input(l, input);
  if (l.kind == LayerKind::Flatten) return flatten_forward(input);

  const std::size_t batch = input.batch();
  const Box box = output_space(l, batch).all();
  const Dims out_dims = l.out_shape.batched(batch);

  std::vector<Word> repacked;
  KernelInput in;
  if (input.is_binary()) {
    if (kernel_words_is_identity(l)) {
      in.words = input.binary().words();
    } else {
      repacked = kernel_words(l, input.binary(), batch);
      in.words = repacked;
    }
  } else {
    in.ints = input.integer().values;
  }

  if (produces_binary(l, input.is_binary())) {
    std::vector<std::uint8_t> bytes(element_count(out_dims));
    run_kernel(layer, in, box, {}, bytes);
    return Activation(pack_bytes(bytes, out_dims), l.out_shape);
  }
  IntTensor out(out_dims);
  run_kernel(layer, in, box, out.values, {});
  return Activation(std::move(out), l.out_shape);
}

std::vector<std::size_t> argmax_rows(const IntTensor& logits) {
  if (logits.dims.size() != 2) fail(ErrorCode::ShapeMismatch, "argmax_rows: expected [B][classes]");
  const std::size_t batch = logits.dims[0], classes = logits.dims[1];
  std::vector<std::size_t> out(batch, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row = std::span(logits.values).subspan(b * classes, classes);
    out[b] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Activation input_activation(const ModelSpec& model, IntTensor batch) {
  if (batch.dims.size() != 4) fail(ErrorCode::ShapeMismatch, "input batch must be [B][C][H][W]");
  return Activation(std::move(batch), model.input.shape());
}

InferenceResult reference_infer(const PreparedModel& model, const IntTensor& batch) {
  Activation act = input_activation(model.spec(), batch);
  for (const PreparedLayer& layer : model.layers()) act = reference_forward(layer, act);
  InferenceResult r{act.integer(), {}};
  r.predictions = argmax_rows(r.logits);
  return r;
}

InferenceResult reference_infer(const ModelSpec& model, const IntTensor& batch) {
  return reference_infer(PreparedModel(model), batch);
}

}  // namespace bnn
