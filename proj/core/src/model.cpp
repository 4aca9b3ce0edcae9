#include "bnn/model.hpp"

#include <sstream>

namespace bnn {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {"conv_int", "conv_bin", "maxpool", "step",
                                                        "flatten",  "fc_bin",   "fc_int_out"};
constexpr std::array<std::string_view, 8> kConfigNames = {"CPU", "X", "Y", "Z", "XY", "XZ", "YZ", "XYZ"};

enum class Domain { Integer, Binary };

std::string at(std::size_t index) { return " at layer " + std::to_string(index + 1); }

}  // namespace

std::string_view to_string(LayerKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<LayerKind> parse_layer_kind(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<LayerKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ParallelConfig c) noexcept { return kConfigNames[static_cast<std::size_t>(c)]; }

std::optional<ParallelConfig> parse_config(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kConfigNames.size(); ++i) {
    if (kConfigNames[i] == s) return static_cast<ParallelConfig>(i);
  }
  return std::nullopt;
}

Dims Shape::batched(std::size_t batch) const {
  if (flat) return {batch, channels};
  return {batch, channels, rows, cols};
}

std::string to_string(const Shape& s) {
  std::ostringstream os;
  if (s.flat) {
    os << s.channels;
  } else {
    os << s.channels << 'x' << s.rows << 'x' << s.cols;
  }
  return os.str();
}

std::vector<std::string> validate_model(const ModelSpec& model) {
  std::vector<std::string> v;
  const auto& in = model.input;
  if (in.channels == 0 || in.rows == 0 || in.cols == 0) v.push_back("input shape has a zero extent");
  if (model.num_classes == 0) v.push_back("num_classes is zero");
  if (model.layers.empty()) {
    v.push_back("model has no layers");
    return v;
  }
  if (model.layers.front().kind != LayerKind::ConvInt) v.push_back("first layer must be conv_int");
  const auto& last = model.layers.back();
  if (last.kind != LayerKind::FcIntOut) {
    v.push_back("last layer must be fc_int_out");
  } else if (last.out_shape != Shape::vector(model.num_classes)) {
    v.push_back("last layer output " + to_string(last.out_shape) + " does not match num_classes " +
                std::to_string(model.num_classes));
  }

  Shape expected = in.shape();
  Domain domain = Domain::Integer;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const Shape& s = l.in_shape;
    if (s != expected) {
      v.push_back("shape chain broken at layer " + std::to_string(i + 1) + ": expected input " +
                  to_string(expected) + ", declared " + to_string(s));
    }
    if (i > 0 && l.kind == LayerKind::ConvInt) v.push_back("conv_int is only allowed as the first layer" + at(i));

    const bool needs_binary = l.kind == LayerKind::ConvBin || l.kind == LayerKind::FcBin || l.kind == LayerKind::FcIntOut;
    const bool needs_integer = l.kind == LayerKind::ConvInt || l.kind == LayerKind::Step;
    if (needs_binary && domain != Domain::Binary) v.push_back(std::string(to_string(l.kind)) + " needs binary input" + at(i));
    if (needs_integer && domain != Domain::Integer) v.push_back(std::string(to_string(l.kind)) + " needs integer input" + at(i));

    switch (l.kind) {
      case LayerKind::ConvInt:
      case LayerKind::ConvBin: {
        if (s.flat) v.push_back("convolution over a flat input" + at(i));
        if (l.out_channels == 0) v.push_back("convolution with zero output channels" + at(i));
        if (l.out_shape != Shape::image(l.out_channels, s.rows, s.cols)) {
          v.push_back("convolution output " + to_string(l.out_shape) + " inconsistent with same padding" + at(i));
        }
        const Dims want{l.out_channels, s.channels, kKernelSize, kKernelSize};
        if (l.weights.dims() != want) v.push_back("convolution weight dims mismatch" + at(i));
        domain = Domain::Integer;
        break;
      }
      case LayerKind::MaxPool: {
        if (s.flat) v.push_back("maxpool over a flat input" + at(i));
        if (s.rows % kPoolWindow != 0 || s.cols % kPoolWindow != 0) v.push_back("maxpool over odd spatial dims" + at(i));
        if (l.out_shape != Shape::image(s.channels, s.rows / kPoolWindow, s.cols / kPoolWindow)) {
          v.push_back("maxpool output " + to_string(l.out_shape) + " is not half the input" + at(i));
        }
        break;
      }
      case LayerKind::Step: {
        if (l.out_shape != s) v.push_back("step output shape differs from input" + at(i));
        if (l.thresholds.size() != s.channels) v.push_back("step threshold count differs from channel count" + at(i));
        if (l.directions.size() != s.channels) v.push_back("step direction count differs from channel count" + at(i));
        domain = Domain::Binary;
        break;
      }
      case LayerKind::Flatten: {
        if (l.out_shape != Shape::vector(s.count())) v.push_back("flatten output length is not the input size" + at(i));
        break;
      }
      case LayerKind::FcBin:
      case LayerKind::FcIntOut: {
        if (!s.flat) v.push_back("fully connected layer needs a flat input" + at(i));
        if (!l.out_shape.flat || l.out_shape.channels == 0) v.push_back("fully connected output must be a non-empty vector" + at(i));
        const Dims want{l.out_shape.channels, s.channels};
        if (l.weights.dims() != want) v.push_back("fully connected weight dims mismatch" + at(i));
        if (l.kind == LayerKind::FcIntOut && i + 1 != model.layers.size()) {
          v.push_back("fc_int_out is only allowed as the last layer" + at(i));
        }
        domain = Domain::Integer;
        break;
      }
    }
    expected = l.out_shape;
  }
  return v;
}

}  // namespace bnn
