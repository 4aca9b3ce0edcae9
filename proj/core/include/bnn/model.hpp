#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bnn/bits.hpp"

namespace bnn {

inline constexpr std::size_t kKernelSize = 3;  // 3x3 convolution, same padding, stride 1
inline constexpr std::size_t kKernelTaps = kKernelSize * kKernelSize;
inline constexpr std::size_t kPoolWindow = 2;  // 2x2 max pool, stride 2

enum class LayerKind { ConvInt, ConvBin, MaxPool, Step, Flatten, FcBin, FcIntOut };

std::string_view to_string(LayerKind kind) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view s) noexcept;

/// Per-image extent at a layer boundary. One-dimensional boundaries (after
/// Flatten, around FC layers) set `flat` and hold their length in `channels`.
struct Shape {
  std::size_t channels = 0;
  std::size_t rows = 1;
  std::size_t cols = 1;
  bool flat = false;

  static Shape image(std::size_t c, std::size_t h, std::size_t w) { return {c, h, w, false}; }
  static Shape vector(std::size_t n) { return {n, 1, 1, true}; }

  std::size_t count() const noexcept { return channels * rows * cols; }
  Dims batched(std::size_t batch) const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

enum class StepDirection : unsigned char { Pos, Neg };

/// One layer of a network. Fields not used by a kind stay empty.
struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  Shape in_shape;
  Shape out_shape;
  std::size_t out_channels = 0;        // ConvInt / ConvBin
  BinaryTensor weights;                // conv: [K][C][3][3], fc: [M][L]
  IntTensor thresholds;                // Step: [C]
  std::vector<StepDirection> directions;  // Step: one per channel
};

struct InputSpec {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  Shape shape() const { return Shape::image(channels, rows, cols); }
  friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

struct ModelSpec {
  std::string name;
  InputSpec input;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 0;
};

/// Every invariant violation of the model; empty means valid.
/// Layers are numbered from 1 in messages.
std::vector<std::string> validate_model(const ModelSpec& model);

/// The eight per-layer implementations: sequential reference plus the seven
/// combinations of the Data (X), Window (Y) and Neuron (Z) axes.
enum class ParallelConfig : unsigned char { CPU, X, Y, Z, XY, XZ, YZ, XYZ };

inline constexpr std::array<ParallelConfig, 8> kAllConfigs = {
    ParallelConfig::CPU, ParallelConfig::X,  ParallelConfig::Y,  ParallelConfig::Z,
    ParallelConfig::XY,  ParallelConfig::XZ, ParallelConfig::YZ, ParallelConfig::XYZ};

std::string_view to_string(ParallelConfig c) noexcept;
std::optional<ParallelConfig> parse_config(std::string_view s) noexcept;

constexpr bool uses_data_axis(ParallelConfig c) noexcept {
  return c == ParallelConfig::X || c == ParallelConfig::XY || c == ParallelConfig::XZ || c == ParallelConfig::XYZ;
}
constexpr bool uses_window_axis(ParallelConfig c) noexcept {
  return c == ParallelConfig::Y || c == ParallelConfig::XY || c == ParallelConfig::YZ || c == ParallelConfig::XYZ;
}
constexpr bool uses_neuron_axis(ParallelConfig c) noexcept {
  return c == ParallelConfig::Z || c == ParallelConfig::XZ || c == ParallelConfig::YZ || c == ParallelConfig::XYZ;
}

/// Flatten runs on the sequential path only; every other kind accepts all eight.
constexpr bool is_applicable(LayerKind kind, ParallelConfig c) noexcept {
  return kind != LayerKind::Flatten || c == ParallelConfig::CPU;
}

}  // namespace bnn
