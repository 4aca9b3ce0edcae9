#include <random>

#include "bnn/error.hpp"
#include "bnn/modelio.hpp"

namespace bnn {

namespace {

class Builder {
 public:
  Builder(std::string name, InputSpec input, std::size_t classes, std::uint64_t seed)
      : rng_(seed) {
    model_.name = std::move(name);
    model_.input = input;
    model_.num_classes = classes;
    shape_ = input.shape();
  }

  void conv(std::size_t out_channels) {
    LayerSpec l;
    l.kind = model_.layers.empty() ? LayerKind::ConvInt : LayerKind::ConvBin;
    l.in_shape = shape_;
    l.out_channels = out_channels;
    l.out_shape = Shape::image(out_channels, shape_.rows, shape_.cols);
    l.weights = random_bits(Dims{out_channels, shape_.channels, kKernelSize, kKernelSize});
    window_bits_ = shape_.channels * kKernelTaps;
    push(std::move(l));
  }

  void maxpool() {
    LayerSpec l;
    l.kind = LayerKind::MaxPool;
    l.in_shape = shape_;
    l.out_shape = Shape::image(shape_.channels, shape_.rows / kPoolWindow, shape_.cols / kPoolWindow);
    push(std::move(l));
  }

  void step() {
    LayerSpec l;
    l.kind = LayerKind::Step;
    l.in_shape = shape_;
    l.out_shape = shape_;
    const auto n = static_cast<std::int64_t>(window_bits_);
    std::vector<std::int32_t> t(shape_.channels);
    for (auto& v : t) v = static_cast<std::int32_t>(static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(2 * n + 1)) - n);
    l.thresholds = IntTensor(Dims{shape_.channels}, std::move(t));
    l.directions.assign(shape_.channels, StepDirection::Pos);
    push(std::move(l));
  }

  void flatten() {
    LayerSpec l;
    l.kind = LayerKind::Flatten;
    l.in_shape = shape_;
    l.out_shape = Shape::vector(shape_.count());
    push(std::move(l));
  }

  void fc(std::size_t neurons, bool last) {
    LayerSpec l;
    l.kind = last ? LayerKind::FcIntOut : LayerKind::FcBin;
    l.in_shape = shape_;
    l.out_shape = Shape::vector(neurons);
    l.weights = random_bits(Dims{neurons, shape_.channels});
    window_bits_ = shape_.channels;
    push(std::move(l));
  }

  ModelSpec finish() { return std::move(model_); }

 private:
  BinaryTensor random_bits(Dims dims) {
    std::vector<Word> words(words_for(element_count(dims)));
    for (auto& w : words) w = rng_();
    return BinaryTensor(std::move(dims), std::move(words));
  }

  void push(LayerSpec l) {
    shape_ = l.out_shape;
    model_.layers.push_back(std::move(l));
  }

  std::mt19937_64 rng_;
  ModelSpec model_;
  Shape shape_;
  std::size_t window_bits_ = 0;
};

}  // namespace

std::optional<Architecture> parse_architecture(std::string_view s) noexcept {
  if (s == "fashion") return Architecture::Fashion;
  if (s == "cifar10") return Architecture::Cifar10;
  return std::nullopt;
}

ModelSpec export_synthetic_model(Architecture arch, std::uint64_t seed) {
  if (arch == Architecture::Fashion) {
    // In -> C64 -> MP14 -> S -> C64 -> MP7 -> S -> FLAT -> FC2048 -> S -> FC2048 -> 10
    Builder b("fashion", InputSpec{1, 28, 28}, 10, seed);
    b.conv(64);
    b.maxpool();
    b.step();
    b.conv(64);
    b.maxpool();
    b.step();
    b.flatten();
    b.fc(2048, false);
    b.step();
    b.fc(10, true);
    return b.finish();
  }
  // In -> C64 -> S -> C64 -> MP16 -> S -> C256 -> S -> C256 -> MP8 -> S -> C512 -> S -> C512 -> MP4 -> S
  //    -> FLAT -> FC1024 -> S -> FC1024 -> 10
  Builder b("cifar10", InputSpec{3, 32, 32}, 10, seed);
  b.conv(64);
  b.step();
  b.conv(64);
  b.maxpool();
  b.step();
  b.conv(256);
  b.step();
  b.conv(256);
  b.maxpool();
  b.step();
  b.conv(512);
  b.step();
  b.conv(512);
  b.maxpool();
  b.step();
  b.flatten();
  b.fc(1024, false);
  b.step();
  b.fc(10, true);
  return b.finish();
}

}  // namespace bnn
