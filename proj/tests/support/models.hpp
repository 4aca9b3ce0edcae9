#pragma once

// Small randomized models for tests.

#include <random>

#include "bnn/model.hpp"
#include "oracles.hpp"

namespace testmodels {

class Chain {
 public:
  Chain(bnn::InputSpec input, std::uint64_t seed) : rng_(seed), shape_(input.shape()) {
    model_.name = "tiny";
    model_.input = input;
  }

  Chain& conv(std::size_t k) {
    bnn::LayerSpec l;
    l.kind = model_.layers.empty() ? bnn::LayerKind::ConvInt : bnn::LayerKind::ConvBin;
    l.in_shape = shape_;
    l.out_channels = k;
    l.out_shape = bnn::Shape::image(k, shape_.rows, shape_.cols);
    l.weights = oracle::random_binary({k, shape_.channels, 3, 3}, rng_);
    bits_ = shape_.channels * 9 * (l.kind == bnn::LayerKind::ConvInt ? 64 : 1);
    return push(std::move(l));
  }

  Chain& pool() {
    bnn::LayerSpec l;
    l.kind = bnn::LayerKind::MaxPool;
    l.in_shape = shape_;
    l.out_shape = bnn::Shape::image(shape_.channels, shape_.rows / 2, shape_.cols / 2);
    return push(std::move(l));
  }

  /// Thresholds near zero and mixed directions so both outcomes occur.
  Chain& step() {
    bnn::LayerSpec l;
    l.kind = bnn::LayerKind::Step;
    l.in_shape = shape_;
    l.out_shape = shape_;
    std::vector<std::int32_t> t(shape_.channels);
    const auto span = static_cast<std::int64_t>(std::max<std::size_t>(bits_ / 4, 1));
    for (auto& v : t) v = static_cast<std::int32_t>(static_cast<std::int64_t>(rng_() % (2 * span + 1)) - span);
    l.thresholds = bnn::IntTensor({shape_.channels}, std::move(t));
    for (std::size_t c = 0; c < shape_.channels; ++c) {
      l.directions.push_back(rng_() % 4 == 0 ? bnn::StepDirection::Neg : bnn::StepDirection::Pos);
    }
    return push(std::move(l));
  }

  Chain& flatten() {
    bnn::LayerSpec l;
    l.kind = bnn::LayerKind::Flatten;
    l.in_shape = shape_;
    l.out_shape = bnn::Shape::vector(shape_.count());
    return push(std::move(l));
  }

  Chain& fc(std::size_t m, bool last = false) {
    bnn::LayerSpec l;
    l.kind = last ? bnn::LayerKind::FcIntOut : bnn::LayerKind::FcBin;
    l.in_shape = shape_;
    l.out_shape = bnn::Shape::vector(m);
    l.weights = oracle::random_binary({m, shape_.channels}, rng_);
    bits_ = shape_.channels;
    if (last) model_.num_classes = m;
    return push(std::move(l));
  }

  bnn::ModelSpec build() const { return model_; }

 private:
  Chain& push(bnn::LayerSpec l) {
    shape_ = l.out_shape;
    model_.layers.push_back(std::move(l));
    return *this;
  }

  std::mt19937_64 rng_;
  bnn::ModelSpec model_;
  bnn::Shape shape_;
  std::size_t bits_ = 1;
};

/// Every layer kind, with odd channel and neuron counts to exercise word tails.
inline bnn::ModelSpec tiny(std::uint64_t seed, std::size_t channels = 2, std::size_t side = 8) {
  return Chain({channels, side, side}, seed)
      .conv(5)
      .step()
      .conv(70)
      .pool()
      .step()
      .flatten()
      .fc(67)
      .step()
      .fc(10, true)
      .build();
}

}  // namespace testmodels
