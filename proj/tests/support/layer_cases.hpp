#pragma once

// Randomized layer cases checked against the scalar oracles. Each returns an
// empty string on agreement, otherwise a description of the first mismatch.
// Shared by the unit tests and the acceptance runner.

#include <random>
#include <sstream>
#include <string>

#include "bnn/layers.hpp"
#include "oracles.hpp"

namespace cases {

inline std::string compare(const oracle::Ints& got, const oracle::Ints& want, const std::string& what) {
  if (got.size() != want.size()) {
    return what + ": size " + std::to_string(got.size()) + " vs " + std::to_string(want.size());
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i] != want[i]) {
      std::ostringstream os;
      os << what << ": index " << i << " got " << got[i] << " want " << want[i];
      return os.str();
    }
  }
  return {};
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }

/// Mostly small extents with an occasional full 32x32x8 case.
inline std::size_t side(std::mt19937_64& rng) { return rng() % 16 == 0 ? 32 : pick(rng, 1, 12); }

inline std::string conv_int(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 2), C = pick(rng, 1, 3), H = side(rng), W = side(rng), K = pick(rng, 1, 8);
  const bnn::IntTensor in = oracle::random_pixels({B, C, H, W}, rng);
  const bnn::BinaryTensor w = oracle::random_binary({K, C, 3, 3}, rng);
  const auto got = oracle::values_of(bnn::conv_int_forward(in, w, K));
  return compare(got, oracle::conv(oracle::values_of(in), B, C, H, W, oracle::values_of(w), K), "conv_int");
}

inline std::string conv_bin(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 2), H = side(rng), W = side(rng), K = pick(rng, 1, 8);
  const std::size_t C = rng() % 8 == 0 ? pick(rng, 60, 70) : pick(rng, 1, 8);
  const bnn::BinaryTensor in = oracle::random_binary({B, C, H, W}, rng);
  const bnn::BinaryTensor w = oracle::random_binary({K, C, 3, 3}, rng);
  const auto got = oracle::values_of(bnn::conv_bin_forward(in, w, K));
  return compare(got, oracle::conv(oracle::values_of(in), B, C, H, W, oracle::values_of(w), K), "conv_bin");
}

inline std::string maxpool(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 2), C = pick(rng, 1, 8), H = 2 * (side(rng) / 2 + 1), W = 2 * pick(rng, 1, 8);
  const bnn::Shape shape = bnn::Shape::image(C, H, W);
  if (rng() & 1U) {
    const bnn::BinaryTensor in = oracle::random_binary(shape.batched(B), rng);
    const auto got = oracle::values_of(bnn::maxpool_forward(bnn::Activation(in, shape)));
    return compare(got, oracle::maxpool(oracle::values_of(in), B, C, H, W), "maxpool binary");
  }
  bnn::IntTensor in(shape.batched(B));
  for (auto& v : in.values) v = static_cast<std::int32_t>(rng() % 2001) - 1000;
  const auto got = oracle::values_of(bnn::maxpool_forward(bnn::Activation(in, shape)));
  return compare(got, oracle::maxpool(oracle::values_of(in), B, C, H, W), "maxpool integer");
}

inline std::string step(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 3), C = pick(rng, 1, 70);
  const bool flat = rng() & 1U;
  const std::size_t H = flat ? 1 : side(rng), W = flat ? 1 : side(rng);
  const bnn::Dims dims = flat ? bnn::Dims{B, C} : bnn::Dims{B, C, H, W};
  bnn::IntTensor in(dims);
  for (auto& v : in.values) v = static_cast<std::int32_t>(rng() % 21) - 10;
  bnn::IntTensor t({C});
  std::vector<bnn::StepDirection> dirs(C);
  for (std::size_t c = 0; c < C; ++c) {
    t.values[c] = static_cast<std::int32_t>(rng() % 21) - 10;
    dirs[c] = (rng() & 1U) ? bnn::StepDirection::Pos : bnn::StepDirection::Neg;
  }
  const auto got = oracle::values_of(bnn::step_forward(in, t, dirs));
  return compare(got, oracle::step(oracle::values_of(in), B, C, H * W, oracle::values_of(t), dirs), "step");
}

inline std::string flatten(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 3), C = pick(rng, 1, 8), H = side(rng), W = side(rng);
  const bnn::Shape shape = bnn::Shape::image(C, H, W);
  const bnn::Activation in(oracle::random_binary(shape.batched(B), rng), shape);
  const bnn::Activation out = bnn::flatten_forward(in);
  if (out.shape() != bnn::Shape::vector(C * H * W)) return "flatten: wrong output shape";
  // Explicit (b, c, i, j) -> (b, k) map.
  const auto src = oracle::values_of(in);
  oracle::Ints want(src.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          const std::size_t k = (c * H + i) * W + j;
          want[b * C * H * W + k] = src[((b * C + c) * H + i) * W + j];
        }
  return compare(oracle::values_of(out), want, "flatten");
}

inline std::string fc(std::mt19937_64& rng) {
  const std::size_t B = pick(rng, 1, 4), L = pick(rng, 1, 200), M = pick(rng, 1, 20);
  const bnn::BinaryTensor in = oracle::random_binary({B, L}, rng);
  const bnn::BinaryTensor w = oracle::random_binary({M, L}, rng);
  const auto got = oracle::values_of(bnn::fc_forward(in, w));
  return compare(got, oracle::fc(oracle::values_of(in), B, L, oracle::values_of(w), M), "fc");
}

struct Kind {
  const char* name;
  std::string (*run)(std::mt19937_64&);
};

inline void PrintTo(const Kind& k, std::ostream* os) { *os << k.name; }

inline constexpr Kind kAll[] = {{"conv_int", conv_int}, {"conv_bin", conv_bin}, {"maxpool", maxpool},
                                {"step", step},         {"flatten", flatten},   {"fc", fc}};

}  // namespace cases
