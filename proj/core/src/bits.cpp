#include "bnn/bits.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "bnn/error.hpp"

namespace bnn {

std::size_t element_count(const Dims& dims) noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

BinaryTensor::BinaryTensor(Dims dims)
    : dims_(std::move(dims)),
      size_(element_count(dims_)),
      words_(words_for(size_), 0),
      mask_(words_for(size_), ~Word{0}) {
  if (!mask_.empty()) mask_.back() &= low_mask(size_ - (mask_.size() - 1) * kWordBits);
}

BinaryTensor::BinaryTensor(Dims dims, std::vector<Word> words, std::vector<Word> mask)
    : dims_(std::move(dims)), size_(element_count(dims_)), words_(std::move(words)), mask_(std::move(mask)) {
  const std::size_t n = words_for(size_);
  if (words_.size() != n) {
    fail(ErrorCode::LengthMismatch, "expected " + std::to_string(n) + " words, got " +
                                        std::to_string(words_.size()));
  }
  if (mask_.empty()) {
    mask_.assign(n, ~Word{0});
  } else if (mask_.size() != n) {
    fail(ErrorCode::LengthMismatch, "validity mask length mismatch");
  }
  if (n > 0) mask_.back() &= low_mask(size_ - (n - 1) * kWordBits);
  for (std::size_t w = 0; w < n; ++w) words_[w] &= mask_[w];
}

int BinaryTensor::value(std::size_t i) const noexcept {
  if (!valid(i)) return 0;
  return bit(i) ? 1 : -1;
}

BinaryTensor BinaryTensor::reshaped(Dims dims) const {
  if (element_count(dims) != size_) fail(ErrorCode::ShapeMismatch, "reshape changes element count");
  BinaryTensor out = *this;
  out.dims_ = std::move(dims);
  return out;
}

IntTensor::IntTensor(Dims d) : dims(std::move(d)), values(element_count(dims), 0) {}

IntTensor::IntTensor(Dims d, std::vector<std::int32_t> v) : dims(std::move(d)), values(std::move(v)) {
  if (values.size() != element_count(dims)) {
    fail(ErrorCode::LengthMismatch, "int tensor has " + std::to_string(values.size()) +
                                        " values for " + std::to_string(element_count(dims)) +
                                        " positions");
  }
}

BinaryTensor pack_bits(std::span<const int> values, const Dims& dims) {
  const std::size_t n = element_count(dims);
  if (values.size() != n) {
    fail(ErrorCode::LengthMismatch,
         "pack_bits: " + std::to_string(values.size()) + " values for " + std::to_string(n) + " positions");
  }
  std::vector<Word> words(words_for(n), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] == 1) {
      words[i / kWordBits] |= Word{1} << (i % kWordBits);
    } else if (values[i] != -1) {
      fail(ErrorCode::NonBinaryValue, "pack_bits: value " + std::to_string(values[i]) + " at index " +
                                          std::to_string(i) + " is not +1/-1");
    }
  }
  return BinaryTensor(dims, std::move(words));
}

std::vector<int> unpack_bits(const BinaryTensor& t) {
  std::vector<int> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t.value(i);
  return out;
}

BitSlice whole(const BinaryTensor& t) noexcept { return BitSlice{&t, 0, t.size()}; }

void extract_bits(std::span<const Word> src, std::size_t offset, std::size_t length,
                  std::span<Word> dst) noexcept {
  const std::size_t n = words_for(length);
  const std::size_t shift = offset % kWordBits;
  const std::size_t first = offset / kWordBits;
  for (std::size_t w = 0; w < n; ++w) {
    Word lo = src[first + w] >> shift;
    if (shift != 0 && first + w + 1 < src.size()) lo |= src[first + w + 1] << (kWordBits - shift);
    dst[w] = lo;
  }
  if (n > 0) dst[n - 1] &= low_mask(length - (n - 1) * kWordBits);
}

std::int64_t xnor_popcount_dot(const BitSlice& a, const BitSlice& b) {
  if (a.length != b.length) {
    fail(ErrorCode::LengthMismatch, "xnor_popcount_dot: slice lengths " + std::to_string(a.length) +
                                        " and " + std::to_string(b.length));
  }
  if (a.offset + a.length > a.tensor->size() || b.offset + b.length > b.tensor->size()) {
    fail(ErrorCode::LengthMismatch, "xnor_popcount_dot: slice exceeds tensor");
  }
  const std::size_t n = words_for(a.length);
  std::vector<Word> wa(n), wb(n), ma(n), mb(n);
  extract_bits(a.tensor->words(), a.offset, a.length, wa);
  extract_bits(b.tensor->words(), b.offset, b.length, wb);
  extract_bits(a.tensor->valid_mask(), a.offset, a.length, ma);
  extract_bits(b.tensor->valid_mask(), b.offset, b.length, mb);

  std::int64_t agree = 0;
  std::int64_t bits = 0;
  for (std::size_t w = 0; w < n; ++w) {
    const Word m = ma[w] & mb[w];
    agree += std::popcount(~(wa[w] ^ wb[w]) & m);
    bits += std::popcount(m);
  }
  return 2 * agree - bits;
}

}  // namespace bnn
