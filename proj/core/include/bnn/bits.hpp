#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bnn {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) noexcept {
  return (bits + kWordBits - 1) / kWordBits;
}

/// Mask selecting the low `bits` bits of a word (`bits` in [0, 64]).
constexpr Word low_mask(std::size_t bits) noexcept {
  return bits >= kWordBits ? ~Word{0} : ((Word{1} << bits) - 1);
}

/// Dimensions are ordered [batch][channel][row][col]; leading dims are optional.
using Dims = std::vector<std::size_t>;

std::size_t element_count(const Dims& dims) noexcept;

/// Bit-packed tensor of {-1,+1} values.
///
/// Bit i (little-endian within each 64-bit word) is 1 for +1 and 0 for -1.
/// `valid_mask` flags real elements; padding positions are 0 in both arrays.
/// Bits beyond `size()` are always zero.
class BinaryTensor {
 public:
  BinaryTensor() = default;

  /// All-(-1) tensor with every position valid.
  explicit BinaryTensor(Dims dims);

  /// Takes ownership of packed words. Canonicalizes: bits past the end are
  /// cleared and invalid positions are forced to 0. `mask` empty = all valid.
  BinaryTensor(Dims dims, std::vector<Word> words, std::vector<Word> mask = {});

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return size_; }
  std::span<const Word> words() const noexcept { return words_; }
  std::span<const Word> valid_mask() const noexcept { return mask_; }

  bool bit(std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  bool valid(std::size_t i) const noexcept { return (mask_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  /// +1 / -1 for valid positions, 0 for padding.
  int value(std::size_t i) const noexcept;

  /// Same bits reinterpreted under new dims of equal element count.
  BinaryTensor reshaped(Dims dims) const;

  friend bool operator==(const BinaryTensor&, const BinaryTensor&) = default;

 private:
  Dims dims_;
  std::size_t size_ = 0;
  std::vector<Word> words_;
  std::vector<Word> mask_;
};

/// Dense signed 32-bit tensor (pre-activations, thresholds, pixels, logits).
struct IntTensor {
  Dims dims;
  std::vector<std::int32_t> values;

  IntTensor() = default;
  explicit IntTensor(Dims d);
  IntTensor(Dims d, std::vector<std::int32_t> v);

  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const IntTensor&, const IntTensor&) = default;
};

/// Packs a sequence of ±1 values. Throws LengthMismatch / NonBinaryValue.
BinaryTensor pack_bits(std::span<const int> values, const Dims& dims);

/// Inverse of pack_bits; padding positions unpack to 0.
std::vector<int> unpack_bits(const BinaryTensor& t);

/// A window of `length` bits starting at bit `offset` of a tensor.
struct BitSlice {
  const BinaryTensor* tensor = nullptr;
  std::size_t offset = 0;
  std::size_t length = 0;
};

BitSlice whole(const BinaryTensor& t) noexcept;

/// Dot product of two ±1 vectors over their jointly valid positions,
/// computed as 2*popcount(xnor(a,b) & m) - popcount(m).
/// Throws LengthMismatch when the slices differ in length.
std::int64_t xnor_popcount_dot(const BitSlice& a, const BitSlice& b);

/// Copies `length` bits starting at `offset` into word-aligned storage.
/// Tail bits of the last destination word are cleared.
void extract_bits(std::span<const Word> src, std::size_t offset, std::size_t length,
                  std::span<Word> dst) noexcept;

}  // namespace bnn
