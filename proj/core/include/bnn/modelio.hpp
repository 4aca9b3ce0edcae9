#pragma once

// On-disk formats: *.model.json, dataset CSV, *.plan.json, *.profile.json.
// See docs/model-format.md and docs/profile-format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnn/bits.hpp"
#include "bnn/mapper.hpp"
#include "bnn/model.hpp"
#include "bnn/profiler.hpp"

namespace bnn {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kPlanFormatVersion = 1;
inline constexpr int kProfileFormatVersion = 1;

// Encoding helpers (OpenSSL-backed).
std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Parse on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Little-endian byte image of packed words.
std::vector<std::uint8_t> words_to_bytes(std::span<const Word> words);

// Models

/// Canonical serialization; identical models give identical bytes.
std::string serialize_model(const ModelSpec& model);
/// Throws Parse / UnsupportedVersion / Validation.
ModelSpec parse_model(std::string_view text);
ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& model, const std::filesystem::path& path);
/// SHA-256 of the canonical serialization.
std::string model_hash(const ModelSpec& model);

enum class Architecture { Fashion, Cifar10 };
std::optional<Architecture> parse_architecture(std::string_view s) noexcept;

/// Random ±1 weights and per-channel thresholds drawn uniformly from
/// [-n, +n] where n is the number of bits (taps) feeding the thresholded
/// value. Deterministic in `seed`.
ModelSpec export_synthetic_model(Architecture arch, std::uint64_t seed);

// Datasets

struct Dataset {
  IntTensor images;  // [N][C][H][W], raw 0..255
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

/// CSV rows: label, then C*H*W pixels in channel-major, row-major order.
/// `num_classes` of zero skips the label range check.
Dataset load_dataset(const std::filesystem::path& path, const InputSpec& input, std::size_t num_classes = 0);
Dataset parse_dataset(std::string_view text, const InputSpec& input, std::size_t num_classes = 0);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset synthetic_dataset(const InputSpec& input, std::size_t count, std::size_t num_classes, std::uint64_t seed);

// Plans

std::string serialize_plan(const ExecPlan& plan);
ExecPlan parse_plan(std::string_view text);
void save_plan(const ExecPlan& plan, const std::filesystem::path& path);
ExecPlan load_plan(const std::filesystem::path& path);
/// Also throws ModelHashMismatch when the plan was tuned for another model.
ExecPlan load_plan(const std::filesystem::path& path, const ModelSpec& model);
void check_plan_matches(const ExecPlan& plan, const ModelSpec& model);

// Profile tables

std::string serialize_profile(const ProfileTable& table);
ProfileTable parse_profile(std::string_view text);
void save_profile(const ProfileTable& table, const std::filesystem::path& path);
ProfileTable load_profile(const std::filesystem::path& path);

// Files

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace bnn
