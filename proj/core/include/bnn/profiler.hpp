#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnn/engine.hpp"
#include "bnn/layers.hpp"
#include "bnn/model.hpp"

namespace bnn {

/// Spread above which a cell is reported as an unstable measurement.
inline constexpr double kUnstableSpread = 0.5;

struct ProfileKey {
  std::size_t layer = 0;  // 0-based
  ParallelConfig config = ParallelConfig::CPU;
  std::size_t batch = 0;

  friend auto operator<=>(const ProfileKey&, const ProfileKey&) = default;
};

struct ProfileEntry {
  std::int64_t overhead_ns = 0;  // median over reps
  std::int64_t compute_ns = 0;   // median over reps
  std::size_t reps = 0;
  double spread = 0.0;  // (max - min) / median of per-rep totals

  std::int64_t total_ns() const noexcept { return overhead_ns + compute_ns; }
  bool unstable() const noexcept { return spread > kUnstableSpread; }
  friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

struct ProfileMetadata {
  std::string model_name;
  std::string model_hash;
  std::size_t layer_count = 0;
  std::size_t workers = 0;
  std::size_t window_rows = 1;
  bool fuse_transfers = false;
  std::string host;
  std::string timestamp;
  std::size_t warmups = 0;
  std::size_t reps = 0;
  std::size_t dataset_images = 0;
  std::vector<ParallelConfig> configs;
  std::vector<std::size_t> batch_sizes;

  friend bool operator==(const ProfileMetadata&, const ProfileMetadata&) = default;
};

/// Measured (overhead, compute) per (layer, config, batch size).
struct ProfileTable {
  ProfileMetadata metadata;
  std::map<ProfileKey, ProfileEntry> entries;

  const ProfileEntry* find(const ProfileKey& key) const;
  /// Cells required by the metadata (every applicable config for every
  /// layer kind at every batch size) that have no entry.
  std::vector<ProfileKey> missing_cells(std::span<const LayerKind> kinds) const;

  friend bool operator==(const ProfileTable&, const ProfileTable&) = default;
};

struct TimingSample {
  std::int64_t overhead_ns = 0;
  std::int64_t compute_ns = 0;
};

/// Median of a non-empty sample; even sizes average the two middle values.
std::int64_t median(std::vector<std::int64_t> values);

/// Medians of overhead and compute, plus the spread of the totals.
/// Throws InvalidArgument on an empty sample.
ProfileEntry summarize(std::span<const TimingSample> samples);

/// Runs `run` W times discarding the result, then R timed times, and reduces
/// the R samples to medians. Throws InvalidArgument when R is zero.
ProfileEntry measure_repeated(std::size_t warmups, std::size_t reps, const std::function<TimingSample()>& run);

ProfileEntry profile_layer(Engine& engine, const PreparedLayer& layer, const Activation& input, ParallelConfig config,
                           std::size_t warmups, std::size_t reps);

/// First `batch` images of `images`, cycling when the dataset is smaller.
IntTensor take_batch(const IntTensor& images, std::size_t start, std::size_t batch);

struct ProfileRequest {
  std::vector<ParallelConfig> configs{kAllConfigs.begin(), kAllConfigs.end()};
  std::vector<std::size_t> batch_sizes;
  std::size_t warmups = 2;
  std::size_t reps = 5;
};

/// Called after each measured cell (for progress output and warnings).
using ProfileObserver = std::function<void(const ProfileKey&, const ProfileEntry&)>;

/// Profiles every applicable (layer, config, batch) cell. Layer inputs come
/// from the reference path on real dataset images and are shared by all
/// configurations of a (layer, batch) pair. Reps are taken in rounds over
/// all cells (warmups before a cell's first rep), batch order alternating
/// between rounds. Throws InvalidArgument on an empty dataset or zero reps.
ProfileTable profile_model(Engine& engine, const PreparedModel& model, const IntTensor& images,
                           const ProfileRequest& request, const ProfileObserver& observer = {});

}  // namespace bnn
