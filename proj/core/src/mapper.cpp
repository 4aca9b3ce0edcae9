#include "bnn/mapper.hpp"

#include <algorithm>
#include <limits>

#include "bnn/error.hpp"

namespace bnn {

namespace {

__extension__ typedef __int128 Wide;

[[noreturn]] void incomplete(const std::vector<ProfileKey>& missing) {
  std::string msg = "profile table is missing " + std::to_string(missing.size()) + " cell(s):";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& k = missing[i];
    msg += " (layer " + std::to_string(k.layer + 1) + ", " + std::string(to_string(k.config)) + ", batch " +
           std::to_string(k.batch) + ")";
  }
  if (shown < missing.size()) msg += " ...";
  fail(ErrorCode::IncompleteTable, msg);
}

/// a_ns / a_batch <= (b_ns / b_batch) * (1 + tolerance)
bool per_image_within(std::int64_t a_ns, std::size_t a_batch, std::int64_t b_ns, std::size_t b_batch,
                      double tolerance) {
  if (tolerance <= 0.0) {
    return static_cast<Wide>(a_ns) * static_cast<Wide>(b_batch) <= static_cast<Wide>(b_ns) * static_cast<Wide>(a_batch);
  }
  return static_cast<long double>(a_ns) * b_batch <=
         static_cast<long double>(b_ns) * a_batch * (1.0L + tolerance);
}

}  // namespace

std::vector<LayerKind> layer_kinds(const ModelSpec& model) {
  std::vector<LayerKind> kinds;
  kinds.reserve(model.layers.size());
  for (const auto& l : model.layers) kinds.push_back(l.kind);
  return kinds;
}

std::vector<BatchChoice> per_batch_choices(const ProfileTable& table, std::span<const LayerKind> kinds,
                                           const MapperOptions& options) {
  if (const auto missing = table.missing_cells(kinds); !missing.empty()) incomplete(missing);

  // Canonical order, independent of how the table lists its configurations.
  std::vector<ParallelConfig> configs;
  for (ParallelConfig c : kAllConfigs) {
    if (std::find(table.metadata.configs.begin(), table.metadata.configs.end(), c) != table.metadata.configs.end()) {
      configs.push_back(c);
    }
  }
  std::vector<std::size_t> batches = table.metadata.batch_sizes;
  std::sort(batches.begin(), batches.end());
  batches.erase(std::unique(batches.begin(), batches.end()), batches.end());
  if (batches.empty()) fail(ErrorCode::IncompleteTable, "profile table has no batch sizes");

  std::vector<BatchChoice> choices;
  for (std::size_t batch : batches) {
    BatchChoice choice{batch, {}, 0, 0};
    std::vector<std::int64_t> chosen_ns;
    for (std::size_t layer = 0; layer < kinds.size(); ++layer) {
      const ProfileEntry* best = nullptr;
      ParallelConfig best_config = ParallelConfig::CPU;
      for (ParallelConfig c : configs) {
        if (!is_applicable(kinds[layer], c)) continue;
        const ProfileEntry* e = table.find({layer, c, batch});
        if (!best || e->total_ns() < best->total_ns()) {
          best = e;
          best_config = c;
        }
      }
      if (!best) {
        fail(ErrorCode::IncompleteTable, "no applicable configuration profiled for layer " + std::to_string(layer + 1));
      }
      choice.assignments.push_back(best_config);
      chosen_ns.push_back(best->total_ns());
      choice.optimal_ns += best->total_ns();
    }
    choice.batch_ns = choice.optimal_ns;

    // Spend the slack on falling back to CPU, cheapest fallback first.
    if (options.tie_tolerance > 0.0 && configs.front() == ParallelConfig::CPU) {
      std::vector<std::pair<std::int64_t, std::size_t>> losses;
      for (std::size_t layer = 0; layer < kinds.size(); ++layer) {
        if (choice.assignments[layer] == ParallelConfig::CPU) continue;
        const ProfileEntry* cpu = table.find({layer, ParallelConfig::CPU, batch});
        if (cpu) losses.emplace_back(cpu->total_ns() - chosen_ns[layer], layer);
      }
      std::sort(losses.begin(), losses.end());
      const long double budget = static_cast<long double>(choice.optimal_ns) * options.tie_tolerance;
      std::int64_t spent = 0;
      for (const auto& [loss, layer] : losses) {
        if (static_cast<long double>(spent + loss) > budget) break;
        spent += loss;
        choice.assignments[layer] = ParallelConfig::CPU;
      }
      choice.batch_ns += spent;
    }
    choices.push_back(std::move(choice));
  }
  return choices;
}

ExecPlan select_plan(const ProfileTable& table, std::span<const LayerKind> kinds, const MapperOptions& options) {
  const std::vector<BatchChoice> choices = per_batch_choices(table, kinds, options);

  const BatchChoice* best = &choices.front();
  for (const BatchChoice& c : choices) {
    if (!per_image_within(best->optimal_ns, best->batch, c.optimal_ns, c.batch, 0.0)) best = &c;
  }
  // Smallest batch whose per-image time is within the band of the optimum.
  const BatchChoice* chosen = best;
  for (const BatchChoice& c : choices) {
    if (per_image_within(c.batch_ns, c.batch, best->optimal_ns, best->batch, options.tie_tolerance)) {
      chosen = &c;
      break;
    }
  }

  ExecPlan plan;
  plan.model_name = table.metadata.model_name;
  plan.model_hash = table.metadata.model_hash;
  plan.batch_size = chosen->batch;
  plan.assignments = chosen->assignments;
  plan.predicted_batch_ns = chosen->batch_ns;
  plan.dataset_images = table.metadata.dataset_images;
  plan.predicted_total_ns = scale_to_dataset(chosen->batch_ns, chosen->batch, plan.dataset_images);
  plan.workers = table.metadata.workers;
  plan.window_rows = table.metadata.window_rows;
  return plan;
}

ExecPlan select_plan(const ProfileTable& table, const ModelSpec& model, const MapperOptions& options) {
  const auto kinds = layer_kinds(model);
  return select_plan(table, kinds, options);
}

std::vector<ParallelConfig> uniform_assignment(std::span<const LayerKind> kinds, ParallelConfig config) {
  std::vector<ParallelConfig> out;
  out.reserve(kinds.size());
  for (LayerKind k : kinds) out.push_back(is_applicable(k, config) ? config : ParallelConfig::CPU);
  return out;
}

Baselines baseline_plans(const ModelSpec& model) {
  const auto kinds = layer_kinds(model);
  return {uniform_assignment(kinds, ParallelConfig::CPU), uniform_assignment(kinds, ParallelConfig::X),
          uniform_assignment(kinds, ParallelConfig::XYZ)};
}

std::int64_t predicted_batch_ns(const ProfileTable& table, std::span<const ParallelConfig> assignments,
                                std::size_t batch) {
  std::int64_t sum = 0;
  std::vector<ProfileKey> missing;
  for (std::size_t layer = 0; layer < assignments.size(); ++layer) {
    const ProfileKey key{layer, assignments[layer], batch};
    if (const ProfileEntry* e = table.find(key)) {
      sum += e->total_ns();
    } else {
      missing.push_back(key);
    }
  }
  if (!missing.empty()) incomplete(missing);
  return sum;
}

std::int64_t scale_to_dataset(std::int64_t batch_ns, std::size_t batch, std::size_t images) {
  if (images == 0 || batch == 0) return batch_ns;
  return batch_ns * static_cast<std::int64_t>((images + batch - 1) / batch);
}

std::vector<std::size_t> batch_sweep(int lower_exp, int upper_exp) {
  if (lower_exp < 0 || upper_exp > 16 || lower_exp > upper_exp) {
    fail(ErrorCode::BadRange, "batch exponent range [" + std::to_string(lower_exp) + ", " +
                                  std::to_string(upper_exp) + "] must satisfy 0 <= lower <= upper <= 16");
  }
  std::vector<std::size_t> out;
  for (int e = lower_exp; e <= upper_exp; ++e) out.push_back(std::size_t{1} << e);
  return out;
}

}  // namespace bnn
