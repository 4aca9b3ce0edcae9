#include <nlohmann/json.hpp>

#include "bnn/error.hpp"
#include "bnn/modelio.hpp"

namespace bnn {

namespace {

using json = nlohmann::json;

json configs_json(const std::vector<ParallelConfig>& configs) {
  json a = json::array();
  for (ParallelConfig c : configs) a.push_back(std::string(to_string(c)));
  return a;
}

std::vector<ParallelConfig> parse_configs(const json& a) {
  std::vector<ParallelConfig> out;
  for (const json& v : a) {
    const auto tag = v.get<std::string>();
    const auto c = parse_config(tag);
    if (!c) fail(ErrorCode::Parse, "unknown configuration tag '" + tag + "'");
    out.push_back(*c);
  }
  return out;
}

void check_version(const json& j, int supported, const char* what) {
  const int version = j.at("format_version").get<int>();
  if (version != supported) {
    fail(ErrorCode::UnsupportedVersion, std::string(what) + " format version " + std::to_string(version) +
                                            " is not supported");
  }
}

template <typename F>
auto parse_json(std::string_view text, const char* what, F&& body) {
  try {
    return body(json::parse(text));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string(what) + " JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + " JSON: " + e.what());
  }
}

}  // namespace

std::string serialize_plan(const ExecPlan& plan) {
  const json j{
      {"format_version", kPlanFormatVersion},
      {"model", {{"name", plan.model_name}, {"hash", plan.model_hash}}},
      {"batch_size", plan.batch_size},
      {"assignments", configs_json(plan.assignments)},
      {"predicted_batch_ns", plan.predicted_batch_ns},
      {"predicted_total_ns", plan.predicted_total_ns},
      {"dataset_images", plan.dataset_images},
      {"workers", plan.workers},
      {"window_rows", plan.window_rows},
  };
  return j.dump(2) + "\n";
}

ExecPlan parse_plan(std::string_view text) {
  return parse_json(text, "plan", [](const json& j) {
    check_version(j, kPlanFormatVersion, "plan");
    ExecPlan p;
    p.model_name = j.at("model").at("name").get<std::string>();
    p.model_hash = j.at("model").at("hash").get<std::string>();
    p.batch_size = j.at("batch_size").get<std::size_t>();
    p.assignments = parse_configs(j.at("assignments"));
    p.predicted_batch_ns = j.at("predicted_batch_ns").get<std::int64_t>();
    p.predicted_total_ns = j.at("predicted_total_ns").get<std::int64_t>();
    p.dataset_images = j.at("dataset_images").get<std::size_t>();
    p.workers = j.at("workers").get<std::size_t>();
    p.window_rows = j.at("window_rows").get<std::size_t>();
    if (p.batch_size == 0) fail(ErrorCode::Parse, "plan batch_size must be positive");
    return p;
  });
}

void save_plan(const ExecPlan& plan, const std::filesystem::path& path) { write_file(path, serialize_plan(plan)); }

ExecPlan load_plan(const std::filesystem::path& path) { return parse_plan(read_file(path)); }

void check_plan_matches(const ExecPlan& plan, const ModelSpec& model) {
  const std::string hash = model_hash(model);
  if (plan.model_hash != hash) {
    fail(ErrorCode::ModelHashMismatch, "plan was tuned for model '" + plan.model_name + "' (" +
                                           plan.model_hash.substr(0, 12) + "), not '" + model.name + "' (" +
                                           hash.substr(0, 12) + ")");
  }
  if (plan.assignments.size() != model.layers.size()) {
    fail(ErrorCode::Validation, "plan has " + std::to_string(plan.assignments.size()) + " assignments for " +
                                    std::to_string(model.layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    if (!is_applicable(model.layers[i].kind, plan.assignments[i])) {
      fail(ErrorCode::Validation, "plan assigns " + std::string(to_string(plan.assignments[i])) + " to " +
                                      std::string(to_string(model.layers[i].kind)) + " layer " + std::to_string(i + 1));
    }
  }
}

ExecPlan load_plan(const std::filesystem::path& path, const ModelSpec& model) {
  ExecPlan plan = load_plan(path);
  check_plan_matches(plan, model);
  return plan;
}

std::string serialize_profile(const ProfileTable& table) {
  const auto& m = table.metadata;
  json entries = json::array();
  for (const auto& [key, e] : table.entries) {
    entries.push_back({{"layer", key.layer},
                       {"config", std::string(to_string(key.config))},
                       {"batch", key.batch},
                       {"overhead_ns", e.overhead_ns},
                       {"compute_ns", e.compute_ns},
                       {"reps", e.reps},
                       {"spread", e.spread}});
  }

  // Winning configuration per (batch, layer), kept for auditing; ignored on load.
  json argmin = json::array();
  for (std::size_t batch : m.batch_sizes) {
    json assignments = json::array();
    bool complete = true;
    for (std::size_t layer = 0; layer < m.layer_count && complete; ++layer) {
      const ProfileEntry* best = nullptr;
      ParallelConfig best_config = ParallelConfig::CPU;
      for (ParallelConfig c : kAllConfigs) {
        const ProfileEntry* e = table.find({layer, c, batch});
        if (e && (!best || e->total_ns() < best->total_ns())) {
          best = e;
          best_config = c;
        }
      }
      if (best) {
        assignments.push_back(std::string(to_string(best_config)));
      } else {
        complete = false;
      }
    }
    if (complete) argmin.push_back({{"batch", batch}, {"assignments", std::move(assignments)}});
  }

  const json j{
      {"format_version", kProfileFormatVersion},
      {"metadata",
       {{"model_name", m.model_name},
        {"model_hash", m.model_hash},
        {"layer_count", m.layer_count},
        {"workers", m.workers},
        {"window_rows", m.window_rows},
        {"fuse_transfers", m.fuse_transfers},
        {"host", m.host},
        {"timestamp", m.timestamp},
        {"warmups", m.warmups},
        {"reps", m.reps},
        {"dataset_images", m.dataset_images},
        {"configs", configs_json(m.configs)},
        {"batch_sizes", m.batch_sizes}}},
      {"entries", std::move(entries)},
      {"per_batch_argmin", std::move(argmin)},
  };
  return j.dump(1) + "\n";
}

ProfileTable parse_profile(std::string_view text) {
  return parse_json(text, "profile", [](const json& j) {
    check_version(j, kProfileFormatVersion, "profile");
    ProfileTable t;
    const json& m = j.at("metadata");
    auto& meta = t.metadata;
    meta.model_name = m.at("model_name").get<std::string>();
    meta.model_hash = m.at("model_hash").get<std::string>();
    meta.layer_count = m.at("layer_count").get<std::size_t>();
    meta.workers = m.at("workers").get<std::size_t>();
    meta.window_rows = m.at("window_rows").get<std::size_t>();
    meta.fuse_transfers = m.at("fuse_transfers").get<bool>();
    meta.host = m.at("host").get<std::string>();
    meta.timestamp = m.at("timestamp").get<std::string>();
    meta.warmups = m.at("warmups").get<std::size_t>();
    meta.reps = m.at("reps").get<std::size_t>();
    meta.dataset_images = m.at("dataset_images").get<std::size_t>();
    meta.configs = parse_configs(m.at("configs"));
    meta.batch_sizes = m.at("batch_sizes").get<std::vector<std::size_t>>();
    for (const json& e : j.at("entries")) {
      const auto tag = e.at("config").get<std::string>();
      const auto c = parse_config(tag);
      if (!c) fail(ErrorCode::Parse, "unknown configuration tag '" + tag + "'");
      const ProfileKey key{e.at("layer").get<std::size_t>(), *c, e.at("batch").get<std::size_t>()};
      ProfileEntry entry{e.at("overhead_ns").get<std::int64_t>(), e.at("compute_ns").get<std::int64_t>(),
                         e.at("reps").get<std::size_t>(), e.at("spread").get<double>()};
      if (entry.overhead_ns < 0 || entry.compute_ns < 0) fail(ErrorCode::Parse, "negative time in profile entry");
      if (!t.entries.emplace(key, entry).second) fail(ErrorCode::Parse, "duplicate profile entry");
    }
    return t;
  });
}

void save_profile(const ProfileTable& table, const std::filesystem::path& path) {
  write_file(path, serialize_profile(table));
}

ProfileTable load_profile(const std::filesystem::path& path) { return parse_profile(read_file(path)); }

}  // namespace bnn
