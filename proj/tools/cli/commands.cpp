#include "commands.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bnn/layers.hpp"

namespace bnn::cli {

namespace {

using json = nlohmann::json;

std::string host_description(std::size_t workers) {
  char name[256] = {};
  if (gethostname(name, sizeof(name) - 1) != 0) std::snprintf(name, sizeof(name), "unknown");
  return std::string(name) + " (hardware threads " + std::to_string(default_worker_count()) + ", workers " +
         std::to_string(workers) + ")";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double to_ms(std::int64_t ns) { return static_cast<double>(ns) / 1e6; }

std::string format_ms(std::int64_t ns) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << to_ms(ns);
  return os.str();
}

Dataset load_nonempty(const std::filesystem::path& path, const ModelSpec& model) {
  Dataset data = load_dataset(path, model.input, model.num_classes);
  if (data.size() == 0) fail(ErrorCode::InvalidArgument, "dataset " + path.string() + " has no images");
  return data;
}

struct Profiled {
  ProfileTable table;
  std::vector<std::string> warnings;
};

Profiled profile_for(Engine& engine, const PreparedModel& prepared, const Dataset& data, const TuneOptions& options,
                     std::ostream* progress) {
  ProfileRequest request;
  request.batch_sizes = batch_sweep(options.batch_lower, options.batch_upper);
  request.warmups = options.warmups;
  request.reps = options.reps;

  Profiled out;
  const auto& layers = prepared.spec().layers;
  if (progress) {
    *progress << "profiling " << layers.size() << " layers at " << request.batch_sizes.size() << " batch size(s), "
              << request.reps << " round(s)\n"
              << std::flush;
  }
  out.table = profile_model(engine, prepared, data.images, request, [&](const ProfileKey& key, const ProfileEntry& e) {
    const std::string where = "layer " + std::to_string(key.layer + 1) + " (" + layer_label(layers[key.layer]) +
                              ") " + std::string(to_string(key.config)) + " batch " + std::to_string(key.batch);
    if (e.unstable()) {
      std::ostringstream os;
      os << "unstable measurement: " << where << " spread " << std::setprecision(3) << e.spread;
      out.warnings.push_back(os.str());
    }
    if (progress) {
      *progress << "  " << where << ": overhead " << format_ms(e.overhead_ns) << " ms, compute "
                << format_ms(e.compute_ns) << " ms\n";
    }
  });
  out.table.metadata.model_hash = model_hash(prepared.spec());
  out.table.metadata.host = host_description(engine.workers());
  out.table.metadata.timestamp = utc_timestamp();
  return out;
}

json plan_json(const ExecPlan& plan) { return json::parse(serialize_plan(plan)); }

void refuse_overwrite(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    fail(ErrorCode::AlreadyExists, path.string() + " already exists (use --force to overwrite)");
  }
}

}  // namespace

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return 2;
    case ErrorCode::Parse: return 3;
    case ErrorCode::Validation: return 4;
    case ErrorCode::UnsupportedVersion: return 5;
    case ErrorCode::IncompleteTable: return 6;
    case ErrorCode::ModelHashMismatch: return 7;
    case ErrorCode::BadRange: return 8;
    case ErrorCode::LabelOutOfRange: return 9;
    case ErrorCode::LengthMismatch:
    case ErrorCode::NonBinaryValue:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::OddSpatialDim:
    case ErrorCode::ConfigNotApplicable: return 10;
    case ErrorCode::InvalidArgument: return 11;
    case ErrorCode::AlreadyExists: return 12;
  }
  return 13;
}

EngineConfig EngineFlags::engine_config() const {
  EngineConfig c;
  c.workers = threads;
  c.window_rows = window_rows;
  c.fuse_transfers = fuse_transfers;
  return c;
}

std::string layer_label(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::ConvInt:
    case LayerKind::ConvBin: return "C" + std::to_string(layer.out_channels);
    case LayerKind::MaxPool: return "MP" + std::to_string(layer.out_shape.rows);
    case LayerKind::Step: return "S";
    case LayerKind::Flatten: return "FLAT";
    case LayerKind::FcBin: return "FC" + std::to_string(layer.out_shape.channels);
    case LayerKind::FcIntOut: return "FC" + std::to_string(layer.in_shape.channels) + "->" +
                                     std::to_string(layer.out_shape.channels);
  }
  return "?";
}

std::string render_plan_summary(const ModelSpec& model, const ExecPlan& plan) {
  std::ostringstream os;
  os << "# Efficient configuration for " << model.name << "\n\n";
  os << "batch size " << plan.batch_size << ", workers " << plan.workers << ", predicted "
     << format_ms(plan.predicted_batch_ns) << " ms per batch, " << format_ms(plan.predicted_total_ns) << " ms for "
     << plan.dataset_images << " images\n\n";
  os << "| layer |";
  for (const auto& l : model.layers) os << ' ' << layer_label(l) << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < model.layers.size(); ++i) os << "---|";
  os << "\n| config |";
  for (ParallelConfig c : plan.assignments) os << ' ' << to_string(c) << " |";
  os << "\n";
  return os.str();
}

TuneResult tune(const TuneOptions& options, std::ostream* progress) {
  const ModelSpec model = load_model(options.model);
  const Dataset data = load_nonempty(options.data, model);
  const PreparedModel prepared(model);
  Engine engine(options.engine.engine_config());

  Profiled p = profile_for(engine, prepared, data, options, progress);
  TuneResult r;
  r.plan = select_plan(p.table, model, MapperOptions{options.tie_tolerance});
  r.table = std::move(p.table);
  r.warnings = std::move(p.warnings);
  return r;
}

DatasetRun execute_dataset(Engine& engine, const PreparedModel& model, const Dataset& data,
                           const std::vector<ParallelConfig>& assignments, std::size_t batch_size) {
  if (data.size() == 0) fail(ErrorCode::InvalidArgument, "cannot run an empty dataset");
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  DatasetRun run;
  run.images = data.size();
  run.batch_size = batch_size;
  run.per_layer.assign(model.layers().size(), {});
  run.predictions.reserve(data.size());

  const auto clock = steady_clock();
  const std::int64_t t0 = clock();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    const PlannedInference r = engine.infer(model, assignments, take_batch(data.images, start, n));
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
      run.per_layer[i].overhead_ns += r.layers[i].overhead_ns;
      run.per_layer[i].compute_ns += r.layers[i].compute_ns;
    }
    run.predictions.insert(run.predictions.end(), r.result.predictions.begin(), r.result.predictions.end());
    run.batches.push_back(n);
  }
  run.total_ns = clock() - t0;

  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += run.predictions[i] == data.labels[i];
  run.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return run;
}

RunReport run(const RunOptions& options) {
  RunReport report;
  const ModelSpec model = load_model(options.model);
  report.plan = load_plan(options.plan, model);
  const Dataset data = load_nonempty(options.data, model);
  const PreparedModel prepared(model);

  EngineConfig config;
  config.workers = options.threads.value_or(report.plan.workers);
  config.window_rows = options.window_rows.value_or(report.plan.window_rows);
  config.fuse_transfers = options.fuse_transfers;
  if (config.workers != report.plan.workers) {
    report.warnings.push_back("running with " + std::to_string(config.workers) + " workers; plan was tuned with " +
                              std::to_string(report.plan.workers));
  }
  Engine engine(config);
  report.run = execute_dataset(engine, prepared, data, report.plan.assignments, report.plan.batch_size);
  return report;
}

std::string CompareReport::csv() const {
  std::ostringstream os;
  os << "batch,cpu_only_ns,naive_x_ns,full_xyz_ns,efficient_ns\n";
  for (const auto& r : rows) {
    os << r.batch << ',' << r.cpu_only_ns << ',' << r.naive_x_ns << ',' << r.full_xyz_ns << ',' << r.efficient_ns
       << '\n';
  }
  return os.str();
}

std::string CompareReport::markdown() const {
  std::ostringstream os;
  os << "| batch | CPU only (ms) | naive X (ms) | full XYZ (ms) | efficient (ms) | fastest |\n";
  os << "|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    const std::array<std::pair<const char*, std::int64_t>, 4> series = {
        {{"CPU only", r.cpu_only_ns}, {"naive X", r.naive_x_ns}, {"full XYZ", r.full_xyz_ns}, {"efficient", r.efficient_ns}}};
    const auto win = std::min_element(series.begin(), series.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
    os << "| " << r.batch << (r.batch == plan.batch_size ? " (plan)" : "") << " | " << format_ms(r.cpu_only_ns)
       << " | " << format_ms(r.naive_x_ns) << " | " << format_ms(r.full_xyz_ns) << " | " << format_ms(r.efficient_ns)
       << " | " << win->first << " |\n";
  }
  return os.str();
}

CompareReport compare(const CompareOptions& options, std::ostream* progress) {
  const TuneOptions& t = options.tune;
  const ModelSpec model = load_model(t.model);
  const Dataset data = load_nonempty(t.data, model);
  const PreparedModel prepared(model);
  Engine engine(t.engine.engine_config());

  CompareReport report;
  ProfileTable table;
  if (options.profile) {
    table = load_profile(*options.profile);
    if (table.metadata.model_hash != model_hash(model)) {
      fail(ErrorCode::ModelHashMismatch, "profile " + options.profile->string() + " was recorded for another model");
    }
  } else {
    Profiled p = profile_for(engine, prepared, data, t, progress);
    table = std::move(p.table);
    report.warnings = std::move(p.warnings);
  }
  const MapperOptions mapper{t.tie_tolerance};
  report.plan = select_plan(table, model, mapper);
  const auto kinds = layer_kinds(model);
  const auto choices = per_batch_choices(table, kinds, mapper);
  const Baselines base = baseline_plans(model);
  const std::size_t reps = std::max<std::size_t>(1, options.measure_reps);

  for (const BatchChoice& choice : choices) {
    const std::array<const std::vector<ParallelConfig>*, 4> strategies = {&base.cpu_only, &base.naive_x,
                                                                          &base.full_xyz, &choice.assignments};
    std::array<std::vector<std::int64_t>, 4> times;
    // Interleave strategies so slow drift affects all of them alike.
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        times[s].push_back(execute_dataset(engine, prepared, data, *strategies[s], choice.batch).total_ns);
      }
    }
    CompareRow row{choice.batch, median(times[0]), median(times[1]), median(times[2]), median(times[3]),
                   choice.assignments};
    if (progress) {
      *progress << "  batch " << row.batch << ": cpu " << format_ms(row.cpu_only_ns) << " ms, naive X "
                << format_ms(row.naive_x_ns) << " ms, full XYZ " << format_ms(row.full_xyz_ns) << " ms, efficient "
                << format_ms(row.efficient_ns) << " ms\n";
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace {

void add_engine_flags(CLI::App* cmd, EngineFlags& flags) {
  cmd->add_option("--threads", flags.threads, "Worker threads in the parallel pool")->check(CLI::PositiveNumber);
  cmd->add_option("--window-rows", flags.window_rows, "Output rows per Window (Y) work item")->check(CLI::PositiveNumber);
  cmd->add_flag("--fuse-transfers", flags.fuse_transfers, "Skip per-layer staging copies where possible");
}

void add_tune_flags(CLI::App* cmd, TuneOptions& o) {
  cmd->add_option("--model", o.model, "Model file (*.model.json)")->required();
  cmd->add_option("--data", o.data, "Dataset CSV (label, pixels...)")->required();
  cmd->add_option("--batch-lower", o.batch_lower, "Smallest batch size exponent (batch 2^lower)");
  cmd->add_option("--batch-upper", o.batch_upper, "Largest batch size exponent (batch 2^upper)");
  cmd->add_option("--warmups", o.warmups, "Discarded warmup runs per cell");
  cmd->add_option("--reps", o.reps, "Timed repetitions per cell (median reported)")->check(CLI::PositiveNumber);
  cmd->add_option("--tie-tolerance", o.tie_tolerance,
                  "Slack on predicted time relative to the optimum (0 = exact minimum)")
      ->check(CLI::Range(0.0, 1.0));
  add_engine_flags(cmd, o.engine);
}

std::filesystem::path out_file(const std::filesystem::path& dir, const std::string& name, const char* suffix) {
  return dir / (name + suffix);
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binarized neural network inference engine with layer-wise autotuning"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable JSON reports on stdout");

  // gen-model
  std::string arch = "fashion";
  std::uint64_t seed = 1;
  std::filesystem::path out_path;
  bool force = false;
  auto* gen_model = app.add_subcommand("gen-model", "Write a model with random weights and thresholds");
  gen_model->add_option("--arch", arch, "fashion | cifar10")->check(CLI::IsMember({"fashion", "cifar10"}));
  gen_model->add_option("--seed", seed, "Random seed");
  gen_model->add_option("--out", out_path, "Output path")->required();
  gen_model->add_flag("--force", force, "Overwrite an existing file");

  // gen-data
  std::size_t count = 1000;
  std::filesystem::path model_path;
  auto* gen_data = app.add_subcommand("gen-data", "Write a CSV dataset of random images and labels");
  gen_data->add_option("--model", model_path, "Model whose input shape to use")->required();
  gen_data->add_option("--count", count, "Number of images");
  gen_data->add_option("--seed", seed, "Random seed");
  gen_data->add_option("--out", out_path, "Output path")->required();
  gen_data->add_flag("--force", force, "Overwrite an existing file");

  // validate
  std::filesystem::path data_path;
  auto* validate = app.add_subcommand("validate", "Check a model (and optionally a dataset) for consistency");
  validate->add_option("--model", model_path, "Model file")->required();
  validate->add_option("--data", data_path, "Dataset CSV");

  // tune
  TuneOptions tune_opts;
  std::filesystem::path outpath = ".";
  auto* tune_cmd = app.add_subcommand("tune", "Profile every layer and write the fastest plan");
  add_tune_flags(tune_cmd, tune_opts);
  tune_cmd->add_option("--outpath", outpath, "Directory for plan, profile and summary files");

  // run
  RunOptions run_opts;
  std::filesystem::path predictions_path;
  std::size_t run_threads = 0, run_window_rows = 0;
  auto* run_cmd = app.add_subcommand("run", "Execute a dataset with a tuned plan");
  run_cmd->add_option("--plan", run_opts.plan, "Plan file (*.plan.json)")->required();
  run_cmd->add_option("--model", run_opts.model, "Model file")->required();
  run_cmd->add_option("--data", run_opts.data, "Dataset CSV")->required();
  run_cmd->add_option("--threads", run_threads, "Worker threads (default: the tuned count)");
  run_cmd->add_option("--window-rows", run_window_rows, "Output rows per Window (Y) work item (default: tuned)");
  run_cmd->add_flag("--fuse-transfers", run_opts.fuse_transfers, "Skip per-layer staging copies where possible");
  run_cmd->add_option("--predictions", predictions_path, "Write one predicted class per line");

  // compare
  CompareOptions cmp_opts;
  std::filesystem::path profile_path;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare CPU-only, naive X, full XYZ and the tuned plan");
  add_tune_flags(cmp_cmd, cmp_opts.tune);
  cmp_cmd->add_option("--profile", profile_path, "Reuse a recorded profile table instead of profiling");
  cmp_cmd->add_option("--measure-reps", cmp_opts.measure_reps, "Full-dataset passes per cell (median)")
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--outpath", outpath, "Directory for the CSV and markdown reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_model) {
      refuse_overwrite(out_path, force);
      const ModelSpec m = export_synthetic_model(*parse_architecture(arch), seed);
      save_model(m, out_path);
      if (as_json) {
        out << json{{"model", out_path.string()}, {"layers", m.layers.size()}, {"hash", model_hash(m)}}.dump(2) << '\n';
      } else {
        out << "wrote " << out_path.string() << " (" << m.name << ", " << m.layers.size() << " layers)\n";
      }
    } else if (*gen_data) {
      refuse_overwrite(out_path, force);
      const ModelSpec m = load_model(model_path);
      save_dataset(synthetic_dataset(m.input, count, m.num_classes, seed), out_path);
      if (as_json) {
        out << json{{"data", out_path.string()}, {"images", count}}.dump(2) << '\n';
      } else {
        out << "wrote " << out_path.string() << " (" << count << " images)\n";
      }
    } else if (*validate) {
      const ModelSpec m = load_model(model_path);
      std::size_t images = 0;
      if (!data_path.empty()) images = load_dataset(data_path, m.input, m.num_classes).size();
      if (as_json) {
        json j{{"ok", true}, {"name", m.name}, {"layers", m.layers.size()}, {"hash", model_hash(m)}};
        if (!data_path.empty()) j["images"] = images;
        out << j.dump(2) << '\n';
      } else {
        out << "ok: " << m.name << ", " << m.layers.size() << " layers, hash " << model_hash(m) << '\n';
        if (!data_path.empty()) out << "ok: " << data_path.string() << ", " << images << " images\n";
      }
    } else if (*tune_cmd) {
      const TuneResult r = tune(tune_opts, as_json ? nullptr : &err);
      const ModelSpec m = load_model(tune_opts.model);
      std::filesystem::create_directories(outpath);
      const auto plan_file = out_file(outpath, m.name, ".plan.json");
      const auto profile_file = out_file(outpath, m.name, ".profile.json");
      const auto summary_file = out_file(outpath, m.name, ".summary.md");
      save_plan(r.plan, plan_file);
      save_profile(r.table, profile_file);
      const std::string summary = render_plan_summary(m, r.plan);
      write_file(summary_file, summary);
      for (const auto& w : r.warnings) err << "warning: " << w << '\n';
      if (as_json) {
        out << json{{"plan", plan_json(r.plan)},
                    {"files", {{"plan", plan_file.string()}, {"profile", profile_file.string()},
                               {"summary", summary_file.string()}}},
                    {"warnings", r.warnings}}
                   .dump(2)
            << '\n';
      } else {
        out << summary << "\nwrote " << plan_file.string() << ", " << profile_file.string() << ", "
            << summary_file.string() << '\n';
      }
    } else if (*run_cmd) {
      if (run_threads > 0) run_opts.threads = run_threads;
      if (run_window_rows > 0) run_opts.window_rows = run_window_rows;
      const RunReport r = run(run_opts);
      for (const auto& w : r.warnings) err << "warning: " << w << '\n';
      if (!predictions_path.empty()) {
        std::string text;
        for (std::size_t p : r.run.predictions) text += std::to_string(p) + '\n';
        write_file(predictions_path, text);
      }
      const ModelSpec m = load_model(run_opts.model);
      if (as_json) {
        json layers = json::array();
        for (std::size_t i = 0; i < r.run.per_layer.size(); ++i) {
          layers.push_back({{"layer", i + 1},
                            {"label", layer_label(m.layers[i])},
                            {"config", std::string(to_string(r.plan.assignments[i]))},
                            {"overhead_ns", r.run.per_layer[i].overhead_ns},
                            {"compute_ns", r.run.per_layer[i].compute_ns}});
        }
        out << json{{"images", r.run.images},
                    {"batch_size", r.run.batch_size},
                    {"batches", r.run.batches.size()},
                    {"total_ns", r.run.total_ns},
                    {"predicted_total_ns", r.plan.predicted_total_ns},
                    {"accuracy", r.run.accuracy},
                    {"layers", layers},
                    {"warnings", r.warnings}}
                   .dump(2)
            << '\n';
      } else {
        out << "images " << r.run.images << " in " << r.run.batches.size() << " batches of " << r.run.batch_size
            << "\ntotal " << format_ms(r.run.total_ns) << " ms (predicted " << format_ms(r.plan.predicted_total_ns)
            << " ms)\naccuracy " << std::fixed << std::setprecision(4) << r.run.accuracy << "\n\n";
        out << "| layer | config | overhead (ms) | compute (ms) |\n|---|---|---:|---:|\n";
        for (std::size_t i = 0; i < r.run.per_layer.size(); ++i) {
          out << "| " << i + 1 << ' ' << layer_label(m.layers[i]) << " | " << to_string(r.plan.assignments[i]) << " | "
              << format_ms(r.run.per_layer[i].overhead_ns) << " | " << format_ms(r.run.per_layer[i].compute_ns)
              << " |\n";
        }
      }
    } else if (*cmp_cmd) {
      if (!profile_path.empty()) cmp_opts.profile = profile_path;
      const CompareReport r = compare(cmp_opts, as_json ? nullptr : &err);
      const ModelSpec m = load_model(cmp_opts.tune.model);
      std::filesystem::create_directories(outpath);
      const auto csv_file = out_file(outpath, m.name, ".compare.csv");
      const auto md_file = out_file(outpath, m.name, ".compare.md");
      write_file(csv_file, r.csv());
      write_file(md_file, r.markdown());
      for (const auto& w : r.warnings) err << "warning: " << w << '\n';
      if (as_json) {
        json rows = json::array();
        for (const auto& row : r.rows) {
          rows.push_back({{"batch", row.batch},
                          {"cpu_only_ns", row.cpu_only_ns},
                          {"naive_x_ns", row.naive_x_ns},
                          {"full_xyz_ns", row.full_xyz_ns},
                          {"efficient_ns", row.efficient_ns}});
        }
        out << json{{"plan", plan_json(r.plan)}, {"rows", rows}, {"csv", csv_file.string()},
                    {"markdown", md_file.string()}}
                   .dump(2)
            << '\n';
      } else {
        out << r.markdown() << "\nwrote " << csv_file.string() << ", " << md_file.string() << '\n';
      }
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [Io]: " << e.what() << '\n';
    return exit_code(ErrorCode::Io);
  }
  return 0;
}

}  // namespace bnn::cli
